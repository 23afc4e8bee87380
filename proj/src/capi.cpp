/*
 * Copyright 2026 The sysid Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sysid/sysid.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include <openssl/evp.h>

#include "analysis.hpp"
#include "checkpoint.hpp"
#include "data.hpp"
#include "errors.hpp"
#include "hyperopt.hpp"
#include "model.hpp"
#include "text.hpp"
#include "training.hpp"

struct sysid_dataset {
  sysid::Dataset data;
};

struct sysid_model {
  std::unique_ptr<sysid::Model> model;
  std::optional<sysid::Normalization> normalization;
};

struct sysid_kernels {
  sysid::VolterraKernels kernels;
};

struct sysid_grid {
  sysid::GridSpace space;
  sysid::GridResult result;
};

namespace {

thread_local std::string last_error;

sysid_status status_of(sysid::ErrorKind kind) {
  using sysid::ErrorKind;
  switch (kind) {
    case ErrorKind::dimension: return SYSID_ERR_DIMENSION;
    case ErrorKind::parameter: return SYSID_ERR_PARAMETER;
    case ErrorKind::config: return SYSID_ERR_CONFIG;
    case ErrorKind::data: return SYSID_ERR_DATA;
    case ErrorKind::parse: return SYSID_ERR_PARSE;
    case ErrorKind::schema: return SYSID_ERR_SCHEMA;
    case ErrorKind::io: return SYSID_ERR_IO;
    case ErrorKind::degenerate: return SYSID_ERR_DEGENERATE;
    case ErrorKind::unsupported: return SYSID_ERR_UNSUPPORTED;
    case ErrorKind::numeric: return SYSID_ERR_NUMERIC;
  }
  return SYSID_ERR_INTERNAL;
}

template <class F>
sysid_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return SYSID_OK;
  } catch (const sysid::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SYSID_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SYSID_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw sysid::ParameterError(std::string(what) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> names(const char* list) {
  std::vector<std::string> out;
  if (!list) return out;
  for (auto part : sysid::split(list, ',')) {
    auto t = sysid::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

// Dataset in the model's working units.
sysid::Dataset prepared(const sysid_model* m, const sysid::Dataset& d) {
  return m->normalization ? sysid::normalize_dataset(d, *m->normalization) : d;
}

}  // namespace

extern "C" {

const char* sysid_version(void) { return SYSID_VERSION; }

const char* sysid_last_error(void) { return last_error.c_str(); }

const char* sysid_status_name(sysid_status status) {
  switch (status) {
    case SYSID_OK: return "ok";
    case SYSID_ERR_DIMENSION: return "dimension error";
    case SYSID_ERR_PARAMETER: return "parameter error";
    case SYSID_ERR_CONFIG: return "config error";
    case SYSID_ERR_DATA: return "data error";
    case SYSID_ERR_PARSE: return "parse error";
    case SYSID_ERR_SCHEMA: return "schema error";
    case SYSID_ERR_IO: return "io error";
    case SYSID_ERR_DEGENERATE: return "degenerate error";
    case SYSID_ERR_UNSUPPORTED: return "unsupported operation";
    case SYSID_ERR_NUMERIC: return "numeric failure";
    case SYSID_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void sysid_string_free(char* s) { std::free(s); }

uint64_t sysid_derive_seed(uint64_t seed, uint64_t stream) { return sysid::mix_seed(seed, stream); }

sysid_status sysid_dataset_chen(size_t records, size_t length, double sigma_v, double sigma_w, uint64_t seed,
                                size_t hold, sysid_dataset** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto d = std::make_unique<sysid_dataset>();
    d->data = sysid::make_chen_dataset(records, length, sysid::NoiseSpec{sigma_v, sigma_w, seed}, hold);
    *out = d.release();
  });
}

sysid_status sysid_dataset_load_csv(const char* path, const char* inputs, const char* outputs, sysid_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    sysid::ColumnMap map{names(inputs), names(outputs), {}};
    if (map.inputs.empty() != map.outputs.empty())
      throw sysid::ParameterError("give both input and output column names, or neither");
    auto d = std::make_unique<sysid_dataset>();
    d->data = sysid::load_csv_dataset(path, map);
    *out = d.release();
  });
}

sysid_status sysid_dataset_save_csv(const sysid_dataset* dataset, const char* path) {
  return guarded([&] {
    require(dataset, "dataset");
    require(path, "path");
    sysid::save_csv_dataset(dataset->data, path);
  });
}

size_t sysid_dataset_records(const sysid_dataset* d) { return d ? d->data.records.size() : 0; }
size_t sysid_dataset_inputs(const sysid_dataset* d) { return d ? d->data.num_inputs() : 0; }
size_t sysid_dataset_outputs(const sysid_dataset* d) { return d ? d->data.num_outputs() : 0; }
size_t sysid_dataset_samples(const sysid_dataset* d) { return d ? d->data.total_samples() : 0; }

sysid_status sysid_dataset_normalization(const sysid_dataset* training, char** json_out) {
  return guarded([&] {
    require(training, "training");
    require(json_out, "json_out");
    *json_out = copy_string(nlohmann::json(sysid::compute_normalization(training->data)).dump());
  });
}

void sysid_dataset_free(sysid_dataset* dataset) { delete dataset; }

sysid_status sysid_model_create(const char* config_json, uint64_t seed, sysid_model** out) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out, "out");
    *out = nullptr;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw sysid::ConfigError(std::string("model config is not valid JSON: ") + e.what());
    }
    sysid::Rng rng(seed);
    auto m = std::make_unique<sysid_model>();
    m->model = sysid::build_model(sysid::model_config_from_json(j), rng);
    *out = m.release();
  });
}

sysid_status sysid_model_load(const char* path, sysid_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto ck = sysid::load_checkpoint(path);
    *out = new sysid_model{std::move(ck.model), std::move(ck.normalization)};
  });
}

sysid_status sysid_model_save(const sysid_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    sysid::save_checkpoint(path, *model->model, model->normalization);
  });
}

sysid_status sysid_model_config(const sysid_model* model, char** json_out) {
  return guarded([&] {
    require(model, "model");
    require(json_out, "json_out");
    *json_out = copy_string(nlohmann::json(model->model->config()).dump());
  });
}

sysid_status sysid_model_receptive_field(const sysid_model* model, size_t* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = model->model->receptive_field();
  });
}

size_t sysid_model_parameter_count(const sysid_model* model) { return model ? model->model->parameter_count() : 0; }

sysid_status sysid_model_set_normalization(sysid_model* model, const char* json) {
  return guarded([&] {
    require(model, "model");
    if (!json) {
      model->normalization.reset();
      return;
    }
    sysid::Normalization n;
    try {
      n = nlohmann::json::parse(json).get<sysid::Normalization>();
    } catch (const nlohmann::json::exception& e) {
      throw sysid::ParseError(std::string("normalization: ") + e.what());
    }
    const auto& c = model->model->config();
    if (n.u_mean.size() != c.num_inputs || n.y_mean.size() != c.num_outputs)
      throw sysid::SchemaError("normalization channel counts do not match the model");
    model->normalization = std::move(n);
  });
}

sysid_status sysid_model_normalization(const sysid_model* model, char** json_out) {
  return guarded([&] {
    require(model, "model");
    require(json_out, "json_out");
    *json_out = copy_string(model->normalization ? nlohmann::json(*model->normalization).dump() : "null");
  });
}

void sysid_model_free(sysid_model* model) { delete model; }

sysid_status sysid_train(sysid_model* model, const sysid_dataset* training, const sysid_dataset* validation,
                         const char* train_config_json, sysid_epoch_fn on_epoch, void* user,
                         char** history_csv_out) {
  return guarded([&] {
    require(model, "model");
    require(training, "training");
    if (history_csv_out) *history_csv_out = nullptr;
    nlohmann::json j = nlohmann::json::object();
    if (train_config_json) {
      try {
        j = nlohmann::json::parse(train_config_json);
      } catch (const nlohmann::json::parse_error& e) {
        throw sysid::ConfigError(std::string("train config is not valid JSON: ") + e.what());
      }
    }
    const auto config = sysid::train_config_from_json(j);
    const auto train_set = prepared(model, training->data);
    std::optional<sysid::Dataset> valid_set;
    if (validation) valid_set = prepared(model, validation->data);
    sysid::EpochCallback callback;
    if (on_epoch)
      callback = [&](const sysid::EpochRecord& r) {
        const sysid_epoch e{r.epoch, r.train_loss, r.valid_loss, r.lr, r.seconds};
        on_epoch(&e, user);
      };
    try {
      const auto history =
          sysid::train(*model->model, train_set, valid_set ? &*valid_set : nullptr, config, callback);
      if (history_csv_out) *history_csv_out = copy_string(history.to_csv());
    } catch (const sysid::DivergenceError& e) {
      if (history_csv_out) *history_csv_out = copy_string(e.history().to_csv());
      throw;
    }
  });
}

sysid_status sysid_evaluate(const sysid_model* model, const sysid_dataset* dataset, const char* mode, size_t skip,
                            char** report_json_out, char** predictions_csv_out) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(mode, "mode");
    const auto ev = sysid::evaluate(*model->model, prepared(model, dataset->data), sysid::parse_eval_mode(mode), skip);
    if (report_json_out) *report_json_out = copy_string(nlohmann::json(ev.report).dump(2));
    if (predictions_csv_out) {
      const std::size_t ny = dataset->data.num_outputs();
      std::string csv = "record,sample";
      for (std::size_t c = 0; c < ny; ++c) csv += ",yhat" + std::to_string(c + 1);
      for (std::size_t c = 0; c < ny; ++c) csv += ",y" + std::to_string(c + 1);
      csv += "\n";
      for (std::size_t r = 0; r < ev.predictions.size(); ++r) {
        const auto& pred = ev.predictions[r];
        const auto& y = dataset->data.records[r].y;
        for (std::size_t k = 0; k < pred.dim(1); ++k) {
          csv += std::to_string(r) + "," + std::to_string(k);
          for (std::size_t c = 0; c < ny; ++c) csv += "," + sysid::format_double(pred.at(c, k));
          for (std::size_t c = 0; c < ny; ++c) csv += "," + sysid::format_double(y.at(c, k));
          csv += "\n";
        }
      }
      *predictions_csv_out = copy_string(csv);
    }
  });
}

sysid_status sysid_error_spectrum(const sysid_model* model, const sysid_dataset* dataset, const char* mode,
                                  int use_band, double f_lo, double f_hi, char** csv_out) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(mode, "mode");
    require(csv_out, "csv_out");
    const auto ev = sysid::evaluate(*model->model, prepared(model, dataset->data), sysid::parse_eval_mode(mode));
    const std::size_t ny = dataset->data.num_outputs();
    std::string csv = "record,frequency_hz";
    for (std::size_t c = 0; c < ny; ++c) csv += ",magnitude" + std::to_string(c + 1);
    csv += "\n";
    for (std::size_t r = 0; r < ev.predictions.size(); ++r) {
      const auto& rec = dataset->data.records[r];
      std::vector<sysid::Spectrum> spectra;
      for (std::size_t c = 0; c < ny; ++c) {
        std::vector<double> err(rec.length());
        for (std::size_t k = 0; k < err.size(); ++k) err[k] = ev.predictions[r].at(c, k) - rec.y.at(c, k);
        auto s = sysid::error_spectrum(err, rec.sample_rate);
        spectra.push_back(use_band ? sysid::select_band(s, f_lo, f_hi) : std::move(s));
      }
      for (std::size_t k = 0; k < spectra.front().frequency.size(); ++k) {
        csv += std::to_string(r) + "," + sysid::format_double(spectra.front().frequency[k]);
        for (const auto& s : spectra) csv += "," + sysid::format_double(s.magnitude[k]);
        csv += "\n";
      }
    }
    *csv_out = copy_string(csv);
  });
}

sysid_status sysid_volterra_extract(const sysid_model* model, int degree, int expand_at_zero, sysid_kernels** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = nullptr;
    const auto point = expand_at_zero ? sysid::ExpansionPoint::zero : sysid::ExpansionPoint::bias;
    *out = new sysid_kernels{sysid::extract_volterra_kernels(*model->model, degree, point)};
  });
}

sysid_status sysid_volterra_oracle(const sysid_model* model, int degree, double amplitude, sysid_kernels** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = nullptr;
    *out = new sysid_kernels{sysid::fd_volterra_oracle(*model->model, degree, amplitude)};
  });
}

sysid_status sysid_kernels_csv(const sysid_kernels* kernels, int order, char** csv_out) {
  return guarded([&] {
    require(kernels, "kernels");
    require(csv_out, "csv_out");
    const auto& k = kernels->kernels;
    if (order < 0 || order > k.degree) throw sysid::ParameterError("kernel order out of range");
    *csv_out = copy_string(order == 0 ? sysid::kernel_h0_csv(k)
                                      : order == 1 ? sysid::kernel_h1_csv(k) : sysid::kernel_h2_csv(k));
  });
}

size_t sysid_kernels_memory(const sysid_kernels* kernels) { return kernels ? kernels->kernels.memory : 0; }

double sysid_kernels_max_magnitude(const sysid_kernels* kernels) {
  return kernels ? sysid::max_kernel_magnitude(kernels->kernels) : 0.0;
}

sysid_status sysid_kernels_max_difference(const sysid_kernels* a, const sysid_kernels* b, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = sysid::max_kernel_difference(a->kernels, b->kernels);
  });
}

void sysid_kernels_free(sysid_kernels* kernels) { delete kernels; }

namespace {

sysid::GridSpace parse_grid(const char* grid_json) {
  require(grid_json, "grid_json");
  try {
    return sysid::grid_space_from_json(nlohmann::ordered_json::parse(grid_json));
  } catch (const nlohmann::ordered_json::parse_error& e) {
    throw sysid::ParseError(std::string("grid document is not valid JSON: ") + e.what());
  }
}

}  // namespace

sysid_status sysid_grid_size(const char* grid_json, size_t* out) {
  return guarded([&] {
    require(out, "out");
    const auto space = parse_grid(grid_json);
    *out = sysid::grid_expand(space).size() * space.repetitions;
  });
}

sysid_status sysid_grid_run(const char* grid_json, const sysid_dataset* training, const sysid_dataset* validation,
                            size_t jobs, uint64_t seed, const char* journal_path, int normalize, sysid_grid** out) {
  return guarded([&] {
    require(training, "training");
    require(validation, "validation");
    require(out, "out");
    *out = nullptr;
    auto g = std::make_unique<sysid_grid>();
    g->space = parse_grid(grid_json);
    sysid::GridOptions options;
    options.jobs = jobs;
    options.seed = seed;
    if (journal_path) options.journal = std::filesystem::path(journal_path);
    if (normalize) {
      const auto n = sysid::compute_normalization(training->data);
      g->result = sysid::run_grid(g->space, sysid::normalize_dataset(training->data, n),
                                  sysid::normalize_dataset(validation->data, n), options);
    } else {
      g->result = sysid::run_grid(g->space, training->data, validation->data, options);
    }
    *out = g.release();
  });
}

sysid_status sysid_grid_csv(const sysid_grid* grid, char** csv_out) {
  return guarded([&] {
    require(grid, "grid");
    require(csv_out, "csv_out");
    *csv_out = copy_string(grid->result.to_csv());
  });
}

sysid_status sysid_grid_best(const sysid_grid* grid, const char* metric, char** row_json_out) {
  return guarded([&] {
    require(grid, "grid");
    require(metric, "metric");
    require(row_json_out, "row_json_out");
    const auto& row = sysid::select_best(grid->result, sysid::parse_metric(metric));
    const auto config = sysid::grid_expand(grid->space).at(row.index);
    nlohmann::ordered_json point = nlohmann::ordered_json::object();
    for (std::size_t a = 0; a < grid->result.axes.size(); ++a)
      point[grid->result.axes[a]] = nlohmann::ordered_json::parse(row.point[a].dump());
    nlohmann::ordered_json j;
    j["index"] = row.index;
    j["repetition"] = row.repetition;
    j["point"] = point;
    j["one_step_rmse"] = row.one_step_rmse;
    j["free_run_rmse"] = row.free_run_rmse;
    j["best_epoch"] = row.best_epoch;
    j["parameters"] = row.parameters;
    j["seed"] = row.seed;
    j["model"] = nlohmann::ordered_json::parse(nlohmann::json(config.model).dump());
    j["train"] = nlohmann::ordered_json::parse(nlohmann::json(config.train).dump());
    *row_json_out = copy_string(j.dump(2));
  });
}

sysid_status sysid_grid_boxplot(const sysid_grid* grid, const char* axis, const char* metric, char** csv_out) {
  return guarded([&] {
    require(grid, "grid");
    require(axis, "axis");
    require(metric, "metric");
    require(csv_out, "csv_out");
    *csv_out = copy_string(
        sysid::boxplot_csv(sysid::marginal_boxplot(grid->result, axis, sysid::parse_metric(metric)), axis));
  });
}

void sysid_grid_free(sysid_grid* grid) { delete grid; }

sysid_status sysid_file_sha256(const char* path, char** hex_out) {
  return guarded([&] {
    require(path, "path");
    require(hex_out, "hex_out");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sysid::IoError(std::string("cannot open '") + path + "' for reading");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
      throw sysid::IoError("sha256: digest initialization failed");
    char buf[1 << 16];
    while (in) {
      in.read(buf, sizeof(buf));
      if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    if (in.bad()) throw sysid::IoError(std::string("failed reading '") + path + "'");
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < len; ++i) {
      s += hex[digest[i] >> 4];
      s += hex[digest[i] & 15];
    }
    *hex_out = copy_string(s);
  });
}

}  // extern "C"
