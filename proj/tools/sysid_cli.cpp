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

// Command-line front end. Talks to the library only through sysid.h.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sysid/sysid.h"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kInternal = 1, kInput = 2, kUnsupported = 3, kNumeric = 4 };

int exit_code(sysid_status s) {
  switch (s) {
    case SYSID_OK: return kOk;
    case SYSID_ERR_UNSUPPORTED: return kUnsupported;
    case SYSID_ERR_NUMERIC: return kNumeric;
    case SYSID_ERR_INTERNAL: return kInternal;
    default: return kInput;
  }
}

struct Failure {
  int code;
  std::string message;
};

void check(sysid_status s, const std::string& context) {
  if (s != SYSID_OK)
    throw Failure{exit_code(s), context + ": " + sysid_status_name(s) + ": " + sysid_last_error()};
}

struct CString {
  char* p = nullptr;
  ~CString() { sysid_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using Dataset = Handle<sysid_dataset, sysid_dataset_free>;
using Model = Handle<sysid_model, sysid_model_free>;
using Kernels = Handle<sysid_kernels, sysid_kernels_free>;
using Grid = Handle<sysid_grid, sysid_grid_free>;

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{kInput, "cannot write '" + path.string() + "'"};
  out << text;
  if (!out) throw Failure{kInput, "failed writing '" + path.string() + "'"};
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kInput, "cannot read '" + path.string() + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Failure{kInput, path.string() + ": " + e.what()};
  }
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw Failure{kInput, std::string(what) + " '" + path + "' does not exist"};
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Failure{kInput, "cannot create output directory '" + dir.string() + "'"};
}

/// Run record written next to the outputs of every command.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  ordered_json config = ordered_json::object();
  std::uint64_t seed = 0;
  bool seed_drawn = false;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string started = now_utc();

  void write(const fs::path& dir) {
    ordered_json j;
    j["command"] = command;
    j["argv"] = argv;
    j["config"] = config;
    j["seed"] = seed;
    j["seed_drawn"] = seed_drawn;
    j["version"] = sysid_version();
    ordered_json files = ordered_json::array();
    for (const auto& in : inputs) {
      CString digest;
      check(sysid_file_sha256(in.c_str(), &digest.p), "digest");
      files.push_back({{"path", in}, {"sha256", digest.str()}});
    }
    j["inputs"] = files;
    j["outputs"] = outputs;
    j["started"] = started;
    j["finished"] = now_utc();
    write_text(dir / "manifest.json", j.dump(2) + "\n");
  }
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed, Manifest& m) {
  if (seed) {
    m.seed = *seed;
  } else {
    std::random_device rd;
    m.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    m.seed_drawn = true;
  }
  return m.seed;
}

void load_dataset(Dataset& d, const std::string& path, const std::string& inputs, const std::string& outputs,
                  Manifest& m) {
  require_file(path, "dataset");
  check(sysid_dataset_load_csv(path.c_str(), inputs.empty() ? nullptr : inputs.c_str(),
                               outputs.empty() ? nullptr : outputs.c_str(), &d.p),
        path);
  m.inputs.push_back(path);
}

// ---- generate -----------------------------------------------------------------

struct GenerateArgs {
  std::size_t records = 20, length = 100;
  std::size_t valid_records = 2, valid_length = 100;
  std::size_t test_records = 0, test_length = 100;
  double sigma_v = 0.3, sigma_w = 0.3;
  std::size_t hold = 5;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

void run_generate(const GenerateArgs& a, Manifest& m) {
  const std::uint64_t seed = resolve_seed(a.seed, m);
  const fs::path dir(a.out);
  make_dir(dir);
  m.config = {{"system", "chen"},         {"records", a.records},      {"length", a.length},
              {"valid_records", a.valid_records}, {"valid_length", a.valid_length},
              {"test_records", a.test_records},   {"test_length", a.test_length},
              {"sigma_v", a.sigma_v},     {"sigma_w", a.sigma_w},      {"hold", a.hold}};
  auto emit = [&](const char* name, std::size_t records, std::size_t length, std::uint64_t stream) {
    if (records == 0) return;
    Dataset d;
    check(sysid_dataset_chen(records, length, a.sigma_v, a.sigma_w, sysid_derive_seed(seed, stream), a.hold, &d.p),
          std::string("generate ") + name);
    const fs::path path = dir / (std::string(name) + ".csv");
    check(sysid_dataset_save_csv(d.p, path.c_str()), path.string());
    m.outputs.push_back(path.string());
    m.outputs.push_back((dir / (std::string(name) + ".meta.json")).string());
  };
  emit("train", a.records, a.length, 0);
  emit("valid", a.valid_records, a.valid_length, 1);
  emit("test", a.test_records, a.test_length, 2);
}

// ---- train --------------------------------------------------------------------

struct TrainArgs {
  std::string train, valid, inputs, outputs;
  std::string config, train_config;
  std::string family;
  std::optional<std::size_t> hidden, depth, kernel_size, order;
  std::optional<double> dropout;
  std::string norm, activation;
  bool dilations = false, no_feedback = false;
  std::optional<std::size_t> epochs, batch_size, window, patience;
  std::optional<double> lr;
  std::string optimizer;
  bool mask_warmup = false, normalize = false, verbose = false;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

void on_epoch(const sysid_epoch* e, void*) {
  std::fprintf(stderr, "epoch %zu  train %.6g  valid %.6g  lr %.3g\n", e->epoch, e->train_loss, e->valid_loss, e->lr);
}

void run_train(const TrainArgs& a, Manifest& m) {
  const std::uint64_t seed = resolve_seed(a.seed, m);
  const fs::path dir(a.out);
  Dataset train, valid;
  load_dataset(train, a.train, a.inputs, a.outputs, m);
  if (!a.valid.empty()) load_dataset(valid, a.valid, a.inputs, a.outputs, m);

  json mc = a.config.empty() ? json::object() : read_json(a.config);
  if (!a.config.empty()) m.inputs.push_back(a.config);
  if (!a.family.empty()) mc["family"] = a.family;
  if (a.hidden) mc["hidden"] = *a.hidden;
  if (a.depth) mc["depth"] = *a.depth;
  if (a.kernel_size) mc["kernel_size"] = *a.kernel_size;
  if (a.order) mc["order"] = *a.order;
  if (a.dropout) mc["dropout"] = *a.dropout;
  if (!a.norm.empty()) mc["norm"] = a.norm;
  if (!a.activation.empty()) mc["activation"] = a.activation;
  if (a.dilations) mc["dilations"] = true;
  if (a.no_feedback) mc["feedback"] = false;
  mc["num_inputs"] = sysid_dataset_inputs(train.p);
  mc["num_outputs"] = sysid_dataset_outputs(train.p);

  json tc = a.train_config.empty() ? json::object() : read_json(a.train_config);
  if (!a.train_config.empty()) m.inputs.push_back(a.train_config);
  if (a.epochs) tc["max_epochs"] = *a.epochs;
  if (a.batch_size) tc["batch_size"] = *a.batch_size;
  if (a.window) tc["window"] = *a.window;
  if (a.patience) tc["early_stopping_patience"] = *a.patience;
  if (a.lr) tc["lr"] = *a.lr;
  if (!a.optimizer.empty()) tc["optimizer"] = a.optimizer;
  if (a.mask_warmup) tc["mask_warmup"] = true;
  tc["seed"] = sysid_derive_seed(seed, 1);

  Model model;
  check(sysid_model_create(mc.dump().c_str(), sysid_derive_seed(seed, 0), &model.p), "model");
  if (a.normalize) {
    CString n;
    check(sysid_dataset_normalization(train.p, &n.p), "normalization");
    check(sysid_model_set_normalization(model.p, n.p), "normalization");
  }
  CString resolved;
  check(sysid_model_config(model.p, &resolved.p), "model");
  m.config = {{"model", ordered_json::parse(resolved.str())},
              {"train", ordered_json::parse(tc.dump())},
              {"normalize", a.normalize}};

  make_dir(dir);
  CString history;
  const sysid_status s = sysid_train(model.p, train.p, valid.p, tc.dump().c_str(), a.verbose ? on_epoch : nullptr,
                                     nullptr, &history.p);
  if (history.p) {
    write_text(dir / "history.csv", history.str());
    m.outputs.push_back((dir / "history.csv").string());
  }
  if (s != SYSID_OK) {
    m.write(dir);
    check(s, "train");
  }
  const fs::path ck = dir / "checkpoint.json";
  check(sysid_model_save(model.p, ck.c_str()), ck.string());
  m.outputs.push_back(ck.string());
}

// ---- eval ---------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint, data, inputs, outputs;
  std::string mode = "both";
  std::size_t skip = 0;
  std::vector<double> band;
  bool spectrum = false;
  std::string out = ".";
};

void run_eval(const EvalArgs& a, Manifest& m) {
  const fs::path dir(a.out);
  require_file(a.checkpoint, "checkpoint");
  Model model;
  check(sysid_model_load(a.checkpoint.c_str(), &model.p), a.checkpoint);
  m.inputs.push_back(a.checkpoint);
  Dataset data;
  load_dataset(data, a.data, a.inputs, a.outputs, m);
  if (!a.band.empty() && a.band.size() != 2) throw Failure{kInput, "--band takes two frequencies"};

  std::vector<std::string> modes;
  if (a.mode == "both") modes = {"one-step", "free-run"};
  else modes = {a.mode};
  m.config = {{"modes", modes}, {"skip", a.skip}};
  if (!a.band.empty()) m.config["band"] = a.band;

  make_dir(dir);
  ordered_json reports = ordered_json::object();
  for (const auto& mode : modes) {
    CString report, predictions;
    check(sysid_evaluate(model.p, data.p, mode.c_str(), a.skip, &report.p, &predictions.p), "eval " + mode);
    reports[mode] = ordered_json::parse(report.str());
    const fs::path pred = dir / ("predictions_" + mode + ".csv");
    write_text(pred, predictions.str());
    m.outputs.push_back(pred.string());
    if (a.spectrum || !a.band.empty()) {
      CString spectrum;
      const bool band = !a.band.empty();
      check(sysid_error_spectrum(model.p, data.p, mode.c_str(), band, band ? a.band[0] : 0.0,
                                 band ? a.band[1] : 0.0, &spectrum.p),
            "spectrum " + mode);
      const fs::path sp = dir / ("spectrum_" + mode + ".csv");
      write_text(sp, spectrum.str());
      m.outputs.push_back(sp.string());
    }
  }
  write_text(dir / "report.json", reports.dump(2) + "\n");
  m.outputs.push_back((dir / "report.json").string());
  for (const auto& [mode, r] : reports.items())
    std::printf("%s mean RMSE %.6g\n", mode.c_str(), r.at("mean_rmse").get<double>());
}

// ---- volterra -----------------------------------------------------------------

struct VolterraArgs {
  std::string checkpoint;
  int degree = 2;
  std::string expand_at = "bias";
  bool verify = false;
  double amplitude = 1e-3;
  double tolerance = 1e-4;
  std::string out = ".";
};

void run_volterra(const VolterraArgs& a, Manifest& m) {
  const fs::path dir(a.out);
  require_file(a.checkpoint, "checkpoint");
  Model model;
  check(sysid_model_load(a.checkpoint.c_str(), &model.p), a.checkpoint);
  m.inputs.push_back(a.checkpoint);
  m.config = {{"degree", a.degree}, {"expand_at", a.expand_at}, {"verify", a.verify}};
  if (a.expand_at != "bias" && a.expand_at != "zero") throw Failure{kInput, "--expand-at must be bias or zero"};
  Kernels k;
  check(sysid_volterra_extract(model.p, a.degree, a.expand_at == "zero", &k.p), "volterra");
  make_dir(dir);
  for (int order = 0; order <= a.degree; ++order) {
    CString csv;
    check(sysid_kernels_csv(k.p, order, &csv.p), "kernels");
    const fs::path p = dir / ("h" + std::to_string(order) + ".csv");
    write_text(p, csv.str());
    m.outputs.push_back(p.string());
  }
  if (a.verify) {
    m.config["amplitude"] = a.amplitude;
    m.config["tolerance"] = a.tolerance;
    Kernels oracle;
    check(sysid_volterra_oracle(model.p, a.degree, a.amplitude, &oracle.p), "volterra oracle");
    double diff = 0.0;
    check(sysid_kernels_max_difference(k.p, oracle.p, &diff), "volterra oracle");
    const double bound = a.tolerance * std::max(sysid_kernels_max_magnitude(k.p), 1.0);
    std::printf("max |extracted - oracle| = %.3g (bound %.3g)\n", diff, bound);
    if (!(diff <= bound)) {
      m.write(dir);
      throw Failure{kNumeric, "volterra: extracted kernels disagree with the finite-difference oracle"};
    }
  }
}

// ---- gridsearch ---------------------------------------------------------------

struct GridArgs {
  std::string grid, preset, train, valid, inputs, outputs;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
  std::string journal;
  bool normalize = false, fresh = false;
  std::string metric = "one-step";
  std::string out = ".";
};

void run_gridsearch(const GridArgs& a, Manifest& m) {
  const std::uint64_t seed = resolve_seed(a.seed, m);
  const fs::path dir(a.out);
  if (a.grid.empty() == a.preset.empty()) throw Failure{kInput, "give exactly one of --grid and --preset"};
  std::string doc;
  if (!a.grid.empty()) {
    require_file(a.grid, "grid file");
    doc = read_text(a.grid);
    m.inputs.push_back(a.grid);
  } else {
    doc = json{{"preset", a.preset}}.dump();
  }
  Dataset train, valid;
  load_dataset(train, a.train, a.inputs, a.outputs, m);
  load_dataset(valid, a.valid, a.inputs, a.outputs, m);
  std::size_t runs = 0;
  check(sysid_grid_size(doc.c_str(), &runs), "grid");
  m.config = {{"grid", ordered_json::parse(doc)}, {"runs", runs},       {"jobs", a.jobs},
              {"normalize", a.normalize},        {"metric", a.metric}};

  make_dir(dir);
  const fs::path journal = a.journal.empty() ? dir / "journal.csv" : fs::path(a.journal);
  if (a.fresh) fs::remove(journal);
  Grid g;
  check(sysid_grid_run(doc.c_str(), train.p, valid.p, a.jobs, seed, journal.c_str(), a.normalize, &g.p), "grid");
  m.outputs.push_back(journal.string());

  CString csv;
  check(sysid_grid_csv(g.p, &csv.p), "grid");
  write_text(dir / "results.csv", csv.str());
  m.outputs.push_back((dir / "results.csv").string());

  CString best;
  const sysid_status s = sysid_grid_best(g.p, a.metric.c_str(), &best.p);
  if (s == SYSID_OK) {
    write_text(dir / "best.json", best.str() + "\n");
    m.outputs.push_back((dir / "best.json").string());
    const auto axes = ordered_json::parse(best.str()).at("point");
    for (const auto& [axis, _] : axes.items()) {
      CString box;
      check(sysid_grid_boxplot(g.p, axis.c_str(), a.metric.c_str(), &box.p), "boxplot");
      const fs::path p = dir / ("boxplot_" + axis + ".csv");
      write_text(p, box.str());
      m.outputs.push_back(p.string());
    }
  } else {
    m.write(dir);
    check(s, "grid");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-network system identification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sysid_version()));

  Manifest manifest;
  for (int i = 0; i < argc; ++i) manifest.argv.emplace_back(argv[i]);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Simulate a system and write dataset CSVs");
  auto* chen = generate->add_subcommand("chen", "Chen toy system driven by held Gaussian input");
  generate->require_subcommand(1);
  chen->add_option("--records", gen.records, "Training records");
  chen->add_option("--length", gen.length, "Samples per training record");
  chen->add_option("--valid-records", gen.valid_records, "Validation records (0 to skip)");
  chen->add_option("--valid-length", gen.valid_length, "Samples per validation record");
  chen->add_option("--test-records", gen.test_records, "Test records (0 to skip)");
  chen->add_option("--test-length", gen.test_length, "Samples per test record");
  chen->add_option("--sigma-v", gen.sigma_v, "Process noise standard deviation")->check(CLI::NonNegativeNumber);
  chen->add_option("--sigma-w", gen.sigma_w, "Measurement noise standard deviation")->check(CLI::NonNegativeNumber);
  chen->add_option("--hold", gen.hold, "Samples each input value is held");
  chen->add_option("--seed", gen.seed, "Random seed (drawn and recorded if absent)");
  chen->add_option("--out", gen.out, "Output directory");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--train", tr.train, "Training dataset CSV")->required();
  train->add_option("--valid", tr.valid, "Validation dataset CSV");
  train->add_option("--inputs", tr.inputs, "Comma-separated input column names");
  train->add_option("--outputs", tr.outputs, "Comma-separated output column names");
  train->add_option("--config", tr.config, "Model config JSON file");
  train->add_option("--train-config", tr.train_config, "Training config JSON file");
  train->add_option("--family", tr.family, "tcn, mlp or lstm")->check(CLI::IsMember({"tcn", "mlp", "lstm"}));
  train->add_option("--hidden", tr.hidden, "Hidden channels");
  train->add_option("--depth", tr.depth, "Residual blocks, hidden layers or stacked cells");
  train->add_option("--kernel-size", tr.kernel_size, "Convolution taps");
  train->add_option("--order", tr.order, "MLP regression order");
  train->add_option("--dropout", tr.dropout, "Dropout rate");
  train->add_option("--norm", tr.norm, "none, batch or weight");
  train->add_option("--activation", tr.activation, "relu, sigmoid or tanh");
  train->add_flag("--dilations", tr.dilations, "Dilation 2^(l-1) in block l");
  train->add_flag("--no-feedback", tr.no_feedback, "FIR model: past inputs only");
  train->add_option("--epochs", tr.epochs, "Maximum epochs");
  train->add_option("--batch-size", tr.batch_size, "Windows per mini-batch");
  train->add_option("--window", tr.window, "Subsequence length (0 for whole records)");
  train->add_option("--patience", tr.patience, "Early-stopping patience (0 disables)");
  train->add_option("--lr", tr.lr, "Initial learning rate");
  train->add_option("--optimizer", tr.optimizer, "adam, rmsprop or sgd_momentum");
  train->add_flag("--mask-warmup", tr.mask_warmup, "Leave zero-padded warm-up samples out of the loss");
  train->add_flag("--normalize", tr.normalize, "Standardize channels with training statistics");
  train->add_flag("--verbose", tr.verbose, "Print one line per epoch");
  train->add_option("--seed", tr.seed, "Random seed (drawn and recorded if absent)");
  train->add_option("--out", tr.out, "Output directory");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint JSON")->required();
  eval->add_option("--data", ev.data, "Dataset CSV")->required();
  eval->add_option("--inputs", ev.inputs, "Comma-separated input column names");
  eval->add_option("--outputs", ev.outputs, "Comma-separated output column names");
  eval->add_option("--mode", ev.mode, "one-step, free-run or both")
      ->check(CLI::IsMember({"one-step", "free-run", "both"}));
  eval->add_option("--skip", ev.skip, "Warm-up samples left out of the RMSE");
  eval->add_option("--band", ev.band, "Error spectrum band: f_lo f_hi in Hz")->expected(2);
  eval->add_flag("--spectrum", ev.spectrum, "Write the full error spectrum");
  eval->add_option("--out", ev.out, "Output directory");

  VolterraArgs vo;
  auto* volterra = app.add_subcommand("volterra", "Volterra kernels of a single-hidden-layer FIR checkpoint");
  volterra->add_option("--checkpoint", vo.checkpoint, "Checkpoint JSON")->required();
  volterra->add_option("--degree", vo.degree, "Truncation degree (0 to 2)")->check(CLI::Range(0, 2));
  volterra->add_option("--expand-at", vo.expand_at, "Taylor expansion point: bias or zero");
  volterra->add_flag("--verify", vo.verify, "Cross-check against finite differences");
  volterra->add_option("--amplitude", vo.amplitude, "Finite-difference probe amplitude");
  volterra->add_option("--tolerance", vo.tolerance, "Relative tolerance for --verify");
  volterra->add_option("--out", vo.out, "Output directory");

  GridArgs gr;
  auto* grid = app.add_subcommand("gridsearch", "Train every configuration of a grid");
  grid->add_option("--grid", gr.grid, "Grid JSON file");
  grid->add_option("--preset", gr.preset, "Built-in grid name");
  grid->add_option("--train", gr.train, "Training dataset CSV")->required();
  grid->add_option("--valid", gr.valid, "Validation dataset CSV")->required();
  grid->add_option("--inputs", gr.inputs, "Comma-separated input column names");
  grid->add_option("--outputs", gr.outputs, "Comma-separated output column names");
  grid->add_option("--jobs", gr.jobs, "Parallel workers")->check(CLI::PositiveNumber);
  grid->add_option("--seed", gr.seed, "Global seed (drawn and recorded if absent)");
  grid->add_option("--journal", gr.journal, "Journal CSV (default: <out>/journal.csv)");
  grid->add_flag("--fresh", gr.fresh, "Discard an existing journal");
  grid->add_flag("--normalize", gr.normalize, "Standardize channels with training statistics");
  grid->add_option("--metric", gr.metric, "Selection metric: one-step or free-run")
      ->check(CLI::IsMember({"one-step", "free-run"}));
  grid->add_option("--out", gr.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (chen->parsed()) {
      manifest.command = "generate chen";
      run_generate(gen, manifest);
      manifest.write(gen.out);
    } else if (train->parsed()) {
      manifest.command = "train";
      run_train(tr, manifest);
      manifest.write(tr.out);
    } else if (eval->parsed()) {
      manifest.command = "eval";
      run_eval(ev, manifest);
      manifest.write(ev.out);
    } else if (volterra->parsed()) {
      manifest.command = "volterra";
      run_volterra(vo, manifest);
      manifest.write(vo.out);
    } else if (grid->parsed()) {
      manifest.command = "gridsearch";
      run_gridsearch(gr, manifest);
      manifest.write(gr.out);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "sysid: %s\n", f.message.c_str());
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sysid: %s\n", e.what());
    return kInternal;
  }
  return kOk;
}
