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

#include "data.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "errors.hpp"
#include "text.hpp"

namespace sysid {

namespace {

constexpr double kBlowUp = 1e8;

std::vector<double> channel_values(const Tensor& t, std::size_t c) {
  const std::size_t len = t.dim(1);
  return {t.data().begin() + static_cast<std::ptrdiff_t>(c * len),
          t.data().begin() + static_cast<std::ptrdiff_t>((c + 1) * len)};
}

void affine(Tensor& t, const std::vector<double>& mean, const std::vector<double>& scale, bool inverse) {
  if (t.dim(0) != mean.size())
    throw SchemaError("normalization has " + std::to_string(mean.size()) + " channels, data has " +
                      std::to_string(t.dim(0)));
  for (std::size_t c = 0; c < t.dim(0); ++c)
    for (std::size_t k = 0; k < t.dim(1); ++k) {
      double& v = t.at(c, k);
      v = inverse ? v * scale[c] + mean[c] : (v - mean[c]) / scale[c];
    }
}

void check_constants(const std::vector<double>& mean, const std::vector<double>& scale, const char* what) {
  if (mean.size() != scale.size()) throw ConfigError(std::string(what) + ": mean and scale lengths differ");
  for (double s : scale)
    if (!(s > 0.0) || !std::isfinite(s)) throw DegenerateError(std::string(what) + ": scale must be positive");
}

}  // namespace

void SequenceRecord::validate() const {
  require_rank(u, 2, "record input");
  require_rank(y, 2, "record output");
  if (u.dim(1) != y.dim(1))
    throw DataError("record input and output lengths differ: " + shape_string(u.shape()) + " vs " +
                    shape_string(y.shape()));
  if (y_clean) require_shape(*y_clean, y.shape(), "record noiseless output");
  if (!u.all_finite() || !y.all_finite() || (y_clean && !y_clean->all_finite()))
    throw DataError("record contains non-finite values");
  if (!(sample_rate > 0.0)) throw DataError("sample rate must be positive");
}

Role parse_role(std::string_view name) {
  if (name == "training" || name == "train") return Role::training;
  if (name == "validation" || name == "valid") return Role::validation;
  if (name == "test") return Role::test;
  throw ParameterError("unknown dataset role '" + std::string(name) + "'");
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::training: return "training";
    case Role::validation: return "validation";
    case Role::test: return "test";
  }
  return "?";
}

void to_json(nlohmann::json& j, const Normalization& n) {
  j = {{"u_mean", n.u_mean}, {"u_scale", n.u_scale}, {"y_mean", n.y_mean}, {"y_scale", n.y_scale}};
}

void from_json(const nlohmann::json& j, Normalization& n) {
  try {
    j.at("u_mean").get_to(n.u_mean);
    j.at("u_scale").get_to(n.u_scale);
    j.at("y_mean").get_to(n.y_mean);
    j.at("y_scale").get_to(n.y_scale);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("normalization: ") + e.what());
  }
  check_constants(n.u_mean, n.u_scale, "input normalization");
  check_constants(n.y_mean, n.y_scale, "output normalization");
}

std::size_t Dataset::num_inputs() const { return records.empty() ? 0 : records.front().u.dim(0); }
std::size_t Dataset::num_outputs() const { return records.empty() ? 0 : records.front().y.dim(0); }

std::size_t Dataset::total_samples() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.length();
  return n;
}

void Dataset::validate() const {
  if (records.empty()) throw DataError("dataset has no records");
  for (const auto& r : records) {
    r.validate();
    if (r.u.dim(0) != num_inputs() || r.y.dim(0) != num_outputs())
      throw DataError("records disagree on channel counts");
  }
}

double chen_step(double y1, double y2, double u1, double u2) {
  const double e = std::exp(-y1 * y1);
  return (0.8 - 0.5 * e) * y1 - (0.3 + 0.9 * e) * y2 + u1 + 0.2 * u2 + 0.1 * u1 * u2;
}

SequenceRecord simulate_chen(std::span<const double> u, const NoiseSpec& noise, Rng& rng) {
  if (u.size() < 3) throw DataError("Chen simulation needs at least 3 input samples");
  if (!(noise.process_std >= 0.0) || !(noise.measurement_std >= 0.0))
    throw ParameterError("noise standard deviations must be non-negative");
  const std::size_t len = u.size();
  SequenceRecord rec;
  rec.u = Tensor({1, len});
  rec.y = Tensor({1, len});
  rec.y_clean = Tensor({1, len});
  double y1 = 0.0, y2 = 0.0;  // y*[k-1], y*[k-2]
  for (std::size_t k = 0; k < len; ++k) {
    const double u1 = k >= 1 ? u[k - 1] : 0.0;
    const double u2 = k >= 2 ? u[k - 2] : 0.0;
    const double v = noise.process_std * rng.normal();
    const double w = noise.measurement_std * rng.normal();
    const double ys = chen_step(y1, y2, u1, u2) + v;
    if (!std::isfinite(ys) || std::abs(ys) > kBlowUp)
      throw NumericError("Chen simulation diverged at sample " + std::to_string(k));
    rec.u.at(0, k) = u[k];
    (*rec.y_clean).at(0, k) = ys;
    rec.y.at(0, k) = ys + w;
    y2 = y1;
    y1 = ys;
  }
  return rec;
}

std::vector<double> generate_held_gaussian_input(std::size_t length, std::size_t hold, Rng& rng) {
  if (hold < 1) throw ParameterError("hold must be at least 1");
  std::vector<double> u(length);
  double value = 0.0;
  for (std::size_t k = 0; k < length; ++k) {
    if (k % hold == 0) value = rng.normal();
    u[k] = value;
  }
  return u;
}

Dataset make_chen_dataset(std::size_t records, std::size_t length, const NoiseSpec& noise, std::size_t hold,
                          Role role) {
  if (records == 0 || length == 0) throw ParameterError("record count and length must be positive");
  Dataset ds;
  ds.role = role;
  ds.records.reserve(records);
  const Rng root(noise.seed);
  for (std::size_t r = 0; r < records; ++r) {
    const Rng stream = root.split(r);
    Rng input_rng = stream.split(0);
    Rng noise_rng = stream.split(1);
    const auto u = generate_held_gaussian_input(length, hold, input_rng);
    ds.records.push_back(simulate_chen(u, noise, noise_rng));
  }
  return ds;
}

std::filesystem::path meta_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".meta.json");
  return p;
}

namespace {

std::vector<std::string> match_columns(const std::vector<std::string>& header, const std::regex& pattern) {
  std::vector<std::pair<long, std::string>> found;
  std::smatch m;
  for (const auto& h : header)
    if (std::regex_match(h, m, pattern)) found.emplace_back(m[1].length() ? std::stol(m[1].str()) : 0L, h);
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (auto& f : found) out.push_back(f.second);
  return out;
}

std::vector<std::size_t> locate(const std::vector<std::string>& header, const std::vector<std::string>& names,
                                const std::filesystem::path& path) {
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    auto it = std::find(header.begin(), header.end(), n);
    if (it == header.end()) throw SchemaError(path.string() + ": missing column '" + n + "'");
    idx.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  return idx;
}

}  // namespace

Dataset load_csv_dataset(const std::filesystem::path& path, const ColumnMap& columns, Role role) {
  const std::string text = read_file(path);
  std::vector<std::string_view> lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ParseError(path.string() + ": empty file");

  std::vector<std::string> header;
  for (auto h : split(lines[0], ',')) header.emplace_back(trim(h));

  ColumnMap map = columns;
  const bool automatic = map.inputs.empty() && map.outputs.empty();
  if (automatic) {
    map.inputs = match_columns(header, std::regex(R"(u(\d*))"));
    map.outputs = match_columns(header, std::regex(R"(y(\d*))"));
    map.clean_outputs = match_columns(header, std::regex(R"(ystar(\d*))"));
    if (map.inputs.empty()) throw SchemaError(path.string() + ": no input columns (u1, u2, ...)");
    if (map.outputs.empty()) throw SchemaError(path.string() + ": no output columns (y1, y2, ...)");
  } else if (map.inputs.empty() || map.outputs.empty()) {
    throw SchemaError(path.string() + ": column map needs at least one input and one output");
  }
  if (!map.clean_outputs.empty() && map.clean_outputs.size() != map.outputs.size())
    throw SchemaError(path.string() + ": noiseless columns must match output columns");

  const auto in_idx = locate(header, map.inputs, path);
  const auto out_idx = locate(header, map.outputs, path);
  const auto clean_idx = locate(header, map.clean_outputs, path);

  const std::size_t rows = lines.size() - 1;
  if (rows == 0) throw DataError(path.string() + ": no data rows");
  const std::size_t nu = in_idx.size(), ny = out_idx.size();
  std::vector<double> u(nu * rows), y(ny * rows), yc(clean_idx.size() * rows);

  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t line_no = r + 2;
    const auto fields = split(lines[r + 1], ',');
    if (fields.size() != header.size())
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    auto cell = [&](std::size_t col) {
      auto v = parse_double(fields[col]);
      if (!v || !std::isfinite(*v))
        throw ParseError(path.string() + ": line " + std::to_string(line_no) + ", column '" + header[col] +
                         "': not a finite number '" + std::string(trim(fields[col])) + "'");
      return *v;
    };
    for (std::size_t c = 0; c < nu; ++c) u[c * rows + r] = cell(in_idx[c]);
    for (std::size_t c = 0; c < ny; ++c) y[c * rows + r] = cell(out_idx[c]);
    for (std::size_t c = 0; c < clean_idx.size(); ++c) yc[c * rows + r] = cell(clean_idx[c]);
  }

  double sample_rate = 1.0;
  std::vector<std::size_t> bounds{0, rows};
  const auto meta = meta_path(path);
  if (std::filesystem::exists(meta)) {
    try {
      const auto j = nlohmann::json::parse(read_file(meta));
      if (j.contains("sample_rate")) sample_rate = j.at("sample_rate").get<double>();
      if (j.contains("segments")) bounds = j.at("segments").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(meta.string() + ": " + e.what());
    }
    if (bounds.size() < 2 || bounds.front() != 0 || bounds.back() != rows ||
        !std::is_sorted(bounds.begin(), bounds.end()) ||
        std::adjacent_find(bounds.begin(), bounds.end()) != bounds.end())
      throw SchemaError(meta.string() + ": segments must rise strictly from 0 to the row count");
  }

  Dataset ds;
  ds.role = role;
  for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
    const std::size_t lo = bounds[s], len = bounds[s + 1] - bounds[s];
    auto slice = [&](const std::vector<double>& src, std::size_t channels) {
      Tensor t({channels, len});
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t k = 0; k < len; ++k) t.at(c, k) = src[c * rows + lo + k];
      return t;
    };
    SequenceRecord rec;
    rec.u = slice(u, nu);
    rec.y = slice(y, ny);
    if (!clean_idx.empty()) rec.y_clean = slice(yc, ny);
    rec.sample_rate = sample_rate;
    ds.records.push_back(std::move(rec));
  }
  ds.validate();
  return ds;
}

void save_csv_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  dataset.validate();
  const std::size_t nu = dataset.num_inputs(), ny = dataset.num_outputs();
  const bool clean = std::all_of(dataset.records.begin(), dataset.records.end(),
                                 [](const SequenceRecord& r) { return r.y_clean.has_value(); });
  std::string out;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < nu; ++c) names.push_back("u" + std::to_string(c + 1));
  for (std::size_t c = 0; c < ny; ++c) names.push_back("y" + std::to_string(c + 1));
  if (clean)
    for (std::size_t c = 0; c < ny; ++c) names.push_back("ystar" + std::to_string(c + 1));
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i];
  out += '\n';

  std::vector<std::size_t> bounds{0};
  for (const auto& rec : dataset.records) {
    for (std::size_t k = 0; k < rec.length(); ++k) {
      std::string line;
      for (std::size_t c = 0; c < nu; ++c) line += format_double(rec.u.at(c, k)) + ",";
      for (std::size_t c = 0; c < ny; ++c) line += format_double(rec.y.at(c, k)) + ",";
      if (clean)
        for (std::size_t c = 0; c < ny; ++c) line += format_double(rec.y_clean->at(c, k)) + ",";
      line.back() = '\n';
      out += line;
    }
    bounds.push_back(bounds.back() + rec.length());
  }
  write_file(path, out);
  const nlohmann::json meta = {{"sample_rate", dataset.records.front().sample_rate}, {"segments", bounds}};
  write_file(meta_path(path), meta.dump(2) + "\n");
}

Normalization compute_normalization(const Dataset& training) {
  training.validate();
  Normalization n;
  auto stats = [&](bool outputs, std::vector<double>& mean, std::vector<double>& scale) {
    const std::size_t channels = outputs ? training.num_outputs() : training.num_inputs();
    for (std::size_t c = 0; c < channels; ++c) {
      std::vector<double> all;
      for (const auto& r : training.records) {
        auto v = channel_values(outputs ? r.y : r.u, c);
        all.insert(all.end(), v.begin(), v.end());
      }
      double m = 0.0;
      for (double v : all) m += v;
      m /= static_cast<double>(all.size());
      double var = 0.0;
      for (double v : all) var += (v - m) * (v - m);
      var /= static_cast<double>(all.size());
      const double s = std::sqrt(var);
      if (!(s > 1e-12 * std::max(1.0, std::abs(m))))
        throw DegenerateError(std::string(outputs ? "output" : "input") + " channel " + std::to_string(c + 1) +
                              " has zero variance");
      mean.push_back(m);
      scale.push_back(s);
    }
  };
  stats(false, n.u_mean, n.u_scale);
  stats(true, n.y_mean, n.y_scale);
  return n;
}

Dataset normalize_dataset(const Dataset& dataset, const Normalization& constants) {
  if (dataset.normalization) throw DataError("dataset is already normalized");
  check_constants(constants.u_mean, constants.u_scale, "input normalization");
  check_constants(constants.y_mean, constants.y_scale, "output normalization");
  Dataset out = dataset;
  for (auto& r : out.records) {
    affine(r.u, constants.u_mean, constants.u_scale, false);
    affine(r.y, constants.y_mean, constants.y_scale, false);
    if (r.y_clean) affine(*r.y_clean, constants.y_mean, constants.y_scale, false);
  }
  out.normalization = constants;
  return out;
}

Dataset denormalize_dataset(const Dataset& dataset) {
  if (!dataset.normalization) return dataset;
  const auto& n = *dataset.normalization;
  Dataset out = dataset;
  for (auto& r : out.records) {
    affine(r.u, n.u_mean, n.u_scale, true);
    affine(r.y, n.y_mean, n.y_scale, true);
    if (r.y_clean) affine(*r.y_clean, n.y_mean, n.y_scale, true);
  }
  out.normalization.reset();
  return out;
}

Tensor denormalize_outputs(const Tensor& y, const Normalization& constants) {
  Tensor out = y;
  affine(out, constants.y_mean, constants.y_scale, true);
  return out;
}

}  // namespace sysid
