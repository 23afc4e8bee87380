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

#include "hyperopt.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "analysis.hpp"
#include "errors.hpp"
#include "text.hpp"

namespace sysid {

namespace {

std::string label(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

nlohmann::json unlabel(std::string_view s) {
  auto j = nlohmann::json::parse(s, nullptr, false);
  if (j.is_discarded()) return std::string(s);
  return j;
}

std::set<std::string> keys_of(const nlohmann::json& j) {
  std::set<std::string> out;
  for (const auto& [k, _] : j.items()) out.insert(k);
  return out;
}

const std::set<std::string>& model_keys() {
  static const std::set<std::string> keys = keys_of(nlohmann::json(ModelConfig{}));
  return keys;
}

const std::set<std::string>& train_keys() {
  static const std::set<std::string> keys = keys_of(nlohmann::json(TrainConfig{}));
  return keys;
}

std::string clean_message(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

template <class Json>
GridAxis axis(std::string name, const Json& values) {
  GridAxis a{std::move(name), {}};
  for (const auto& v : values) a.values.push_back(nlohmann::json::parse(v.dump()));
  return a;
}

nlohmann::json plain(const nlohmann::ordered_json& j) { return nlohmann::json::parse(j.dump()); }

}  // namespace

std::size_t GridSpace::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

void GridSpace::validate() const {
  if (!model.is_object() || !train.is_object()) throw ConfigError("grid: model and train must be objects");
  if (repetitions < 1) throw ConfigError("grid: repetitions must be >= 1");
  std::set<std::string> seen;
  for (const auto& a : axes) {
    if (a.values.empty()) throw ConfigError("grid: axis '" + a.name + "' is empty");
    if (!model_keys().count(a.name) && !train_keys().count(a.name))
      throw ConfigError("grid: axis '" + a.name + "' is not a model or train setting");
    if (!seen.insert(a.name).second) throw ConfigError("grid: axis '" + a.name + "' appears twice");
    std::set<std::string> labels;
    for (const auto& v : a.values)
      if (!labels.insert(label(v)).second)
        throw ConfigError("grid: axis '" + a.name + "' repeats value " + label(v));
  }
}

GridSpace grid_space_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ConfigError("grid file must be a JSON object");
  if (j.contains("preset")) {
    GridSpace s = grid_preset(j.at("preset").get<std::string>());
    if (j.contains("model")) s.model.update(plain(j.at("model")));
    if (j.contains("train")) s.train.update(plain(j.at("train")));
    if (j.contains("repetitions")) s.repetitions = j.at("repetitions").get<std::size_t>();
    s.validate();
    return s;
  }
  static const std::set<std::string> known{"model", "train", "axes", "repetitions", "preset"};
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw ConfigError("grid: unknown key '" + k + "'");
  GridSpace s;
  try {
    if (j.contains("model")) s.model = plain(j.at("model"));
    if (j.contains("train")) s.train = plain(j.at("train"));
    if (j.contains("repetitions")) s.repetitions = j.at("repetitions").get<std::size_t>();
    if (j.contains("axes")) {
      const auto& axes = j.at("axes");
      if (!axes.is_object()) throw ConfigError("grid: axes must be an object of lists");
      for (const auto& [name, values] : axes.items()) {
        if (!values.is_array()) throw ConfigError("grid: axis '" + name + "' must be a list");
        s.axes.push_back(axis(name, values));
      }
    }
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const GridSpace& s) {
  nlohmann::ordered_json axes = nlohmann::ordered_json::object();
  for (const auto& a : s.axes) {
    nlohmann::ordered_json values = nlohmann::ordered_json::array();
    for (const auto& v : a.values) values.push_back(nlohmann::ordered_json::parse(v.dump()));
    axes[a.name] = values;
  }
  nlohmann::ordered_json j;
  j["model"] = nlohmann::ordered_json::parse(s.model.dump());
  j["train"] = nlohmann::ordered_json::parse(s.train.dump());
  j["axes"] = axes;
  j["repetitions"] = s.repetitions;
  return nlohmann::json::parse(j.dump());
}

std::vector<std::string> grid_preset_names() {
  return {"chen-tcn", "chen-mlp", "chen-lstm", "silverbox-tcn", "f16-tcn", "f16-mlp", "f16-lstm"};
}

GridSpace grid_preset(std::string_view name) {
  using nlohmann::json;
  GridSpace s;
  const json tcn_norms = json::array({"none", "batch", "weight"});
  const json dropouts = json::array({0.0, 0.3, 0.5, 0.8});
  if (name == "chen-tcn" || name == "f16-tcn") {
    s.model = {{"family", "tcn"}};
    s.axes = {axis("hidden", name == "chen-tcn" ? json::array({16, 32, 64, 128, 256}) : json::array({16, 32, 64, 128})),
              axis("dropout", dropouts),
              axis("depth", json::array({1, 2, 4, 8})),
              axis("kernel_size", json::array({2, 4, 8, 16})),
              axis("dilations", json::array({false, true})),
              axis("norm", tcn_norms)};
  } else if (name == "chen-mlp" || name == "f16-mlp") {
    s.model = {{"family", "mlp"}, {"depth", 1}};
    s.axes = {axis("hidden", json::array({16, 32, 64, 128, 256})),
              axis("order", json::array({2, 4, 8, 16, 32, 64, 128})),
              axis("activation", json::array({"relu", "sigmoid"}))};
  } else if (name == "chen-lstm" || name == "f16-lstm") {
    s.model = {{"family", "lstm"}};
    s.axes = {axis("hidden", json::array({16, 32, 64, 128})),
              axis("depth", name == "chen-lstm" ? json::array({1, 2, 3}) : json::array({1, 2})),
              axis("dropout", dropouts)};
  } else if (name == "silverbox-tcn") {
    s.model = {{"family", "tcn"}, {"kernel_size", 2}};
    s.axes = {axis("depth", json::array({2, 3})), axis("hidden", json::array({4, 8, 16, 32})),
              axis("dropout", json::array({0.0, 0.05, 0.1, 0.2}))};
  } else {
    throw ConfigError("unknown grid preset '" + std::string(name) + "'");
  }
  s.validate();
  return s;
}

std::vector<GridConfig> grid_expand(const GridSpace& space) {
  space.validate();
  std::vector<GridConfig> out;
  const std::size_t total = space.size();
  out.reserve(total);
  std::vector<std::size_t> digits(space.axes.size(), 0);
  for (std::size_t index = 0; index < total; ++index) {
    GridConfig g;
    g.index = index;
    nlohmann::json model = space.model, train = space.train;
    for (std::size_t a = 0; a < space.axes.size(); ++a) {
      const auto& ax = space.axes[a];
      const auto& v = ax.values[digits[a]];
      g.point.push_back(v);
      (model_keys().count(ax.name) ? model : train)[ax.name] = v;
    }
    g.model = model_config_from_json(model);
    g.train = train_config_from_json(train);
    out.push_back(std::move(g));
    for (std::size_t a = space.axes.size(); a-- > 0;) {
      if (++digits[a] < space.axes[a].values.size()) break;
      digits[a] = 0;
    }
  }
  return out;
}

std::string grid_point_key(const GridSpace& space, const std::vector<nlohmann::json>& point) {
  std::map<std::string, std::string> parts;
  for (std::size_t a = 0; a < space.axes.size(); ++a) parts[space.axes[a].name] = point.at(a).dump();
  std::string key;
  for (const auto& [name, value] : parts) key += name + "=" + value + ";";
  return key;
}

std::uint64_t grid_run_seed(std::uint64_t global_seed, const std::string& point_key, std::size_t repetition) {
  return mix_seed(mix_seed(global_seed, hash_string(point_key)), repetition);
}

std::string GridResult::to_csv() const {
  std::string out = "index,repetition";
  for (const auto& a : axes) out += "," + a;
  out += ",status,one_step_rmse,free_run_rmse,best_epoch,parameters,seed,seconds,error\n";
  for (const auto& r : rows) {
    out += std::to_string(r.index) + "," + std::to_string(r.repetition);
    for (const auto& v : r.point) out += "," + label(v);
    out += r.ok ? ",ok," : ",failed,";
    out += format_double(r.one_step_rmse) + "," + format_double(r.free_run_rmse) + "," +
           std::to_string(r.best_epoch) + "," + std::to_string(r.parameters) + "," + std::to_string(r.seed) + "," +
           format_double(r.seconds) + "," + clean_message(r.error) + "\n";
  }
  return out;
}

GridResult parse_grid_csv(std::string_view text) {
  auto lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("grid CSV: empty");
  const auto header = split(lines[0], ',');
  const std::size_t fixed_tail = 8;
  if (header.size() < 2 + fixed_tail || trim(header[0]) != "index" || trim(header[1]) != "repetition")
    throw SchemaError("grid CSV: unexpected header");
  GridResult res;
  const std::size_t naxes = header.size() - 2 - fixed_tail;
  for (std::size_t a = 0; a < naxes; ++a) res.axes.emplace_back(trim(header[2 + a]));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != header.size())
      throw ParseError("grid CSV: line " + std::to_string(i + 1) + ": expected " + std::to_string(header.size()) +
                       " fields");
    auto number = [&](std::size_t col) {
      auto v = parse_double(f[col]);
      if (!v) throw ParseError("grid CSV: line " + std::to_string(i + 1) + ": bad number '" + std::string(f[col]) + "'");
      return *v;
    };
    auto integer = [&](std::size_t col) -> std::uint64_t {
      try {
        return std::stoull(std::string(trim(f[col])));
      } catch (const std::exception&) {
        throw ParseError("grid CSV: line " + std::to_string(i + 1) + ": bad integer '" + std::string(f[col]) + "'");
      }
    };
    GridRow r;
    r.index = integer(0);
    r.repetition = integer(1);
    for (std::size_t a = 0; a < naxes; ++a) r.point.push_back(unlabel(trim(f[2 + a])));
    const std::size_t t = 2 + naxes;
    r.ok = trim(f[t]) == "ok";
    r.one_step_rmse = number(t + 1);
    r.free_run_rmse = number(t + 2);
    r.best_epoch = integer(t + 3);
    r.parameters = integer(t + 4);
    r.seed = integer(t + 5);
    r.seconds = number(t + 6);
    r.error = std::string(trim(f[t + 7]));
    res.rows.push_back(std::move(r));
  }
  return res;
}

namespace {

GridRow run_one(const GridConfig& g, std::size_t repetition, const GridSpace& space, const Dataset& training,
                const Dataset& validation, std::uint64_t global_seed) {
  GridRow row;
  row.index = g.index;
  row.repetition = repetition;
  row.point = g.point;
  row.seed = grid_run_seed(global_seed, grid_point_key(space, g.point), repetition);
  const auto started = std::chrono::steady_clock::now();
  try {
    ModelConfig mc = g.model;
    mc.num_inputs = training.num_inputs();
    mc.num_outputs = training.num_outputs();
    mc.validate();
    TrainConfig tc = g.train;
    tc.seed = mix_seed(row.seed, 1);
    Rng init(mix_seed(row.seed, 0));
    auto model = build_model(mc, init);
    row.parameters = model->parameter_count();
    const TrainHistory h = train(*model, training, &validation, tc);
    row.best_epoch = h.epochs.at(h.best_index).epoch;
    row.one_step_rmse = evaluate(*model, validation, EvalMode::one_step).report.mean_rmse;
    row.free_run_rmse = evaluate(*model, validation, EvalMode::free_run).report.mean_rmse;
    row.ok = true;
  } catch (const Error& e) {
    row.ok = false;
    row.error = std::string(to_string(e.kind())) + ": " + e.what();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return row;
}

}  // namespace

GridResult run_grid(const GridSpace& space, const Dataset& training, const Dataset& validation,
                    const GridOptions& options) {
  training.validate();
  validation.validate();
  if (options.jobs < 1) throw ParameterError("grid: jobs must be >= 1");
  const auto configs = grid_expand(space);

  GridResult result;
  for (const auto& a : space.axes) result.axes.push_back(a.name);

  std::map<std::pair<std::size_t, std::size_t>, GridRow> done;
  if (options.journal && std::filesystem::exists(*options.journal) &&
      std::filesystem::file_size(*options.journal) > 0) {
    GridResult previous = parse_grid_csv(read_file(*options.journal));
    if (previous.axes != result.axes) throw SchemaError("grid journal was written for different axes");
    for (auto& r : previous.rows) {
      if (r.index >= configs.size() || r.repetition >= space.repetitions)
        throw SchemaError("grid journal row " + std::to_string(r.index) + " is outside this grid");
      for (std::size_t a = 0; a < r.point.size(); ++a)
        if (label(r.point[a]) != label(configs[r.index].point[a]))
          throw SchemaError("grid journal row " + std::to_string(r.index) + " does not match this grid");
      r.point = configs[r.index].point;
      done[{r.index, r.repetition}] = std::move(r);
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t i = 0; i < configs.size(); ++i)
    for (std::size_t rep = 0; rep < space.repetitions; ++rep)
      if (!done.count({i, rep})) tasks.emplace_back(i, rep);

  std::ofstream journal;
  if (options.journal) {
    const bool fresh = !std::filesystem::exists(*options.journal) || std::filesystem::file_size(*options.journal) == 0;
    journal.open(*options.journal, std::ios::app);
    if (!journal) throw IoError("cannot open grid journal '" + options.journal->string() + "'");
    if (fresh) {
      GridResult empty{result.axes, {}};
      journal << empty.to_csv() << std::flush;
    }
  }

  std::vector<GridRow> finished(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex writer;
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const auto [i, rep] = tasks[t];
      finished[t] = run_one(configs[i], rep, space, training, validation, options.seed);
      std::lock_guard<std::mutex> lock(writer);
      if (journal.is_open()) {
        GridResult one{result.axes, {finished[t]}};
        const std::string csv = one.to_csv();
        journal << csv.substr(csv.find('\n') + 1) << std::flush;
      }
      if (options.on_row) options.on_row(finished[t]);
    }
  };
  const std::size_t threads = std::min(options.jobs, std::max<std::size_t>(tasks.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }

  for (auto& r : finished) done[{r.index, r.repetition}] = std::move(r);
  for (auto& [_, r] : done) result.rows.push_back(std::move(r));
  return result;
}

Metric parse_metric(std::string_view name) {
  if (name == "one-step" || name == "one_step") return Metric::one_step;
  if (name == "free-run" || name == "free_run") return Metric::free_run;
  throw ParameterError("unknown metric '" + std::string(name) + "'");
}

const GridRow& select_best(const GridResult& result, Metric metric) {
  const GridRow* best = nullptr;
  auto score = [&](const GridRow& r) { return metric == Metric::one_step ? r.one_step_rmse : r.free_run_rmse; };
  for (const auto& r : result.rows) {
    if (!r.ok || !std::isfinite(score(r))) continue;
    if (!best || std::tuple(score(r), r.parameters, r.index, r.repetition) <
                     std::tuple(score(*best), best->parameters, best->index, best->repetition))
      best = &r;
  }
  if (!best) throw DataError("grid: no successful run to select from");
  return *best;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

std::vector<BoxStats> marginal_boxplot(const GridResult& result, std::string_view axis, Metric metric) {
  const auto it = std::find(result.axes.begin(), result.axes.end(), axis);
  if (it == result.axes.end()) throw ParameterError("grid has no axis '" + std::string(axis) + "'");
  const std::size_t a = static_cast<std::size_t>(it - result.axes.begin());
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : result.rows) {
    const std::string key = label(r.point.at(a));
    if (!groups.count(key)) order.push_back(key);
    auto& g = groups[key];
    const double s = metric == Metric::one_step ? r.one_step_rmse : r.free_run_rmse;
    if (r.ok && std::isfinite(s)) g.push_back(s);
  }
  std::vector<BoxStats> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    BoxStats b;
    b.value = key;
    b.count = g.size();
    if (!g.empty()) {
      b.min = *std::min_element(g.begin(), g.end());
      b.max = *std::max_element(g.begin(), g.end());
      b.q1 = quantile(g, 0.25);
      b.median = quantile(g, 0.5);
      b.q3 = quantile(g, 0.75);
    }
    out.push_back(b);
  }
  return out;
}

std::string boxplot_csv(const std::vector<BoxStats>& boxes, std::string_view axis) {
  std::string out = std::string(axis) + ",count,min,q1,median,q3,max\n";
  for (const auto& b : boxes)
    out += b.value + "," + std::to_string(b.count) + "," + format_double(b.min) + "," + format_double(b.q1) + "," +
           format_double(b.median) + "," + format_double(b.q3) + "," + format_double(b.max) + "\n";
  return out;
}

}  // namespace sysid
