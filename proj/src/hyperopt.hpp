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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "data.hpp"
#include "model.hpp"
#include "training.hpp"

namespace sysid {

struct GridAxis {
  std::string name;  // a model or train config key
  std::vector<nlohmann::json> values;
};

struct GridSpace {
  nlohmann::json model = nlohmann::json::object();  // base model config
  nlohmann::json train = nlohmann::json::object();  // base train config
  std::vector<GridAxis> axes;
  std::size_t repetitions = 1;

  std::size_t size() const;
  void validate() const;
};

/// {"preset": name} or {"model": {...}, "train": {...}, "axes": {...},
/// "repetitions": n}; axis order follows the document.
GridSpace grid_space_from_json(const nlohmann::ordered_json& j);
nlohmann::json to_json(const GridSpace& s);
GridSpace grid_preset(std::string_view name);
std::vector<std::string> grid_preset_names();

struct GridConfig {
  std::size_t index = 0;
  std::vector<nlohmann::json> point;  // one value per axis
  ModelConfig model;
  TrainConfig train;
};

/// Cartesian product, last axis varying fastest.
std::vector<GridConfig> grid_expand(const GridSpace& space);

/// Canonical text of a grid point, independent of axis order.
std::string grid_point_key(const GridSpace& space, const std::vector<nlohmann::json>& point);
/// Seed for one run; depends on the point's values, not on its position.
std::uint64_t grid_run_seed(std::uint64_t global_seed, const std::string& point_key, std::size_t repetition);

struct GridRow {
  std::size_t index = 0;
  std::size_t repetition = 0;
  std::vector<nlohmann::json> point;
  bool ok = false;
  double one_step_rmse = 0.0;
  double free_run_rmse = 0.0;
  std::size_t best_epoch = 0;
  std::size_t parameters = 0;
  std::uint64_t seed = 0;
  double seconds = 0.0;
  std::string error;
};

struct GridResult {
  std::vector<std::string> axes;
  std::vector<GridRow> rows;  // ordered by (index, repetition)

  std::string to_csv() const;
};

struct GridOptions {
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  /// Append-only CSV of finished rows; rows already present are not re-run.
  std::optional<std::filesystem::path> journal;
  std::function<void(const GridRow&)> on_row;
};

/// Trains every configuration on `training`, selects its best epoch on
/// `validation` and reports validation RMSE in both modes. A failing run is
/// recorded as a failed row.
GridResult run_grid(const GridSpace& space, const Dataset& training, const Dataset& validation,
                    const GridOptions& options);

GridResult parse_grid_csv(std::string_view text);

enum class Metric { one_step, free_run };
Metric parse_metric(std::string_view name);

/// Lowest validation RMSE; ties go to fewer parameters, then the earlier
/// configuration.
const GridRow& select_best(const GridResult& result, Metric metric);

/// Hyndman-Fan type 7 quantile (linear interpolation between order
/// statistics) of unsorted data.
double quantile(std::vector<double> values, double q);

struct BoxStats {
  std::string value;
  std::size_t count = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Distribution of the metric for each value of one axis, pooling all other
/// axes. Failed rows and non-finite scores are left out.
std::vector<BoxStats> marginal_boxplot(const GridResult& result, std::string_view axis, Metric metric);
std::string boxplot_csv(const std::vector<BoxStats>& boxes, std::string_view axis);

}  // namespace sysid
