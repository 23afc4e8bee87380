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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rng.hpp"
#include "tensor.hpp"

namespace sysid {

/// One contiguous experiment: u is (nu, T), y and y_clean are (ny, T).
struct SequenceRecord {
  Tensor u;
  Tensor y;
  std::optional<Tensor> y_clean;
  double sample_rate = 1.0;

  std::size_t length() const { return u.dim(1); }
  void validate() const;
};

enum class Role { training, validation, test };

Role parse_role(std::string_view name);
std::string_view to_string(Role r);

/// Per-channel affine constants: x_normalized = (x - mean) / scale.
struct Normalization {
  std::vector<double> u_mean, u_scale;
  std::vector<double> y_mean, y_scale;
};

void to_json(nlohmann::json& j, const Normalization& n);
void from_json(const nlohmann::json& j, Normalization& n);

struct Dataset {
  std::vector<SequenceRecord> records;
  Role role = Role::training;
  std::optional<Normalization> normalization;

  std::size_t num_inputs() const;
  std::size_t num_outputs() const;
  std::size_t total_samples() const;
  void validate() const;
};

struct NoiseSpec {
  double process_std = 0.0;      // sigma_v
  double measurement_std = 0.0;  // sigma_w
  std::uint64_t seed = 0;
};

/// Noise-free Chen update from y*[k-1], y*[k-2], u[k-1], u[k-2].
double chen_step(double y1, double y2, double u1, double u2);

/// Chen toy system with zero initial conditions. v enters the recursion,
/// w is added to the output. Raises NumericError if the state blows up.
SequenceRecord simulate_chen(std::span<const double> u, const NoiseSpec& noise, Rng& rng);

/// i.i.d. standard normals, each held for `hold` samples.
std::vector<double> generate_held_gaussian_input(std::size_t length, std::size_t hold, Rng& rng);

/// Independent records; record r draws its input and noise from streams
/// split off the seed, so records do not depend on the record count.
Dataset make_chen_dataset(std::size_t records, std::size_t length, const NoiseSpec& noise,
                          std::size_t hold = 5, Role role = Role::training);

/// Column names for inputs, outputs and optional noiseless outputs. Empty
/// lists select u/u1.., y/y1.. and ystar/ystar1.. by header pattern.
struct ColumnMap {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> clean_outputs;
};

/// `data.csv` pairs with `data.meta.json`.
std::filesystem::path meta_path(const std::filesystem::path& csv);

Dataset load_csv_dataset(const std::filesystem::path& path, const ColumnMap& columns = {},
                         Role role = Role::training);
/// Concatenates the records and writes segment boundaries to the sidecar.
void save_csv_dataset(const Dataset& dataset, const std::filesystem::path& path);

Normalization compute_normalization(const Dataset& training);
Dataset normalize_dataset(const Dataset& dataset, const Normalization& constants);
Dataset denormalize_dataset(const Dataset& dataset);
/// Maps normalized outputs (ny, T) back to physical units.
Tensor denormalize_outputs(const Tensor& y, const Normalization& constants);

}  // namespace sysid
