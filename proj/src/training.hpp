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
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "data.hpp"
#include "errors.hpp"
#include "model.hpp"

namespace sysid {

enum class OptimizerKind { adam, rmsprop, sgd_momentum };

OptimizerKind parse_optimizer(std::string_view name);
std::string_view to_string(OptimizerKind k);

struct TrainConfig {
  double lr = 1e-3;
  std::size_t plateau_patience = 10;
  double lr_factor = 0.1;
  double min_lr = 1e-6;
  /// Epochs without a new best validation loss before stopping; 0 disables.
  std::size_t early_stopping_patience = 30;
  std::size_t max_epochs = 300;
  std::size_t batch_size = 32;
  /// Subsequence length for chopping records; 0 trains on whole records.
  std::size_t window = 100;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double rms_decay = 0.9;
  double momentum = 0.9;
  /// Drop the first receptive_field - 1 predictions of each window from the loss.
  bool mask_warmup = false;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct OptimizerState {
  std::vector<Tensor> m;         // first moment (adam)
  std::vector<Tensor> v;         // second moment (adam, rmsprop)
  std::vector<Tensor> velocity;  // sgd_momentum
  std::size_t step = 0;
};

/// Applies one update from the accumulated gradients. A non-finite gradient
/// raises NumericError before any parameter is touched.
void optimizer_step(std::span<Parameter* const> params, OptimizerState& state, const TrainConfig& config,
                    double lr);

struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

/// Mean squared error over all elements; grad = 2 (pred - target) / count.
/// For rank-3 inputs the first `skip` time steps are excluded.
LossResult mse_loss(const Tensor& prediction, const Tensor& target, std::size_t skip = 0);

/// Learning-rate reduction on a validation plateau. An epoch improves only
/// if it is strictly below the best loss so far.
class PlateauScheduler {
 public:
  PlateauScheduler(std::size_t patience, double factor, double min_lr)
      : patience_(patience), factor_(factor), min_lr_(min_lr) {}

  /// Records one epoch; returns true when the rate should drop now.
  bool observe(double valid_loss);
  double next_lr(double valid_loss, double lr);

  std::size_t stagnant() const { return stagnant_; }

 private:
  std::size_t patience_;
  double factor_;
  double min_lr_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t stagnant_ = 0;
};

/// Stateless form: replays the validation history and returns the rate for
/// the next epoch.
double reduce_lr_on_plateau(std::span<const double> valid_losses, double lr, const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_loss = std::numeric_limits<double>::quiet_NaN();
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  /// Index into epochs of the restored epoch.
  std::size_t best_index = 0;
  bool stopped_early = false;

  std::string to_csv() const;
};

class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& message, TrainHistory history)
      : NumericError(message), history_(std::move(history)) {}
  const TrainHistory& history() const noexcept { return history_; }

 private:
  TrainHistory history_;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Shuffled mini-batch one-step-ahead MSE training. Without a validation set
/// the training loss drives scheduling and model selection. The model ends
/// at its best epoch.
TrainHistory train(Model& model, const Dataset& training, const Dataset* validation, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

/// Evaluation-mode one-step MSE pooled over all records and outputs.
double one_step_mse(const Model& model, const Dataset& dataset);

}  // namespace sysid
