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

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "blocks.hpp"

namespace sysid {

enum class Family { tcn, mlp, lstm };

Family parse_family(std::string_view name);
std::string_view to_string(Family f);

struct ModelConfig {
  Family family = Family::tcn;
  std::size_t num_inputs = 1;   // nu
  std::size_t num_outputs = 1;  // ny
  /// NARX mode feeds past outputs back as inputs; FIR mode (false) sees u only.
  bool feedback = true;
  std::size_t hidden = 16;
  /// Residual blocks (tcn), hidden layers (mlp) or stacked cells (lstm).
  std::size_t depth = 1;
  std::size_t kernel_size = 2;
  /// d_l = 2^(l-1) when set, 1 otherwise.
  bool dilations = false;
  /// MLP regression window: number of lags of every input channel.
  std::size_t order = 2;
  double dropout = 0.0;
  Norm norm = Norm::none;  // tcn only
  Activation activation = Activation::relu;

  std::size_t input_channels() const { return num_inputs + (feedback ? num_outputs : 0); }
  void validate() const;
};

ModelConfig model_config_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Frozen single-sample evaluator: one input vector in, one output vector out.
class Stepper {
 public:
  virtual ~Stepper() = default;
  virtual void step(std::span<const double> in, std::span<double> out) = 0;
};

/// A network mapping (batch, input_channels, T) to (batch, num_outputs, T),
/// causal in time. The output at t is the prediction of y[t + 1] from inputs
/// up to t.
class Model {
 public:
  virtual ~Model() = default;

  const ModelConfig& config() const { return config_; }

  /// Training-capable forward; caches activations for backward().
  virtual Tensor forward(const Tensor& x, Mode mode, Rng* rng) = 0;
  /// Accumulates parameter gradients and returns the input gradient.
  virtual Tensor backward(const Tensor& upstream) = 0;
  /// Evaluation-mode forward, no state touched.
  virtual Tensor infer(const Tensor& x) const = 0;
  virtual std::unique_ptr<Stepper> stepper() const = 0;

  virtual std::vector<Parameter*> parameters() = 0;
  virtual std::vector<NamedBuffer> buffers() { return {}; }
  std::vector<const Parameter*> parameters() const;

  const Parameter* find_parameter(std::string_view name) const;
  void zero_grad();
  std::size_t parameter_count() const;

  /// Number of past input samples that reach one output sample.
  std::size_t receptive_field() const;

  /// Parameter values followed by buffers, for best-epoch checkpoints.
  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& state);

 protected:
  explicit Model(ModelConfig config) : config_(std::move(config)) {}

  ModelConfig config_;
};

std::unique_ptr<Model> build_model(const ModelConfig& config, Rng& rng);

/// Per-block dilation factors of a TCN.
std::vector<int> block_dilations(const ModelConfig& config);
/// 1 + sum over blocks of 2 (n - 1) d_l for tcn, the order for mlp.
std::size_t receptive_field(const ModelConfig& config);

/// Builds the shifted regressor sequence: x[0] = 0 and x[k] = (u[k-1], y[k-1]),
/// so that network output k is the prediction of y[k]. u is (nu, T), y is
/// (ny, T) and ignored in FIR mode. Returns (1, input_channels, T).
Tensor regressor_input(const ModelConfig& config, const Tensor& u, const Tensor* y);

/// One-step-ahead prediction of a record, (ny, T), aligned with y.
Tensor predict_one_step(const Model& model, const Tensor& u, const Tensor& y);

/// Free-run simulation: past outputs are the model's own predictions. The
/// first history.dim(1) fed-back values are taken from `history` (measured
/// outputs) instead; pass an empty tensor for a cold start. Streams through
/// per-layer ring buffers.
Tensor simulate_free_run(const Model& model, const Tensor& u, const Tensor& history);

/// Same contract as simulate_free_run, re-evaluating the whole prefix at
/// every step. O(T^2); a cross-check for the streaming path.
Tensor simulate_free_run_reference(const Model& model, const Tensor& u, const Tensor& history);

}  // namespace sysid
