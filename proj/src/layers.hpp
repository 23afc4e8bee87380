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

// Differentiable primitives. Every forward has an exact hand-written adjoint.
// Sequence tensors are (batch, channel, time); dense inputs are (batch, features).

#include <cmath>
#include <string>
#include <string_view>

#include "rng.hpp"
#include "tensor.hpp"

namespace sysid {

enum class Mode { training, evaluation };

enum class Activation { relu, sigmoid, tanh };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

enum class Norm { none, batch, weight };

Norm parse_norm(std::string_view name);
std::string_view to_string(Norm n);

/// A trainable tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros(value.shape())) {}
  void zero_grad() noexcept { grad.fill(0.0); }
};

// --- causal dilated convolution -------------------------------------------

struct ConvGrads {
  Tensor input;
  Tensor weight;
  Tensor bias;
};

/// out[b,o,t] = bias[o] + sum_c sum_i weight[o,c,i] * in[b,c,t - i*dilation],
/// with in[.,.,tau] = 0 for tau < 0. Tap 0 is the current sample.
Tensor causal_conv1d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, int dilation);
ConvGrads causal_conv1d_backward(const Tensor& input, const Tensor& weight, int dilation, const Tensor& upstream);

// --- dense ------------------------------------------------------------------

struct DenseGrads {
  Tensor input;
  Tensor weight;
  Tensor bias;
};

/// out = input * weight^T + bias, weight is (out_features, in_features).
Tensor dense_forward(const Tensor& input, const Tensor& weight, const Tensor& bias);
DenseGrads dense_backward(const Tensor& input, const Tensor& weight, const Tensor& upstream);

// --- activations ------------------------------------------------------------

inline double activate(double x, Activation a) noexcept {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: return std::tanh(x);
  }
  return x;
}

/// First derivative at x. ReLU uses subgradient 0 at x == 0.
double activation_derivative(double x, Activation a) noexcept;
/// Second derivative at x (0 for ReLU away from the kink).
double activation_second_derivative(double x, Activation a) noexcept;

Tensor activation_forward(const Tensor& input, Activation a);
Tensor activation_forward(const Tensor& input, std::string_view kind);
Tensor activation_backward(const Tensor& input, const Tensor& upstream, Activation a);

// --- dropout ----------------------------------------------------------------

struct DropoutResult {
  Tensor output;
  /// Per-element multiplier (0 or 1/(1-p)); empty when the layer was the identity.
  Tensor mask;
};

/// Inverted dropout: survivors are scaled by 1/(1-p) in training so that
/// evaluation is the plain identity.
DropoutResult dropout_forward(const Tensor& input, double rate, Rng& rng, Mode mode);
Tensor dropout_backward(const Tensor& mask, const Tensor& upstream);

// --- batch normalization ----------------------------------------------------

struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
  Mode mode = Mode::training;

  explicit BatchNormState(std::size_t channels = 1)
      : running_mean(Tensor::zeros({channels})), running_var(Tensor::full({channels}, 1.0)) {}
};

struct BatchNormCache {
  Tensor normalized;  // z-bar
  Tensor inv_std;     // per channel
  Mode mode = Mode::training;
};

struct BatchNormGrads {
  Tensor input;
  Tensor gamma;
  Tensor beta;
};

inline double batchnorm_apply(double x, double mean, double inv_std, double gamma, double beta) noexcept {
  return (x - mean) * inv_std * gamma + beta;
}

/// Per-channel standardization pooled over batch and time, then gamma*z + beta.
/// In training mode the batch statistics are used and the running statistics
/// are updated; in evaluation mode the running statistics are used.
Tensor batchnorm_forward(const Tensor& input, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                         BatchNormCache* cache = nullptr);
/// Evaluation-mode forward that never touches the state.
Tensor batchnorm_infer(const Tensor& input, const Tensor& gamma, const Tensor& beta, const BatchNormState& state);
BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const Tensor& gamma, const Tensor& upstream);

// --- weight normalization ---------------------------------------------------

struct WeightNormGrads {
  Tensor direction;
  Tensor magnitude;
};

/// W[o,...] = g[o] * v[o,...] / ||v[o,...]||.
Tensor weightnorm_forward(const Tensor& direction, const Tensor& magnitude);
WeightNormGrads weightnorm_backward(const Tensor& direction, const Tensor& magnitude, const Tensor& weight_grad);

// --- initialization ---------------------------------------------------------

/// He-uniform when a ReLU consumes the layer output, Glorot-uniform otherwise.
Tensor init_weight(Rng& rng, const Shape& shape, std::size_t fan_in, std::size_t fan_out, bool relu_follows);

}  // namespace sysid
