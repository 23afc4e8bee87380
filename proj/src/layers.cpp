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

#include "layers.hpp"

#include <cmath>

#include "errors.hpp"

namespace sysid {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw ParameterError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

Norm parse_norm(std::string_view name) {
  if (name == "none") return Norm::none;
  if (name == "batch") return Norm::batch;
  if (name == "weight") return Norm::weight;
  throw ParameterError("unknown normalization '" + std::string(name) + "'");
}

std::string_view to_string(Norm n) {
  switch (n) {
    case Norm::none: return "none";
    case Norm::batch: return "batch";
    case Norm::weight: return "weight";
  }
  return "?";
}

// --- causal dilated convolution -------------------------------------------

namespace {

struct ConvDims {
  std::size_t batch, in_ch, out_ch, time, taps;
};

ConvDims check_conv(const Tensor& input, const Tensor& weight, int dilation) {
  if (dilation < 1) throw ParameterError("causal conv: dilation must be >= 1, got " + std::to_string(dilation));
  require_rank(input, 3, "causal conv input");
  require_rank(weight, 3, "causal conv weight");
  if (weight.dim(1) != input.dim(1)) {
    throw DimensionError("causal conv: weight " + shape_string(weight.shape()) + " does not accept input " +
                         shape_string(input.shape()));
  }
  return {input.dim(0), input.dim(1), weight.dim(0), input.dim(2), weight.dim(2)};
}

}  // namespace

Tensor causal_conv1d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, int dilation) {
  const auto d = check_conv(input, weight, dilation);
  require_shape(bias, {d.out_ch}, "causal conv bias");
  Tensor out({d.batch, d.out_ch, d.time});
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t o = 0; o < d.out_ch; ++o) {
      auto orow = out.row(b, o);
      std::fill(orow.begin(), orow.end(), bias[o]);
      for (std::size_t c = 0; c < d.in_ch; ++c) {
        const auto irow = input.row(b, c);
        for (std::size_t i = 0; i < d.taps; ++i) {
          const std::size_t shift = i * static_cast<std::size_t>(dilation);
          if (shift >= d.time) break;
          const double w = weight.at(o, c, i);
          for (std::size_t t = shift; t < d.time; ++t) orow[t] += w * irow[t - shift];
        }
      }
    }
  }
  return out;
}

ConvGrads causal_conv1d_backward(const Tensor& input, const Tensor& weight, int dilation, const Tensor& upstream) {
  const auto d = check_conv(input, weight, dilation);
  require_shape(upstream, {d.batch, d.out_ch, d.time}, "causal conv upstream gradient");
  ConvGrads g{Tensor::zeros(input.shape()), Tensor::zeros(weight.shape()), Tensor::zeros({d.out_ch})};
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t o = 0; o < d.out_ch; ++o) {
      const auto grow = upstream.row(b, o);
      double bsum = 0.0;
      for (double v : grow) bsum += v;
      g.bias[o] += bsum;
      for (std::size_t c = 0; c < d.in_ch; ++c) {
        const auto irow = input.row(b, c);
        auto dxrow = g.input.row(b, c);
        for (std::size_t i = 0; i < d.taps; ++i) {
          const std::size_t shift = i * static_cast<std::size_t>(dilation);
          if (shift >= d.time) break;
          const double w = weight.at(o, c, i);
          double acc = 0.0;
          for (std::size_t t = shift; t < d.time; ++t) {
            acc += grow[t] * irow[t - shift];
            dxrow[t - shift] += w * grow[t];
          }
          g.weight.at(o, c, i) += acc;
        }
      }
    }
  }
  return g;
}

// --- dense ------------------------------------------------------------------

Tensor dense_forward(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(input, 2, "dense input");
  require_rank(weight, 2, "dense weight");
  if (weight.dim(1) != input.dim(1)) {
    throw DimensionError("dense: weight " + shape_string(weight.shape()) + " does not accept input " +
                         shape_string(input.shape()));
  }
  const std::size_t n = input.dim(0), f = input.dim(1), g = weight.dim(0);
  require_shape(bias, {g}, "dense bias");
  Tensor out({n, g});
  for (std::size_t b = 0; b < n; ++b) {
    const double* x = input.data().data() + b * f;
    for (std::size_t j = 0; j < g; ++j) {
      const double* w = weight.data().data() + j * f;
      double acc = bias[j];
      for (std::size_t k = 0; k < f; ++k) acc += w[k] * x[k];
      out.at(b, j) = acc;
    }
  }
  return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weight, const Tensor& upstream) {
  require_rank(input, 2, "dense input");
  require_rank(weight, 2, "dense weight");
  const std::size_t n = input.dim(0), f = input.dim(1), g = weight.dim(0);
  if (weight.dim(1) != f) throw DimensionError("dense backward: weight/input mismatch");
  require_shape(upstream, {n, g}, "dense upstream gradient");
  DenseGrads out{Tensor::zeros(input.shape()), Tensor::zeros(weight.shape()), Tensor::zeros({g})};
  for (std::size_t b = 0; b < n; ++b) {
    const double* x = input.data().data() + b * f;
    double* dx = out.input.data().data() + b * f;
    for (std::size_t j = 0; j < g; ++j) {
      const double gj = upstream.at(b, j);
      if (gj == 0.0) continue;
      const double* w = weight.data().data() + j * f;
      double* dw = out.weight.data().data() + j * f;
      out.bias[j] += gj;
      for (std::size_t k = 0; k < f; ++k) {
        dx[k] += gj * w[k];
        dw[k] += gj * x[k];
      }
    }
  }
  return out;
}

// --- activations ------------------------------------------------------------

double activation_derivative(double x, Activation a) noexcept {
  switch (a) {
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: {
      const double s = activate(x, a);
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

double activation_second_derivative(double x, Activation a) noexcept {
  switch (a) {
    case Activation::relu: return 0.0;
    case Activation::sigmoid: {
      const double s = activate(x, a);
      return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case Activation::tanh: {
      const double t = std::tanh(x);
      return -2.0 * t * (1.0 - t * t);
    }
  }
  return 0.0;
}

Tensor activation_forward(const Tensor& input, Activation a) {
  Tensor out = input;
  for (auto& v : out.data()) v = activate(v, a);
  return out;
}

Tensor activation_forward(const Tensor& input, std::string_view kind) {
  return activation_forward(input, parse_activation(kind));
}

Tensor activation_backward(const Tensor& input, const Tensor& upstream, Activation a) {
  require_shape(upstream, input.shape(), "activation upstream gradient");
  Tensor out = upstream;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= activation_derivative(input[i], a);
  return out;
}

// --- dropout ----------------------------------------------------------------

DropoutResult dropout_forward(const Tensor& input, double rate, Rng& rng, Mode mode) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::evaluation || rate == 0.0) return {input, Tensor{}};
  const double keep_scale = 1.0 / (1.0 - rate);
  DropoutResult r{input, Tensor(input.shape())};
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double m = rng.uniform() < rate ? 0.0 : keep_scale;
    r.mask[i] = m;
    r.output[i] *= m;
  }
  return r;
}

Tensor dropout_backward(const Tensor& mask, const Tensor& upstream) {
  if (mask.empty()) return upstream;
  require_shape(upstream, mask.shape(), "dropout upstream gradient");
  Tensor out = upstream;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return out;
}

// --- batch normalization ----------------------------------------------------

namespace {

void check_bn(const Tensor& input, const Tensor& gamma, const Tensor& beta, const BatchNormState& state) {
  require_rank(input, 3, "batch norm input");
  const Shape ch{input.dim(1)};
  require_shape(gamma, ch, "batch norm gamma");
  require_shape(beta, ch, "batch norm beta");
  require_shape(state.running_mean, ch, "batch norm running mean");
  require_shape(state.running_var, ch, "batch norm running variance");
  if (!(state.epsilon > 0.0)) throw ParameterError("batch norm epsilon must be positive");
}

}  // namespace

Tensor batchnorm_infer(const Tensor& input, const Tensor& gamma, const Tensor& beta, const BatchNormState& state) {
  check_bn(input, gamma, beta, state);
  Tensor out(input.shape());
  for (std::size_t c = 0; c < input.dim(1); ++c) {
    const double mean = state.running_mean[c];
    const double inv_std = 1.0 / std::sqrt(state.running_var[c] + state.epsilon);
    for (std::size_t b = 0; b < input.dim(0); ++b) {
      const auto x = input.row(b, c);
      auto y = out.row(b, c);
      for (std::size_t t = 0; t < x.size(); ++t) y[t] = batchnorm_apply(x[t], mean, inv_std, gamma[c], beta[c]);
    }
  }
  return out;
}

Tensor batchnorm_forward(const Tensor& input, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                         BatchNormCache* cache) {
  check_bn(input, gamma, beta, state);
  const std::size_t batch = input.dim(0), channels = input.dim(1), time = input.dim(2);
  const std::size_t count = batch * time;
  Tensor out(input.shape());
  Tensor normalized(input.shape());
  Tensor inv_std({channels});

  if (state.mode == Mode::evaluation) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double mean = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.epsilon);
      for (std::size_t b = 0; b < batch; ++b) {
        const auto x = input.row(b, c);
        auto z = normalized.row(b, c);
        auto y = out.row(b, c);
        for (std::size_t t = 0; t < time; ++t) {
          z[t] = (x[t] - mean) * inv_std[c];
          y[t] = batchnorm_apply(x[t], mean, inv_std[c], gamma[c], beta[c]);
        }
      }
    }
  } else {
    if (count < 2) throw DegenerateError("batch norm: training mode needs at least two samples per channel");
    const double n = static_cast<double>(count);
    for (std::size_t c = 0; c < channels; ++c) {
      double sum = 0.0;
      for (std::size_t b = 0; b < batch; ++b)
        for (double v : input.row(b, c)) sum += v;
      const double mean = sum / n;
      double sq = 0.0;
      for (std::size_t b = 0; b < batch; ++b)
        for (double v : input.row(b, c)) sq += (v - mean) * (v - mean);
      const double var = sq / n;
      inv_std[c] = 1.0 / std::sqrt(var + state.epsilon);
      for (std::size_t b = 0; b < batch; ++b) {
        const auto x = input.row(b, c);
        auto z = normalized.row(b, c);
        auto y = out.row(b, c);
        for (std::size_t t = 0; t < time; ++t) {
          z[t] = (x[t] - mean) * inv_std[c];
          y[t] = z[t] * gamma[c] + beta[c];
        }
      }
      const double m = state.momentum;
      state.running_mean[c] = (1.0 - m) * state.running_mean[c] + m * mean;
      state.running_var[c] = (1.0 - m) * state.running_var[c] + m * var * n / (n - 1.0);
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
    cache->mode = state.mode;
  }
  return out;
}

BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const Tensor& gamma, const Tensor& upstream) {
  require_shape(upstream, cache.normalized.shape(), "batch norm upstream gradient");
  const std::size_t batch = upstream.dim(0), channels = upstream.dim(1), time = upstream.dim(2);
  BatchNormGrads g{Tensor::zeros(upstream.shape()), Tensor::zeros({channels}), Tensor::zeros({channels})};
  const double n = static_cast<double>(batch * time);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum_g = 0.0, sum_gz = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const auto gr = upstream.row(b, c);
      const auto z = cache.normalized.row(b, c);
      for (std::size_t t = 0; t < time; ++t) {
        sum_g += gr[t];
        sum_gz += gr[t] * z[t];
      }
    }
    g.beta[c] = sum_g;
    g.gamma[c] = sum_gz;
    const double scale = gamma[c] * cache.inv_std[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const auto gr = upstream.row(b, c);
      const auto z = cache.normalized.row(b, c);
      auto dx = g.input.row(b, c);
      if (cache.mode == Mode::evaluation) {
        for (std::size_t t = 0; t < time; ++t) dx[t] = scale * gr[t];
      } else {
        for (std::size_t t = 0; t < time; ++t) dx[t] = scale * (gr[t] - sum_g / n - z[t] * sum_gz / n);
      }
    }
  }
  return g;
}

// --- weight normalization ---------------------------------------------------

namespace {

std::size_t weightnorm_rows(const Tensor& direction, const Tensor& magnitude) {
  if (direction.rank() < 1) throw DimensionError("weight norm: direction must have rank >= 1");
  require_shape(magnitude, {direction.dim(0)}, "weight norm magnitude");
  return direction.dim(0);
}

}  // namespace

Tensor weightnorm_forward(const Tensor& direction, const Tensor& magnitude) {
  const std::size_t rows = weightnorm_rows(direction, magnitude);
  const std::size_t width = direction.size() / rows;
  Tensor w(direction.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* v = direction.data().data() + r * width;
    double sq = 0.0;
    for (std::size_t k = 0; k < width; ++k) sq += v[k] * v[k];
    if (!(sq > 0.0)) throw ParameterError("weight norm: zero-norm direction in row " + std::to_string(r));
    const double scale = magnitude[r] / std::sqrt(sq);
    for (std::size_t k = 0; k < width; ++k) w[r * width + k] = scale * v[k];
  }
  return w;
}

WeightNormGrads weightnorm_backward(const Tensor& direction, const Tensor& magnitude, const Tensor& weight_grad) {
  const std::size_t rows = weightnorm_rows(direction, magnitude);
  require_shape(weight_grad, direction.shape(), "weight norm upstream gradient");
  const std::size_t width = direction.size() / rows;
  WeightNormGrads g{Tensor::zeros(direction.shape()), Tensor::zeros(magnitude.shape())};
  for (std::size_t r = 0; r < rows; ++r) {
    const double* v = direction.data().data() + r * width;
    const double* dw = weight_grad.data().data() + r * width;
    double sq = 0.0, dot = 0.0;
    for (std::size_t k = 0; k < width; ++k) {
      sq += v[k] * v[k];
      dot += dw[k] * v[k];
    }
    if (!(sq > 0.0)) throw ParameterError("weight norm: zero-norm direction in row " + std::to_string(r));
    const double norm = std::sqrt(sq);
    const double dg = dot / norm;
    g.magnitude[r] = dg;
    const double s = magnitude[r] / norm;
    for (std::size_t k = 0; k < width; ++k) g.direction[r * width + k] = s * (dw[k] - dg * v[k] / norm);
  }
  return g;
}

// --- initialization ---------------------------------------------------------

Tensor init_weight(Rng& rng, const Shape& shape, std::size_t fan_in, std::size_t fan_out, bool relu_follows) {
  const double bound = relu_follows ? std::sqrt(6.0 / static_cast<double>(fan_in))
                                    : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform(rng, shape, -bound, bound);
}

}  // namespace sysid
