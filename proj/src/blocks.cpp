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

#include "blocks.hpp"

#include <cmath>

#include "errors.hpp"

namespace sysid {

// --- ConvLayer ----------------------------------------------------------------

ConvLayer::ConvLayer(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t taps,
                     int dilation, bool weight_norm)
    : name_(std::move(name)), in_(in_channels), out_(out_channels), taps_(taps), dilation_(dilation),
      weight_norm_(weight_norm) {
  if (taps == 0) throw ParameterError(name_ + ": kernel size must be >= 1");
  if (dilation < 1) throw ParameterError(name_ + ": dilation must be >= 1");
  weight_ = Parameter(name_ + (weight_norm ? ".direction" : ".weight"), Tensor::zeros({out_, in_, taps_}));
  if (weight_norm) magnitude_ = Parameter(name_ + ".magnitude", Tensor::zeros({out_}));
  bias_ = Parameter(name_ + ".bias", Tensor::zeros({out_}));
}

void ConvLayer::initialize(Rng& rng, bool relu_follows) {
  weight_.value = init_weight(rng, weight_.value.shape(), in_ * taps_, out_ * taps_, relu_follows);
  bias_.value.fill(0.0);
  if (weight_norm_) {
    const std::size_t width = in_ * taps_;
    for (std::size_t o = 0; o < out_; ++o) {
      double sq = 0.0;
      for (std::size_t k = 0; k < width; ++k) sq += weight_.value[o * width + k] * weight_.value[o * width + k];
      magnitude_.value[o] = std::sqrt(sq);
    }
  }
}

Tensor ConvLayer::effective_weight() const {
  return weight_norm_ ? weightnorm_forward(weight_.value, magnitude_.value) : weight_.value;
}

Tensor ConvLayer::forward(const Tensor& x) {
  cached_input_ = x;
  cached_weight_ = effective_weight();
  return causal_conv1d_forward(x, cached_weight_, bias_.value, dilation_);
}

Tensor ConvLayer::backward(const Tensor& upstream) {
  auto g = causal_conv1d_backward(cached_input_, cached_weight_, dilation_, upstream);
  bias_.grad += g.bias;
  if (weight_norm_) {
    auto wg = weightnorm_backward(weight_.value, magnitude_.value, g.weight);
    weight_.grad += wg.direction;
    magnitude_.grad += wg.magnitude;
  } else {
    weight_.grad += g.weight;
  }
  return std::move(g.input);
}

Tensor ConvLayer::infer(const Tensor& x) const {
  return causal_conv1d_forward(x, effective_weight(), bias_.value, dilation_);
}

std::vector<Parameter*> ConvLayer::parameters() {
  if (weight_norm_) return {&weight_, &magnitude_, &bias_};
  return {&weight_, &bias_};
}

// --- BatchNormLayer -------------------------------------------------------------

BatchNormLayer::BatchNormLayer(std::string name, std::size_t channels)
    : name_(std::move(name)),
      gamma_(name_ + ".gamma", Tensor::full({channels}, 1.0)),
      beta_(name_ + ".beta", Tensor::zeros({channels})),
      state_(channels) {}

Tensor BatchNormLayer::forward(const Tensor& x, Mode mode) {
  state_.mode = mode;
  return batchnorm_forward(x, gamma_.value, beta_.value, state_, &cache_);
}

Tensor BatchNormLayer::backward(const Tensor& upstream) {
  auto g = batchnorm_backward(cache_, gamma_.value, upstream);
  gamma_.grad += g.gamma;
  beta_.grad += g.beta;
  return std::move(g.input);
}

Tensor BatchNormLayer::infer(const Tensor& x) const {
  return batchnorm_infer(x, gamma_.value, beta_.value, state_);
}

std::vector<NamedBuffer> BatchNormLayer::buffers() {
  return {{name_ + ".running_mean", &state_.running_mean}, {name_ + ".running_var", &state_.running_var}};
}

// --- ConvStream ------------------------------------------------------------------

ConvStream::ConvStream(const ConvLayer& layer)
    : weight_(layer.effective_weight()),
      bias_(layer.bias()),
      in_(layer.in_channels()),
      out_(layer.out_channels()),
      taps_(layer.taps()),
      dilation_(static_cast<std::size_t>(layer.dilation())),
      span_((layer.taps() - 1) * static_cast<std::size_t>(layer.dilation()) + 1),
      history_(in_ * span_, 0.0) {}

void ConvStream::step(std::span<const double> in, std::span<double> out) {
  for (std::size_t c = 0; c < in_; ++c) history_[c * span_ + pos_] = in[c];
  // Same accumulation order as causal_conv1d_forward: bias, then channel, then tap.
  for (std::size_t o = 0; o < out_; ++o) {
    double acc = bias_[o];
    for (std::size_t c = 0; c < in_; ++c) {
      const double* h = history_.data() + c * span_;
      for (std::size_t i = 0; i < taps_; ++i) {
        const std::size_t shift = i * dilation_;
        if (shift > seen_) break;
        acc += weight_.at(o, c, i) * h[(pos_ + span_ - shift) % span_];
      }
    }
    out[o] = acc;
  }
  pos_ = (pos_ + 1) % span_;
  ++seen_;
}

// --- ResidualBlock ---------------------------------------------------------------

ResidualBlock::ResidualBlock(std::string name, const BlockConfig& config) : config_(config) {
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw ParameterError(name + ": dropout must lie in [0, 1)");
  const bool wn = config.norm == Norm::weight;
  for (std::size_t i = 0; i < 2; ++i) {
    Stage s;
    const std::size_t in = i == 0 ? config.in_channels : config.out_channels;
    const std::string sub = name + ".conv" + std::to_string(i + 1);
    s.conv = ConvLayer(sub, in, config.out_channels, config.kernel_size, config.dilation, wn);
    if (config.norm == Norm::batch) s.norm.emplace(name + ".norm" + std::to_string(i + 1), config.out_channels);
    stages_.push_back(std::move(s));
  }
  if (config.in_channels != config.out_channels) {
    skip_.emplace(name + ".skip", config.in_channels, config.out_channels, 1, 1, false);
  }
}

void ResidualBlock::initialize(Rng& rng) {
  const bool relu = config_.activation == Activation::relu;
  for (auto& s : stages_) s.conv.initialize(rng, relu);
  if (skip_) skip_->initialize(rng, false);
}

Tensor ResidualBlock::stage_forward(Stage& s, const Tensor& x, Mode mode, Rng* rng) {
  Tensor a = s.conv.forward(x);
  if (s.norm) a = s.norm->forward(a, mode);
  Tensor h = activation_forward(a, config_.activation);
  s.pre_activation = std::move(a);
  s.dropout_mask = Tensor{};
  if (mode == Mode::training && config_.dropout > 0.0) {
    if (!rng) throw ParameterError("residual block: training-mode dropout needs a random stream");
    auto d = dropout_forward(h, config_.dropout, *rng, mode);
    s.dropout_mask = std::move(d.mask);
    return std::move(d.output);
  }
  return h;
}

Tensor ResidualBlock::stage_backward(Stage& s, const Tensor& upstream) {
  Tensor g = dropout_backward(s.dropout_mask, upstream);
  g = activation_backward(s.pre_activation, g, config_.activation);
  if (s.norm) g = s.norm->backward(g);
  return s.conv.backward(g);
}

Tensor ResidualBlock::stage_infer(const Stage& s, const Tensor& x) const {
  Tensor a = s.conv.infer(x);
  if (s.norm) a = s.norm->infer(a);
  return activation_forward(a, config_.activation);
}

Tensor ResidualBlock::forward(const Tensor& x, Mode mode, Rng* rng) {
  Tensor body = stage_forward(stages_[0], x, mode, rng);
  body = stage_forward(stages_[1], body, mode, rng);
  if (skip_) return body + skip_->forward(x);
  return body + x;
}

Tensor ResidualBlock::backward(const Tensor& upstream) {
  Tensor g = stage_backward(stages_[1], upstream);
  g = stage_backward(stages_[0], g);
  if (skip_) return g + skip_->backward(upstream);
  return g + upstream;
}

Tensor ResidualBlock::infer(const Tensor& x) const {
  Tensor body = stage_infer(stages_[0], x);
  body = stage_infer(stages_[1], body);
  if (skip_) return body + skip_->infer(x);
  return body + x;
}

std::vector<Parameter*> ResidualBlock::parameters() {
  std::vector<Parameter*> out;
  for (auto& s : stages_) {
    for (auto* p : s.conv.parameters()) out.push_back(p);
    if (s.norm)
      for (auto* p : s.norm->parameters()) out.push_back(p);
  }
  if (skip_)
    for (auto* p : skip_->parameters()) out.push_back(p);
  return out;
}

std::vector<NamedBuffer> ResidualBlock::buffers() {
  std::vector<NamedBuffer> out;
  for (auto& s : stages_)
    if (s.norm)
      for (auto& b : s.norm->buffers()) out.push_back(b);
  return out;
}

ResidualBlock::Stream::Stream(const ResidualBlock& block)
    : activation_(block.config_.activation),
      a_(block.config_.out_channels),
      h_(block.config_.out_channels) {
  for (const auto& s : block.stages_) {
    StageStream ss{ConvStream(s.conv), {}, {}, {}, {}};
    if (s.norm) {
      const auto& st = s.norm->state();
      for (std::size_t c = 0; c < block.config_.out_channels; ++c) {
        ss.mean.push_back(st.running_mean[c]);
        ss.inv_std.push_back(1.0 / std::sqrt(st.running_var[c] + st.epsilon));
        ss.gamma.push_back(s.norm->gamma()[c]);
        ss.beta.push_back(s.norm->beta()[c]);
      }
    }
    stages_.push_back(std::move(ss));
  }
  if (block.skip_) {
    skip_weight_ = block.skip_->effective_weight();
    skip_bias_ = block.skip_->bias();
  }
}

void ResidualBlock::Stream::step(std::span<const double> in, std::span<double> out) {
  std::span<const double> x = in;
  for (auto& s : stages_) {
    s.conv.step(x, a_);
    for (std::size_t c = 0; c < a_.size(); ++c) {
      double v = a_[c];
      if (!s.mean.empty()) v = batchnorm_apply(v, s.mean[c], s.inv_std[c], s.gamma[c], s.beta[c]);
      h_[c] = activate(v, activation_);
    }
    x = h_;
  }
  for (std::size_t o = 0; o < out.size(); ++o) {
    double skip;
    if (skip_weight_) {
      skip = skip_bias_[o];
      for (std::size_t c = 0; c < in.size(); ++c) skip += skip_weight_->at(o, c, 0) * in[c];
    } else {
      skip = in[o];
    }
    out[o] = h_[o] + skip;
  }
}

}  // namespace sysid
