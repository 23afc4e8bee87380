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

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "layers.hpp"

namespace sysid {

struct NamedBuffer {
  std::string name;
  Tensor* tensor;
};

/// Causal dilated convolution with its own parameters, optionally weight
/// normalized. forward() caches what backward() needs; infer() is const.
class ConvLayer {
 public:
  ConvLayer() = default;
  ConvLayer(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t taps, int dilation,
            bool weight_norm);

  void initialize(Rng& rng, bool relu_follows);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& upstream);
  Tensor infer(const Tensor& x) const;

  /// The weight actually applied: W, or g * v / ||v|| under weight norm.
  Tensor effective_weight() const;
  const Tensor& bias() const { return bias_.value; }

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::size_t taps() const { return taps_; }
  int dilation() const { return dilation_; }
  bool weight_normalized() const { return weight_norm_; }

  std::vector<Parameter*> parameters();

 private:
  std::string name_;
  std::size_t in_ = 0, out_ = 0, taps_ = 1;
  int dilation_ = 1;
  bool weight_norm_ = false;
  Parameter weight_;     // W, or the direction v under weight norm
  Parameter magnitude_;  // g, weight norm only
  Parameter bias_;
  Tensor cached_input_;
  Tensor cached_weight_;
};

/// Batch normalization with learned gamma/beta and running statistics.
class BatchNormLayer {
 public:
  BatchNormLayer() = default;
  BatchNormLayer(std::string name, std::size_t channels);

  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& upstream);
  Tensor infer(const Tensor& x) const;

  const BatchNormState& state() const { return state_; }
  const Tensor& gamma() const { return gamma_.value; }
  const Tensor& beta() const { return beta_.value; }

  std::vector<Parameter*> parameters() { return {&gamma_, &beta_}; }
  std::vector<NamedBuffer> buffers();

 private:
  std::string name_;
  Parameter gamma_;
  Parameter beta_;
  BatchNormState state_;
  BatchNormCache cache_;
};

/// Streaming evaluation of a ConvLayer, one time step per call, with a ring
/// buffer of the last (taps - 1) * dilation + 1 inputs.
class ConvStream {
 public:
  explicit ConvStream(const ConvLayer& layer);
  void step(std::span<const double> in, std::span<double> out);

 private:
  Tensor weight_;
  Tensor bias_;
  std::size_t in_, out_, taps_, dilation_, span_;
  std::vector<double> history_;
  std::size_t pos_ = 0;
  std::size_t seen_ = 0;
};

struct BlockConfig {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_size = 2;
  int dilation = 1;
  Norm norm = Norm::none;
  Activation activation = Activation::relu;
  double dropout = 0.0;
};

/// out = Body(x) + Skip(x), Body = [conv -> norm -> activation -> dropout] x 2
/// with a shared dilation. Skip is the identity when the channel counts agree
/// and a learned 1x1 convolution otherwise.
class ResidualBlock {
 public:
  ResidualBlock(std::string name, const BlockConfig& config);

  void initialize(Rng& rng);

  Tensor forward(const Tensor& x, Mode mode, Rng* rng);
  Tensor backward(const Tensor& upstream);
  Tensor infer(const Tensor& x) const;

  const BlockConfig& config() const { return config_; }
  ConvLayer& conv(std::size_t i) { return stages_[i].conv; }
  ConvLayer* skip() { return skip_ ? &*skip_ : nullptr; }

  std::vector<Parameter*> parameters();
  std::vector<NamedBuffer> buffers();

  class Stream {
   public:
    explicit Stream(const ResidualBlock& block);
    void step(std::span<const double> in, std::span<double> out);

   private:
    struct StageStream {
      ConvStream conv;
      std::vector<double> mean, inv_std, gamma, beta;  // empty without batch norm
    };
    Activation activation_;
    std::vector<StageStream> stages_;
    std::optional<Tensor> skip_weight_;
    Tensor skip_bias_;
    std::vector<double> a_, h_;
  };

 private:
  struct Stage {
    ConvLayer conv;
    std::optional<BatchNormLayer> norm;
    Tensor pre_activation;
    Tensor dropout_mask;
  };

  Tensor stage_forward(Stage& s, const Tensor& x, Mode mode, Rng* rng);
  Tensor stage_backward(Stage& s, const Tensor& upstream);
  Tensor stage_infer(const Stage& s, const Tensor& x) const;

  BlockConfig config_;
  std::vector<Stage> stages_;
  std::optional<ConvLayer> skip_;
};

}  // namespace sysid
