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

#include <span>
#include <string>
#include <vector>

#include "blocks.hpp"

namespace sysid {

/// Hidden and cell vectors, each (batch, hidden).
struct LstmState {
  Tensor h;
  Tensor c;

  static LstmState zeros(std::size_t batch, std::size_t hidden) {
    return {Tensor::zeros({batch, hidden}), Tensor::zeros({batch, hidden})};
  }
};

struct LstmStepCache {
  Tensor x, h_prev, c_prev;
  Tensor i, f, g, o;  // gate activations
  Tensor tanh_c;
};

struct LstmStepGrads {
  Tensor x, h_prev, c_prev;
  Tensor w_ih, w_hh, bias;
};

/// One gated update. Gate rows of the weights are stacked as [input, forget,
/// candidate, output], each block `hidden` rows tall.
///   c' = f * c + i * g,  h' = o * tanh(c')
LstmState lstm_cell_step(const Tensor& x, const LstmState& state, const Tensor& w_ih, const Tensor& w_hh,
                         const Tensor& bias, LstmStepCache* cache = nullptr);
LstmStepGrads lstm_cell_backward(const LstmStepCache& cache, const Tensor& w_ih, const Tensor& w_hh,
                                 const Tensor& dh, const Tensor& dc);

/// LSTM over a whole (batch, channel, time) sequence from a zero state, with
/// full backpropagation through time.
class LstmLayer {
 public:
  LstmLayer(std::string name, std::size_t in_channels, std::size_t hidden);

  void initialize(Rng& rng);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& upstream);
  Tensor infer(const Tensor& x) const;

  std::size_t hidden() const { return hidden_; }
  std::vector<Parameter*> parameters() { return {&w_ih_, &w_hh_, &bias_}; }
  const Tensor& w_ih() const { return w_ih_.value; }
  const Tensor& w_hh() const { return w_hh_.value; }
  const Tensor& bias() const { return bias_.value; }

  class Stream {
   public:
    explicit Stream(const LstmLayer& layer);
    void step(std::span<const double> in, std::span<double> out);

   private:
    Tensor w_ih_, w_hh_, bias_;
    LstmState state_;
    Tensor x_;
  };

 private:
  Tensor run(const Tensor& x, std::vector<LstmStepCache>* caches) const;

  std::size_t in_, hidden_;
  Parameter w_ih_, w_hh_, bias_;
  std::vector<LstmStepCache> caches_;
  Shape input_shape_;
};

}  // namespace sysid
