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

#include "lstm.hpp"

#include <cmath>

#include "errors.hpp"

namespace sysid {

namespace {

double sigmoid(double x) { return activate(x, Activation::sigmoid); }

}  // namespace

LstmState lstm_cell_step(const Tensor& x, const LstmState& state, const Tensor& w_ih, const Tensor& w_hh,
                         const Tensor& bias, LstmStepCache* cache) {
  require_rank(x, 2, "lstm input");
  require_rank(state.h, 2, "lstm hidden state");
  const std::size_t batch = x.dim(0);
  const std::size_t hidden = state.h.dim(1);
  require_shape(state.c, state.h.shape(), "lstm cell state");
  if (state.h.dim(0) != batch) throw DimensionError("lstm: batch of state and input differ");
  require_shape(w_ih, {4 * hidden, x.dim(1)}, "lstm input weights");
  require_shape(w_hh, {4 * hidden, hidden}, "lstm recurrent weights");

  Tensor pre = dense_forward(x, w_ih, bias);
  pre += dense_forward(state.h, w_hh, Tensor::zeros({4 * hidden}));

  LstmState next = LstmState::zeros(batch, hidden);
  Tensor gi({batch, hidden}), gf({batch, hidden}), gg({batch, hidden}), go({batch, hidden}), tc({batch, hidden});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < hidden; ++j) {
      const double i = sigmoid(pre.at(b, j));
      const double f = sigmoid(pre.at(b, hidden + j));
      const double g = std::tanh(pre.at(b, 2 * hidden + j));
      const double o = sigmoid(pre.at(b, 3 * hidden + j));
      const double c = f * state.c.at(b, j) + i * g;
      const double t = std::tanh(c);
      next.c.at(b, j) = c;
      next.h.at(b, j) = o * t;
      gi.at(b, j) = i;
      gf.at(b, j) = f;
      gg.at(b, j) = g;
      go.at(b, j) = o;
      tc.at(b, j) = t;
    }
  }
  if (cache) {
    *cache = LstmStepCache{x, state.h, state.c, std::move(gi), std::move(gf), std::move(gg), std::move(go),
                           std::move(tc)};
  }
  return next;
}

LstmStepGrads lstm_cell_backward(const LstmStepCache& cache, const Tensor& w_ih, const Tensor& w_hh,
                                 const Tensor& dh, const Tensor& dc) {
  const std::size_t batch = cache.h_prev.dim(0), hidden = cache.h_prev.dim(1);
  require_shape(dh, {batch, hidden}, "lstm hidden gradient");
  require_shape(dc, {batch, hidden}, "lstm cell gradient");
  Tensor dpre({batch, 4 * hidden});
  Tensor dc_prev({batch, hidden});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < hidden; ++j) {
      const double i = cache.i.at(b, j), f = cache.f.at(b, j), g = cache.g.at(b, j), o = cache.o.at(b, j);
      const double t = cache.tanh_c.at(b, j);
      const double dct = dc.at(b, j) + dh.at(b, j) * o * (1.0 - t * t);
      const double d_o = dh.at(b, j) * t;
      dpre.at(b, j) = dct * g * i * (1.0 - i);
      dpre.at(b, hidden + j) = dct * cache.c_prev.at(b, j) * f * (1.0 - f);
      dpre.at(b, 2 * hidden + j) = dct * i * (1.0 - g * g);
      dpre.at(b, 3 * hidden + j) = d_o * o * (1.0 - o);
      dc_prev.at(b, j) = dct * f;
    }
  }
  auto gx = dense_backward(cache.x, w_ih, dpre);
  auto gh = dense_backward(cache.h_prev, w_hh, dpre);
  return {std::move(gx.input), std::move(gh.input), std::move(dc_prev),
          std::move(gx.weight), std::move(gh.weight), std::move(gx.bias)};
}

LstmLayer::LstmLayer(std::string name, std::size_t in_channels, std::size_t hidden)
    : in_(in_channels),
      hidden_(hidden),
      w_ih_(name + ".w_ih", Tensor::zeros({4 * hidden, in_channels})),
      w_hh_(name + ".w_hh", Tensor::zeros({4 * hidden, hidden})),
      bias_(name + ".bias", Tensor::zeros({4 * hidden})) {}

void LstmLayer::initialize(Rng& rng) {
  w_ih_.value = init_weight(rng, w_ih_.value.shape(), in_, hidden_, false);
  w_hh_.value = init_weight(rng, w_hh_.value.shape(), hidden_, hidden_, false);
  bias_.value.fill(0.0);
}

Tensor LstmLayer::run(const Tensor& x, std::vector<LstmStepCache>* caches) const {
  require_rank(x, 3, "lstm sequence");
  if (x.dim(1) != in_) throw DimensionError("lstm: expected " + std::to_string(in_) + " input channels, got " +
                                            shape_string(x.shape()));
  const std::size_t batch = x.dim(0), time = x.dim(2);
  Tensor out({batch, hidden_, time});
  LstmState state = LstmState::zeros(batch, hidden_);
  Tensor xt({batch, in_});
  if (caches) caches->assign(time, LstmStepCache{});
  for (std::size_t t = 0; t < time; ++t) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < in_; ++c) xt.at(b, c) = x.at(b, c, t);
    state = lstm_cell_step(xt, state, w_ih_.value, w_hh_.value, bias_.value, caches ? &(*caches)[t] : nullptr);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < hidden_; ++j) out.at(b, j, t) = state.h.at(b, j);
  }
  return out;
}

Tensor LstmLayer::forward(const Tensor& x) {
  input_shape_ = x.shape();
  return run(x, &caches_);
}

Tensor LstmLayer::infer(const Tensor& x) const { return run(x, nullptr); }

Tensor LstmLayer::backward(const Tensor& upstream) {
  const std::size_t batch = input_shape_.at(0), time = input_shape_.at(2);
  require_shape(upstream, {batch, hidden_, time}, "lstm upstream gradient");
  Tensor dx(input_shape_);
  Tensor dh_next = Tensor::zeros({batch, hidden_});
  Tensor dc_next = Tensor::zeros({batch, hidden_});
  Tensor dh({batch, hidden_});
  for (std::size_t t = time; t-- > 0;) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < hidden_; ++j) dh.at(b, j) = upstream.at(b, j, t) + dh_next.at(b, j);
    auto g = lstm_cell_backward(caches_[t], w_ih_.value, w_hh_.value, dh, dc_next);
    w_ih_.grad += g.w_ih;
    w_hh_.grad += g.w_hh;
    bias_.grad += g.bias;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < in_; ++c) dx.at(b, c, t) = g.x.at(b, c);
    dh_next = std::move(g.h_prev);
    dc_next = std::move(g.c_prev);
  }
  return dx;
}

LstmLayer::Stream::Stream(const LstmLayer& layer)
    : w_ih_(layer.w_ih_.value),
      w_hh_(layer.w_hh_.value),
      bias_(layer.bias_.value),
      state_(LstmState::zeros(1, layer.hidden_)),
      x_({1, layer.in_}) {}

void LstmLayer::Stream::step(std::span<const double> in, std::span<double> out) {
  for (std::size_t c = 0; c < in.size(); ++c) x_[c] = in[c];
  state_ = lstm_cell_step(x_, state_, w_ih_, w_hh_, bias_);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = state_.h[j];
}

}  // namespace sysid
