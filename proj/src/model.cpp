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

#include "model.hpp"

#include <set>

#include "errors.hpp"
#include "lstm.hpp"

namespace sysid {

Family parse_family(std::string_view name) {
  if (name == "tcn") return Family::tcn;
  if (name == "mlp") return Family::mlp;
  if (name == "lstm") return Family::lstm;
  throw ConfigError("unknown model family '" + std::string(name) + "'");
}

std::string_view to_string(Family f) {
  switch (f) {
    case Family::tcn: return "tcn";
    case Family::mlp: return "mlp";
    case Family::lstm: return "lstm";
  }
  return "?";
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw ConfigError(std::string("model config: ") + what + " must be >= 1");
  };
  positive(num_inputs, "num_inputs");
  positive(num_outputs, "num_outputs");
  positive(hidden, "hidden");
  positive(depth, "depth");
  positive(kernel_size, "kernel_size");
  positive(order, "order");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model config: dropout must lie in [0, 1)");
  if (family == Family::tcn && dilations && depth > 30) throw ConfigError("model config: too many dilated blocks");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"family", to_string(c.family)},
                     {"num_inputs", c.num_inputs},
                     {"num_outputs", c.num_outputs},
                     {"feedback", c.feedback},
                     {"hidden", c.hidden},
                     {"depth", c.depth},
                     {"kernel_size", c.kernel_size},
                     {"dilations", c.dilations},
                     {"order", c.order},
                     {"dropout", c.dropout},
                     {"norm", to_string(c.norm)},
                     {"activation", to_string(c.activation)}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  static const std::set<std::string> known{"family", "num_inputs", "num_outputs", "feedback",
                                           "hidden", "depth",      "kernel_size", "dilations",
                                           "order",  "dropout",    "norm",        "activation"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("model config: unknown key '" + key + "'");
  }
  try {
    if (j.contains("family")) c.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("num_inputs")) c.num_inputs = j.at("num_inputs").get<std::size_t>();
    if (j.contains("num_outputs")) c.num_outputs = j.at("num_outputs").get<std::size_t>();
    if (j.contains("feedback")) c.feedback = j.at("feedback").get<bool>();
    if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::size_t>();
    if (j.contains("depth")) c.depth = j.at("depth").get<std::size_t>();
    if (j.contains("kernel_size")) c.kernel_size = j.at("kernel_size").get<std::size_t>();
    if (j.contains("dilations")) c.dilations = j.at("dilations").get<bool>();
    if (j.contains("order")) c.order = j.at("order").get<std::size_t>();
    if (j.contains("dropout")) c.dropout = j.at("dropout").get<double>();
    if (j.contains("norm")) c.norm = parse_norm(j.at("norm").get<std::string>());
    if (j.contains("activation")) c.activation = parse_activation(j.at("activation").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  from_json(j, c);
  c.validate();
  return c;
}

std::vector<int> block_dilations(const ModelConfig& config) {
  std::vector<int> d;
  for (std::size_t l = 0; l < config.depth; ++l) d.push_back(config.dilations ? (1 << l) : 1);
  return d;
}

std::size_t receptive_field(const ModelConfig& config) {
  switch (config.family) {
    case Family::tcn: {
      std::size_t field = 1;
      for (int d : block_dilations(config)) field += 2 * (config.kernel_size - 1) * static_cast<std::size_t>(d);
      return field;
    }
    case Family::mlp: return config.order;
    case Family::lstm: break;
  }
  throw UnsupportedError("receptive field of an LSTM is unbounded");
}

// --- Model base ----------------------------------------------------------------

std::vector<const Parameter*> Model::parameters() const {
  auto ps = const_cast<Model*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

const Parameter* Model::find_parameter(std::string_view name) const {
  for (const auto* p : parameters())
    if (p->name == name) return p;
  return nullptr;
}

void Model::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

std::size_t Model::receptive_field() const { return sysid::receptive_field(config_); }

std::vector<Tensor> Model::snapshot() const {
  std::vector<Tensor> out;
  auto* self = const_cast<Model*>(this);
  for (auto* p : self->parameters()) out.push_back(p->value);
  for (auto& b : self->buffers()) out.push_back(*b.tensor);
  return out;
}

void Model::restore(const std::vector<Tensor>& state) {
  auto params = parameters();
  auto bufs = buffers();
  if (state.size() != params.size() + bufs.size()) throw DimensionError("model restore: snapshot size mismatch");
  std::size_t i = 0;
  for (auto* p : params) {
    require_shape(state[i], p->value.shape(), "model restore");
    p->value = state[i++];
  }
  for (auto& b : bufs) {
    require_shape(state[i], b.tensor->shape(), "model restore");
    *b.tensor = state[i++];
  }
}

namespace {

Tensor checked_dropout(const Tensor& h, double rate, Mode mode, Rng* rng, Tensor& mask) {
  mask = Tensor{};
  if (mode != Mode::training || rate == 0.0) return h;
  if (!rng) throw ParameterError("training-mode dropout needs a random stream");
  auto d = dropout_forward(h, rate, *rng, mode);
  mask = std::move(d.mask);
  return std::move(d.output);
}

// --- TCN -------------------------------------------------------------------------

class TcnModel final : public Model {
 public:
  explicit TcnModel(const ModelConfig& c) : Model(c), output_("output", c.hidden, c.num_outputs, 1, 1, false) {
    const auto dil = block_dilations(c);
    for (std::size_t l = 0; l < c.depth; ++l) {
      BlockConfig bc;
      bc.in_channels = l == 0 ? c.input_channels() : c.hidden;
      bc.out_channels = c.hidden;
      bc.kernel_size = c.kernel_size;
      bc.dilation = dil[l];
      bc.norm = c.norm;
      bc.activation = c.activation;
      bc.dropout = c.dropout;
      blocks_.emplace_back("block" + std::to_string(l), bc);
    }
  }

  void initialize(Rng& rng) {
    for (auto& b : blocks_) b.initialize(rng);
    output_.initialize(rng, false);
  }

  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override {
    Tensor h = x;
    for (auto& b : blocks_) h = b.forward(h, mode, rng);
    return output_.forward(h);
  }

  Tensor backward(const Tensor& upstream) override {
    Tensor g = output_.backward(upstream);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = it->backward(g);
    return g;
  }

  Tensor infer(const Tensor& x) const override {
    Tensor h = x;
    for (const auto& b : blocks_) h = b.infer(h);
    return output_.infer(h);
  }

  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> out;
    for (auto& b : blocks_)
      for (auto* p : b.parameters()) out.push_back(p);
    for (auto* p : output_.parameters()) out.push_back(p);
    return out;
  }

  std::vector<NamedBuffer> buffers() override {
    std::vector<NamedBuffer> out;
    for (auto& b : blocks_)
      for (auto& nb : b.buffers()) out.push_back(nb);
    return out;
  }

  std::unique_ptr<Stepper> stepper() const override { return std::make_unique<TcnStepper>(*this); }

 private:
  class TcnStepper final : public Stepper {
   public:
    explicit TcnStepper(const TcnModel& m) : output_(m.output_), a_(m.config_.hidden), b_(m.config_.hidden) {
      for (const auto& blk : m.blocks_) blocks_.emplace_back(blk);
    }
    void step(std::span<const double> in, std::span<double> out) override {
      std::span<const double> x = in;
      bool to_a = true;
      for (auto& blk : blocks_) {
        std::span<double> dst = to_a ? std::span<double>(a_) : std::span<double>(b_);
        blk.step(x, dst);
        x = dst;
        to_a = !to_a;
      }
      output_.step(x, out);
    }

   private:
    std::vector<ResidualBlock::Stream> blocks_;
    ConvStream output_;
    std::vector<double> a_, b_;
  };

  std::vector<ResidualBlock> blocks_;
  ConvLayer output_;
};

// --- MLP -------------------------------------------------------------------------

class MlpModel final : public Model {
 public:
  explicit MlpModel(const ModelConfig& c) : Model(c), output_("output", c.hidden, c.num_outputs, 1, 1, false) {
    for (std::size_t l = 0; l < c.depth; ++l) {
      const std::size_t in = l == 0 ? c.input_channels() : c.hidden;
      const std::size_t taps = l == 0 ? c.order : 1;
      hidden_.emplace_back("hidden" + std::to_string(l), in, c.hidden, taps, 1, false);
    }
    pre_.resize(c.depth);
    masks_.resize(c.depth);
  }

  void initialize(Rng& rng) {
    for (auto& h : hidden_) h.initialize(rng, config_.activation == Activation::relu);
    output_.initialize(rng, false);
  }

  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override {
    Tensor h = x;
    for (std::size_t l = 0; l < hidden_.size(); ++l) {
      pre_[l] = hidden_[l].forward(h);
      h = checked_dropout(activation_forward(pre_[l], config_.activation), config_.dropout, mode, rng, masks_[l]);
    }
    return output_.forward(h);
  }

  Tensor backward(const Tensor& upstream) override {
    Tensor g = output_.backward(upstream);
    for (std::size_t l = hidden_.size(); l-- > 0;) {
      g = dropout_backward(masks_[l], g);
      g = activation_backward(pre_[l], g, config_.activation);
      g = hidden_[l].backward(g);
    }
    return g;
  }

  Tensor infer(const Tensor& x) const override {
    Tensor h = x;
    for (const auto& layer : hidden_) h = activation_forward(layer.infer(h), config_.activation);
    return output_.infer(h);
  }

  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> out;
    for (auto& h : hidden_)
      for (auto* p : h.parameters()) out.push_back(p);
    for (auto* p : output_.parameters()) out.push_back(p);
    return out;
  }

  std::unique_ptr<Stepper> stepper() const override { return std::make_unique<MlpStepper>(*this); }

 private:
  class MlpStepper final : public Stepper {
   public:
    explicit MlpStepper(const MlpModel& m)
        : activation_(m.config_.activation), output_(m.output_), a_(m.config_.hidden), h_(m.config_.hidden) {
      for (const auto& layer : m.hidden_) layers_.emplace_back(layer);
    }
    void step(std::span<const double> in, std::span<double> out) override {
      std::span<const double> x = in;
      for (auto& layer : layers_) {
        layer.step(x, a_);
        for (std::size_t j = 0; j < a_.size(); ++j) h_[j] = activate(a_[j], activation_);
        x = h_;
      }
      output_.step(x, out);
    }

   private:
    Activation activation_;
    std::vector<ConvStream> layers_;
    ConvStream output_;
    std::vector<double> a_, h_;
  };

  std::vector<ConvLayer> hidden_;
  ConvLayer output_;
  std::vector<Tensor> pre_;
  std::vector<Tensor> masks_;
};

// --- LSTM ------------------------------------------------------------------------

class LstmModel final : public Model {
 public:
  explicit LstmModel(const ModelConfig& c) : Model(c), output_("output", c.hidden, c.num_outputs, 1, 1, false) {
    for (std::size_t l = 0; l < c.depth; ++l) {
      cells_.emplace_back("lstm" + std::to_string(l), l == 0 ? c.input_channels() : c.hidden, c.hidden);
    }
    masks_.resize(c.depth);
  }

  void initialize(Rng& rng) {
    for (auto& cell : cells_) cell.initialize(rng);
    output_.initialize(rng, false);
  }

  // Dropout sits between stacked cells, not after the last one.
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override {
    Tensor h = x;
    for (std::size_t l = 0; l < cells_.size(); ++l) {
      h = cells_[l].forward(h);
      if (l + 1 < cells_.size()) h = checked_dropout(h, config_.dropout, mode, rng, masks_[l]);
    }
    return output_.forward(h);
  }

  Tensor backward(const Tensor& upstream) override {
    Tensor g = output_.backward(upstream);
    for (std::size_t l = cells_.size(); l-- > 0;) {
      if (l + 1 < cells_.size()) g = dropout_backward(masks_[l], g);
      g = cells_[l].backward(g);
    }
    return g;
  }

  Tensor infer(const Tensor& x) const override {
    Tensor h = x;
    for (const auto& cell : cells_) h = cell.infer(h);
    return output_.infer(h);
  }

  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> out;
    for (auto& cell : cells_)
      for (auto* p : cell.parameters()) out.push_back(p);
    for (auto* p : output_.parameters()) out.push_back(p);
    return out;
  }

  std::unique_ptr<Stepper> stepper() const override { return std::make_unique<LstmStepper>(*this); }

 private:
  class LstmStepper final : public Stepper {
   public:
    explicit LstmStepper(const LstmModel& m) : output_(m.output_), a_(m.config_.hidden), b_(m.config_.hidden) {
      for (const auto& cell : m.cells_) cells_.emplace_back(cell);
    }
    void step(std::span<const double> in, std::span<double> out) override {
      std::span<const double> x = in;
      bool to_a = true;
      for (auto& cell : cells_) {
        std::span<double> dst = to_a ? std::span<double>(a_) : std::span<double>(b_);
        cell.step(x, dst);
        x = dst;
        to_a = !to_a;
      }
      output_.step(x, out);
    }

   private:
    std::vector<LstmLayer::Stream> cells_;
    ConvStream output_;
    std::vector<double> a_, b_;
  };

  std::vector<LstmLayer> cells_;
  ConvLayer output_;
  std::vector<Tensor> masks_;
};

}  // namespace

std::unique_ptr<Model> build_model(const ModelConfig& config, Rng& rng) {
  config.validate();
  switch (config.family) {
    case Family::tcn: {
      auto m = std::make_unique<TcnModel>(config);
      m->initialize(rng);
      return m;
    }
    case Family::mlp: {
      auto m = std::make_unique<MlpModel>(config);
      m->initialize(rng);
      return m;
    }
    case Family::lstm: {
      auto m = std::make_unique<LstmModel>(config);
      m->initialize(rng);
      return m;
    }
  }
  throw ConfigError("unknown model family");
}

// --- prediction --------------------------------------------------------------------

namespace {

std::size_t check_record(const ModelConfig& c, const Tensor& u, const Tensor* y) {
  require_rank(u, 2, "input sequence u");
  if (u.dim(0) != c.num_inputs) {
    throw DimensionError("model expects " + std::to_string(c.num_inputs) + " input channels, got " +
                         shape_string(u.shape()));
  }
  const std::size_t t = u.dim(1);
  if (c.feedback) {
    if (!y || y->empty()) throw DataError("NARX model needs the measured output sequence");
    require_rank(*y, 2, "output sequence y");
    if (y->dim(0) != c.num_outputs) {
      throw DimensionError("model expects " + std::to_string(c.num_outputs) + " output channels, got " +
                           shape_string(y->shape()));
    }
    if (y->dim(1) != t) {
      throw DataError("u and y lengths differ: " + std::to_string(t) + " vs " + std::to_string(y->dim(1)));
    }
  }
  return t;
}

void check_history(const ModelConfig& c, const Tensor& history) {
  if (history.empty()) return;
  require_rank(history, 2, "initial output history");
  if (history.dim(0) != c.num_outputs) throw DimensionError("initial history has the wrong number of channels");
}

}  // namespace

Tensor regressor_input(const ModelConfig& config, const Tensor& u, const Tensor* y) {
  const std::size_t t = check_record(config, u, y);
  Tensor x({1, config.input_channels(), t});
  for (std::size_t k = 1; k < t; ++k) {
    for (std::size_t c = 0; c < config.num_inputs; ++c) x.at(0, c, k) = u.at(c, k - 1);
    if (config.feedback)
      for (std::size_t c = 0; c < config.num_outputs; ++c) x.at(0, config.num_inputs + c, k) = y->at(c, k - 1);
  }
  return x;
}

Tensor predict_one_step(const Model& model, const Tensor& u, const Tensor& y) {
  const auto& c = model.config();
  const Tensor x = regressor_input(c, u, &y);
  return model.infer(x).reshaped({c.num_outputs, u.dim(1)});
}

Tensor simulate_free_run(const Model& model, const Tensor& u, const Tensor& history) {
  const auto& c = model.config();
  check_record(ModelConfig{c.family, c.num_inputs, c.num_outputs, false}, u, nullptr);
  check_history(c, history);
  const std::size_t t = u.dim(1);
  const std::size_t warm = history.empty() ? 0 : history.dim(1);
  auto stepper = model.stepper();
  Tensor yhat({c.num_outputs, t});
  std::vector<double> x(c.input_channels(), 0.0), out(c.num_outputs);
  for (std::size_t k = 0; k < t; ++k) {
    if (k > 0) {
      for (std::size_t ch = 0; ch < c.num_inputs; ++ch) x[ch] = u.at(ch, k - 1);
      if (c.feedback) {
        for (std::size_t ch = 0; ch < c.num_outputs; ++ch)
          x[c.num_inputs + ch] = k - 1 < warm ? history.at(ch, k - 1) : yhat.at(ch, k - 1);
      }
    }
    stepper->step(x, out);
    for (std::size_t ch = 0; ch < c.num_outputs; ++ch) yhat.at(ch, k) = out[ch];
  }
  return yhat;
}

Tensor simulate_free_run_reference(const Model& model, const Tensor& u, const Tensor& history) {
  const auto& c = model.config();
  check_record(ModelConfig{c.family, c.num_inputs, c.num_outputs, false}, u, nullptr);
  check_history(c, history);
  const std::size_t t = u.dim(1);
  const std::size_t warm = history.empty() ? 0 : history.dim(1);
  Tensor yhat({c.num_outputs, t});
  for (std::size_t k = 0; k < t; ++k) {
    Tensor x({1, c.input_channels(), k + 1});
    for (std::size_t j = 1; j <= k; ++j) {
      for (std::size_t ch = 0; ch < c.num_inputs; ++ch) x.at(0, ch, j) = u.at(ch, j - 1);
      if (c.feedback) {
        for (std::size_t ch = 0; ch < c.num_outputs; ++ch)
          x.at(0, c.num_inputs + ch, j) = j - 1 < warm ? history.at(ch, j - 1) : yhat.at(ch, j - 1);
      }
    }
    const Tensor out = model.infer(x);
    for (std::size_t ch = 0; ch < c.num_outputs; ++ch) yhat.at(ch, k) = out.at(0, ch, k);
  }
  return yhat;
}

}  // namespace sysid
