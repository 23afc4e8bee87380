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

#include "training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "text.hpp"

namespace sysid {

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  if (name == "sgd_momentum" || name == "sgd-momentum" || name == "momentum") return OptimizerKind::sgd_momentum;
  throw ParameterError("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::rmsprop: return "rmsprop";
    case OptimizerKind::sgd_momentum: return "sgd_momentum";
  }
  return "?";
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) fail("lr_factor must lie in (0, 1)");
  if (!(min_lr >= 0.0)) fail("min_lr must be non-negative");
  if (plateau_patience < 1) fail("plateau_patience must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (!(rms_decay >= 0.0 && rms_decay < 1.0)) fail("rms_decay must lie in [0, 1)");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lr", c.lr},
                     {"plateau_patience", c.plateau_patience},
                     {"lr_factor", c.lr_factor},
                     {"min_lr", c.min_lr},
                     {"early_stopping_patience", c.early_stopping_patience},
                     {"max_epochs", c.max_epochs},
                     {"batch_size", c.batch_size},
                     {"window", c.window},
                     {"seed", c.seed},
                     {"optimizer", to_string(c.optimizer)},
                     {"beta1", c.beta1},
                     {"beta2", c.beta2},
                     {"epsilon", c.epsilon},
                     {"rms_decay", c.rms_decay},
                     {"momentum", c.momentum},
                     {"mask_warmup", c.mask_warmup}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  nlohmann::json defaults = c;
  for (const auto& [key, _] : j.items())
    if (!defaults.contains(key)) throw ConfigError("train config: unknown key '" + key + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("lr", c.lr);
    get("plateau_patience", c.plateau_patience);
    get("lr_factor", c.lr_factor);
    get("min_lr", c.min_lr);
    get("early_stopping_patience", c.early_stopping_patience);
    get("max_epochs", c.max_epochs);
    get("batch_size", c.batch_size);
    get("window", c.window);
    get("seed", c.seed);
    if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    get("beta1", c.beta1);
    get("beta2", c.beta2);
    get("epsilon", c.epsilon);
    get("rms_decay", c.rms_decay);
    get("momentum", c.momentum);
    get("mask_warmup", c.mask_warmup);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  from_json(j, c);
  c.validate();
  return c;
}

void optimizer_step(std::span<Parameter* const> params, OptimizerState& state, const TrainConfig& config,
                    double lr) {
  for (const auto* p : params)
    if (!p->grad.all_finite()) throw NumericError("non-finite gradient in '" + p->name + "'; step refused");
  auto init = [&](std::vector<Tensor>& slots) {
    if (slots.size() == params.size()) return;
    slots.clear();
    for (const auto* p : params) slots.push_back(Tensor::zeros(p->value.shape()));
  };
  ++state.step;
  const double t = static_cast<double>(state.step);
  switch (config.optimizer) {
    case OptimizerKind::adam: {
      init(state.m);
      init(state.v);
      const double c1 = 1.0 - std::pow(config.beta1, t);
      const double c2 = 1.0 - std::pow(config.beta2, t);
      for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        auto& m = state.m[i];
        auto& v = state.v[i];
        require_shape(m, p.value.shape(), "optimizer state");
        for (std::size_t k = 0; k < p.value.size(); ++k) {
          const double g = p.grad[k];
          m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
          v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g;
          const double mhat = m[k] / c1;
          const double vhat = v[k] / c2;
          p.value[k] -= lr * mhat / (std::sqrt(vhat) + config.epsilon);
        }
      }
      break;
    }
    case OptimizerKind::rmsprop: {
      init(state.v);
      for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        auto& v = state.v[i];
        require_shape(v, p.value.shape(), "optimizer state");
        for (std::size_t k = 0; k < p.value.size(); ++k) {
          const double g = p.grad[k];
          v[k] = config.rms_decay * v[k] + (1.0 - config.rms_decay) * g * g;
          p.value[k] -= lr * g / (std::sqrt(v[k]) + config.epsilon);
        }
      }
      break;
    }
    case OptimizerKind::sgd_momentum: {
      init(state.velocity);
      for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        auto& vel = state.velocity[i];
        require_shape(vel, p.value.shape(), "optimizer state");
        for (std::size_t k = 0; k < p.value.size(); ++k) {
          vel[k] = config.momentum * vel[k] + p.grad[k];
          p.value[k] -= lr * vel[k];
        }
      }
      break;
    }
  }
}

LossResult mse_loss(const Tensor& prediction, const Tensor& target, std::size_t skip) {
  if (prediction.shape() != target.shape())
    throw DimensionError("mse_loss: prediction " + shape_string(prediction.shape()) + " vs target " +
                         shape_string(target.shape()));
  LossResult r{0.0, Tensor::zeros(prediction.shape())};
  if (prediction.empty()) throw DimensionError("mse_loss: empty input");
  if (skip > 0 && prediction.rank() != 3) throw DimensionError("mse_loss: skip needs (batch, channel, time)");
  const std::size_t time = prediction.rank() == 3 ? prediction.dim(2) : 1;
  if (skip >= time && skip > 0) throw DimensionError("mse_loss: skip leaves no samples");
  const std::size_t rows = prediction.size() / time;
  const double count = static_cast<double>(rows * (time - skip));
  double sum = 0.0;
  for (std::size_t r0 = 0; r0 < rows; ++r0) {
    for (std::size_t t = skip; t < time; ++t) {
      const std::size_t k = r0 * time + t;
      const double e = prediction[k] - target[k];
      sum += e * e;
      r.grad[k] = 2.0 * e / count;
    }
  }
  r.loss = sum / count;
  return r;
}

bool PlateauScheduler::observe(double valid_loss) {
  if (valid_loss < best_) {
    best_ = valid_loss;
    stagnant_ = 0;
    return false;
  }
  if (++stagnant_ >= patience_) {
    stagnant_ = 0;
    return true;
  }
  return false;
}

double PlateauScheduler::next_lr(double valid_loss, double lr) {
  return observe(valid_loss) ? std::max(lr * factor_, std::min(lr, min_lr_)) : lr;
}

double reduce_lr_on_plateau(std::span<const double> valid_losses, double lr, const TrainConfig& config) {
  if (valid_losses.empty()) throw ParameterError("reduce_lr_on_plateau: empty history");
  PlateauScheduler s(config.plateau_patience, config.lr_factor, config.min_lr);
  bool fire = false;
  for (double v : valid_losses) fire = s.observe(v);
  if (!fire) return lr;
  return std::max(lr * config.lr_factor, std::min(lr, config.min_lr));
}

std::string TrainHistory::to_csv() const {
  // Wall-clock time stays out so that seeded runs write identical files.
  std::string out = "epoch,train_loss,valid_loss,lr\n";
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.valid_loss) + "," +
           format_double(e.lr) + "\n";
  }
  return out;
}

double one_step_mse(const Model& model, const Dataset& dataset) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& rec : dataset.records) {
    const Tensor pred = predict_one_step(model, rec.u, rec.y);
    for (std::size_t k = 0; k < pred.size(); ++k) {
      const double e = pred[k] - rec.y[k];
      sum += e * e;
    }
    count += pred.size();
  }
  if (count == 0) throw DataError("one_step_mse: empty dataset");
  return sum / static_cast<double>(count);
}

namespace {

struct Window {
  std::size_t record;
  std::size_t start;
  std::size_t length;
};

struct Prepared {
  std::vector<Tensor> inputs;   // (1, Cin, T)
  std::vector<Tensor> targets;  // (ny, T)
  std::map<std::size_t, std::vector<Window>> groups;  // by window length
};

Prepared prepare(const ModelConfig& mc, const Dataset& ds, std::size_t window) {
  Prepared p;
  for (std::size_t r = 0; r < ds.records.size(); ++r) {
    const auto& rec = ds.records[r];
    if (rec.u.dim(0) != mc.num_inputs || rec.y.dim(0) != mc.num_outputs)
      throw SchemaError("training data has " + std::to_string(rec.u.dim(0)) + " inputs and " +
                        std::to_string(rec.y.dim(0)) + " outputs; model expects " + std::to_string(mc.num_inputs) +
                        " and " + std::to_string(mc.num_outputs));
    p.inputs.push_back(regressor_input(mc, rec.u, &rec.y));
    p.targets.push_back(rec.y);
    const std::size_t len = rec.length();
    const std::size_t w = (window == 0 || window >= len) ? len : window;
    std::size_t start = 0;
    for (; start + w <= len; start += w) p.groups[w].push_back({r, start, w});
    if (start < len) p.groups[w].push_back({r, len - w, w});
  }
  return p;
}

void fill_batch(const Prepared& p, std::span<const Window> batch, Tensor& x, Tensor& y) {
  const std::size_t len = batch.front().length;
  const std::size_t cin = p.inputs.front().dim(1), ny = p.targets.front().dim(0);
  x = Tensor({batch.size(), cin, len});
  y = Tensor({batch.size(), ny, len});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& w = batch[b];
    const Tensor& in = p.inputs[w.record];
    const Tensor& out = p.targets[w.record];
    const std::size_t total = in.dim(2);
    for (std::size_t c = 0; c < cin; ++c)
      for (std::size_t t = 0; t < len; ++t) x.at(b, c, t) = in[c * total + w.start + t];
    for (std::size_t c = 0; c < ny; ++c)
      for (std::size_t t = 0; t < len; ++t) y.at(b, c, t) = out.at(c, w.start + t);
  }
}

}  // namespace

TrainHistory train(Model& model, const Dataset& training, const Dataset* validation, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
  config.validate();
  training.validate();
  if (validation) validation->validate();
  const ModelConfig& mc = model.config();
  const Prepared data = prepare(mc, training, config.window);

  std::size_t skip = 0;
  if (config.mask_warmup && mc.family != Family::lstm) skip = model.receptive_field() - 1;
  for (const auto& [len, _] : data.groups)
    if (skip >= len) throw ConfigError("train: warm-up mask covers a whole window of length " + std::to_string(len));

  auto params = model.parameters();
  OptimizerState opt;
  PlateauScheduler scheduler(config.plateau_patience, config.lr_factor, config.min_lr);
  TrainHistory history;
  double lr = config.lr;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_state = model.snapshot();
  const Rng root(config.seed);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const Rng epoch_rng = root.split(epoch);
    Rng order_rng = epoch_rng.split(0);
    Rng dropout_rng = epoch_rng.split(1);

    std::vector<std::vector<Window>> batches;
    for (const auto& [len, windows] : data.groups) {
      auto shuffled = windows;
      order_rng.shuffle(shuffled);
      for (std::size_t i = 0; i < shuffled.size(); i += config.batch_size) {
        const std::size_t end = std::min(shuffled.size(), i + config.batch_size);
        batches.emplace_back(shuffled.begin() + static_cast<std::ptrdiff_t>(i),
                             shuffled.begin() + static_cast<std::ptrdiff_t>(end));
      }
    }
    order_rng.shuffle(batches);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    double loss_sum = 0.0, weight_sum = 0.0;
    Tensor x, y;
    for (const auto& batch : batches) {
      fill_batch(data, batch, x, y);
      model.zero_grad();
      const Tensor pred = model.forward(x, Mode::training, &dropout_rng);
      const LossResult loss = mse_loss(pred, y, skip);
      if (!std::isfinite(loss.loss)) {
        rec.train_loss = loss.loss;
        history.epochs.push_back(rec);
        throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + ": loss is not finite",
                              history);
      }
      model.backward(loss.grad);
      try {
        optimizer_step(params, opt, config, lr);
      } catch (const NumericError& e) {
        history.epochs.push_back(rec);
        throw DivergenceError(std::string("training diverged in epoch ") + std::to_string(epoch) + ": " + e.what(),
                              history);
      }
      const double weight = static_cast<double>(loss.grad.size());
      loss_sum += loss.loss * weight;
      weight_sum += weight;
    }
    rec.train_loss = loss_sum / weight_sum;
    if (validation) rec.valid_loss = one_step_mse(model, *validation);
    const double monitored = validation ? rec.valid_loss : rec.train_loss;
    if (!std::isfinite(monitored)) {
      history.epochs.push_back(rec);
      throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + ": monitored loss is not finite",
                            history);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (monitored < best) {
      best = monitored;
      best_state = model.snapshot();
      history.best_index = history.epochs.size() - 1;
    }
    lr = scheduler.next_lr(monitored, lr);
    if (config.early_stopping_patience > 0 &&
        history.epochs.size() - 1 - history.best_index >= config.early_stopping_patience) {
      history.stopped_early = true;
      break;
    }
  }
  model.restore(best_state);
  return history;
}

}  // namespace sysid
