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

// Acceptance run: one PASS/FAIL/SKIP line per criterion, nonzero exit on any
// FAIL. Benchmark data is read from $SYSID_BENCHMARK_DIR (default
// <source>/benchmarks) as prepared by tools/prepare_benchmarks.py.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "blocks.hpp"
#include "data.hpp"
#include "hyperopt.hpp"
#include "layers.hpp"
#include "model.hpp"
#include "test_util.hpp"
#include "training.hpp"

namespace {

using namespace sysid;
using sysid::testing::contract;
using sysid::testing::numeric_gradient;
using sysid::testing::relative_error;

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::pass;
  std::string detail;
};

/// Collects failed checks; the first message is reported.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_ == 0) first_ = what;
    ++failures_;
  }
  bool ok() const { return failures_ == 0; }
  Outcome outcome(const std::string& summary) const {
    if (ok()) return {Status::pass, summary};
    return {Status::fail, summary + "; " + std::to_string(failures_) + " failed check(s), first: " + first_};
  }

 private:
  std::size_t failures_ = 0;
  std::string first_;
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// ---- 1. gradients ------------------------------------------------------------

constexpr double kGradTol = 1e-6;

struct GradCheck {
  double worst = 0.0;
  Checks* checks;
  void operator()(const Tensor& analytic, const Tensor& numeric, const std::string& what) {
    const double e = relative_error(analytic, numeric);
    worst = std::max(worst, e);
    checks->expect(e <= kGradTol, what + " relative error " + fmt("%.3g", e));
  }
};

void randomize_biases(std::vector<Parameter*> params, Rng& rng, double std) {
  for (auto* p : params)
    if (p->name.ends_with("bias")) p->value = gaussian(rng, p->value.shape(), 0, std);
}

Activation smooth_activation(Rng& rng) { return rng.below(2) == 0 ? Activation::tanh : Activation::sigmoid; }

void check_model(Model& model, Rng& rng, GradCheck& check, const std::string& tag) {
  const ModelConfig& c = model.config();
  const std::size_t T = c.family == Family::lstm ? 5 : 8;
  Tensor x = gaussian(rng, {2, c.input_channels(), T}, 0, 1);
  const Tensor up = gaussian(rng, {2, c.num_outputs, T}, 0, 1);
  const Rng dropout_rng(rng.next_u64());
  auto f = [&] {
    Rng r = dropout_rng;
    return contract(up, model.forward(x, Mode::training, &r));
  };
  model.zero_grad();
  {
    Rng r = dropout_rng;
    model.forward(x, Mode::training, &r);
  }
  const Tensor gx = model.backward(up);
  check(gx, numeric_gradient(x, f), tag + " input");
  for (auto* p : model.parameters()) {
    const Tensor analytic = p->grad;
    check(analytic, numeric_gradient(p->value, f), tag + " " + p->name);
  }
}

void gradient_instance(int i, Rng& rng, GradCheck& check) {
  const std::string tag = "instance " + std::to_string(i);
  switch (i % 10) {
    case 0: {
      const std::size_t B = 1 + rng.below(2), C = 1 + rng.below(3), O = 1 + rng.below(3), T = 2 + rng.below(8),
                        n = 1 + rng.below(3);
      const int d = 1 + static_cast<int>(rng.below(3));
      Tensor x = gaussian(rng, {B, C, T}, 0, 1), w = gaussian(rng, {O, C, n}, 0, 1), b = gaussian(rng, {O}, 0, 1);
      const Tensor up = gaussian(rng, {B, O, T}, 0, 1);
      const auto g = causal_conv1d_backward(x, w, d, up);
      auto f = [&] { return contract(up, causal_conv1d_forward(x, w, b, d)); };
      check(g.input, numeric_gradient(x, f), tag + " conv input");
      check(g.weight, numeric_gradient(w, f), tag + " conv weight");
      check(g.bias, numeric_gradient(b, f), tag + " conv bias");
      break;
    }
    case 1: {
      const std::size_t B = 1 + rng.below(4), F = 1 + rng.below(5), G = 1 + rng.below(5);
      Tensor x = gaussian(rng, {B, F}, 0, 1), w = gaussian(rng, {G, F}, 0, 1), b = gaussian(rng, {G}, 0, 1);
      const Tensor up = gaussian(rng, {B, G}, 0, 1);
      const auto g = dense_backward(x, w, up);
      auto f = [&] { return contract(up, dense_forward(x, w, b)); };
      check(g.input, numeric_gradient(x, f), tag + " dense input");
      check(g.weight, numeric_gradient(w, f), tag + " dense weight");
      check(g.bias, numeric_gradient(b, f), tag + " dense bias");
      break;
    }
    case 2: {
      const auto a = static_cast<Activation>(rng.below(3));
      Tensor x = gaussian(rng, {2, 3, 6}, 0, 1.5);
      // ReLU probes stay away from the kink.
      for (double& v : x.data())
        if (std::abs(v) < 1e-2) v = 0.5;
      const Tensor up = gaussian(rng, x.shape(), 0, 1);
      auto f = [&] { return contract(up, activation_forward(x, a)); };
      check(activation_backward(x, up, a), numeric_gradient(x, f), tag + " activation");
      break;
    }
    case 3: {
      Tensor x = gaussian(rng, {2, 3, 6}, 0, 1);
      const double rate = 0.1 + 0.6 * (static_cast<double>(rng.below(1000)) / 1000.0);
      const Rng mask_rng(rng.next_u64());
      auto f = [&] {
        Rng r = mask_rng;
        return contract(x, dropout_forward(x, rate, r, Mode::training).output) * 0.5;
      };
      Rng r = mask_rng;
      const auto res = dropout_forward(x, rate, r, Mode::training);
      // d/dx of 0.5 * sum(x * m * x) is m * x.
      check(dropout_backward(res.mask, x), numeric_gradient(x, f), tag + " dropout");
      break;
    }
    case 4: {
      const std::size_t B = 1 + rng.below(3), C = 1 + rng.below(3), T = 2 + rng.below(6);
      Tensor x = gaussian(rng, {B, C, T}, 0.3, 1.2), gamma = gaussian(rng, {C}, 1, 0.3), beta = gaussian(rng, {C}, 0, 1);
      const Tensor up = gaussian(rng, x.shape(), 0, 1);
      BatchNormState state(C);
      BatchNormCache cache;
      batchnorm_forward(x, gamma, beta, state, &cache);
      const auto g = batchnorm_backward(cache, gamma, up);
      auto f = [&] {
        BatchNormState s(C);
        return contract(up, batchnorm_forward(x, gamma, beta, s));
      };
      check(g.input, numeric_gradient(x, f), tag + " batch norm input");
      check(g.gamma, numeric_gradient(gamma, f), tag + " batch norm gamma");
      check(g.beta, numeric_gradient(beta, f), tag + " batch norm beta");
      break;
    }
    case 5: {
      const std::size_t O = 1 + rng.below(3), C = 1 + rng.below(3), n = 1 + rng.below(3);
      Tensor v = gaussian(rng, {O, C, n}, 0, 1), g = gaussian(rng, {O}, 1, 0.5);
      const Tensor up = gaussian(rng, v.shape(), 0, 1);
      const auto grads = weightnorm_backward(v, g, up);
      auto f = [&] { return contract(up, weightnorm_forward(v, g)); };
      check(grads.direction, numeric_gradient(v, f), tag + " weight norm direction");
      check(grads.magnitude, numeric_gradient(g, f), tag + " weight norm magnitude");
      break;
    }
    case 6: {
      const BlockConfig cfg{1 + rng.below(3),  1 + rng.below(3),         1 + rng.below(3),
                            1 + static_cast<int>(rng.below(3)), static_cast<Norm>(rng.below(3)), smooth_activation(rng),
                            rng.below(2) == 0 ? 0.0 : 0.25};
      ResidualBlock block("block", cfg);
      block.initialize(rng);
      randomize_biases(block.parameters(), rng, 0.5);
      Tensor x = gaussian(rng, {2, cfg.in_channels, 7}, 0, 1);
      const Tensor up = gaussian(rng, {2, cfg.out_channels, 7}, 0, 1);
      const Rng dropout_rng(rng.next_u64());
      auto f = [&] {
        Rng r = dropout_rng;
        return contract(up, block.forward(x, Mode::training, &r));
      };
      for (auto* p : block.parameters()) p->zero_grad();
      {
        Rng r = dropout_rng;
        block.forward(x, Mode::training, &r);
      }
      const Tensor gx = block.backward(up);
      check(gx, numeric_gradient(x, f), tag + " residual block input");
      for (auto* p : block.parameters()) {
        const Tensor analytic = p->grad;
        check(analytic, numeric_gradient(p->value, f), tag + " residual block " + p->name);
      }
      break;
    }
    default: {
      ModelConfig c;
      c.family = i % 10 == 7 ? Family::tcn : i % 10 == 8 ? Family::mlp : Family::lstm;
      c.num_inputs = 1 + rng.below(2);
      c.num_outputs = 1 + rng.below(2);
      c.feedback = rng.below(4) != 0;
      c.hidden = 2 + rng.below(3);
      c.depth = 1 + rng.below(3);
      c.kernel_size = 1 + rng.below(3);
      c.dilations = rng.below(2) == 1;
      c.order = 1 + rng.below(3);
      c.activation = smooth_activation(rng);
      if (c.family == Family::tcn) c.norm = static_cast<Norm>(rng.below(3));
      if (c.family != Family::lstm) c.dropout = rng.below(2) == 0 ? 0.0 : 0.2;
      auto model = build_model(c, rng);
      randomize_biases(model->parameters(), rng, 0.3);
      check_model(*model, rng, check, tag + " " + nlohmann::json(c).dump());
    }
  }
}

Outcome gradient_correctness() {
  Checks checks;
  GradCheck check{0.0, &checks};
  Rng rng(20240901);
  for (int i = 0; i < 100; ++i) gradient_instance(i, rng, check);
  return checks.outcome("100 instances, worst relative error " + fmt("%.3g", check.worst));
}

// ---- 2. receptive field --------------------------------------------------------

/// Largest input lag, plus one, that changes the last output sample.
std::size_t probe_field(const Model& model, Rng& rng) {
  const std::size_t C = model.config().input_channels();
  const std::size_t T = model.receptive_field() + 8;
  const Tensor x = gaussian(rng, {1, C, T}, 0, 1);
  const Tensor base = model.infer(x);
  std::size_t field = 0;
  for (std::size_t lag = 0; lag < T; ++lag)
    for (std::size_t c = 0; c < C; ++c) {
      Tensor xp = x;
      xp.at(0, c, T - 1 - lag) += 1.0;
      const Tensor y = model.infer(xp);
      for (std::size_t o = 0; o < model.config().num_outputs; ++o)
        if (y.at(0, o, T - 1) != base.at(0, o, T - 1)) field = lag + 1;
    }
  return field;
}

Outcome causality_and_receptive_field() {
  Checks checks;
  Rng rng(77);
  std::size_t dilated = 0;
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig c;
    c.family = Family::tcn;
    c.depth = 1 + rng.below(4);
    c.kernel_size = 1 + rng.below(4);
    c.dilations = trial % 2 == 0;
    c.hidden = 2 + rng.below(3);
    c.num_inputs = 1 + rng.below(2);
    c.num_outputs = 1 + rng.below(2);
    c.feedback = rng.below(3) != 0;
    c.norm = static_cast<Norm>(rng.below(3));
    c.activation = smooth_activation(rng);
    dilated += c.dilations;
    std::size_t formula = 1;
    for (std::size_t l = 1; l <= c.depth; ++l)
      formula += 2 * (c.kernel_size - 1) * (c.dilations ? std::size_t{1} << (l - 1) : 1);
    auto model = build_model(c, rng);
    randomize_biases(model->parameters(), rng, 0.3);
    const std::string tag = nlohmann::json(c).dump();
    checks.expect(model->receptive_field() == formula, tag + ": reported field differs from formula");
    checks.expect(probe_field(*model, rng) == formula, tag + ": probed field differs from formula");
  }
  return checks.outcome("20 TCN configs (" + std::to_string(dilated) + " dilated)");
}

// ---- 3 and 4. Chen system ------------------------------------------------------

ModelConfig chen_tcn(std::size_t depth, std::size_t n, std::size_t hidden) {
  ModelConfig c;
  c.family = Family::tcn;
  c.depth = depth;
  c.kernel_size = n;
  c.hidden = hidden;
  c.activation = Activation::tanh;
  return c;
}

Outcome chen_noise_floor() {
  const NoiseSpec noise{0.3, 0.3, 3001};
  const Dataset train_set = make_chen_dataset(80, 100, noise);
  const Dataset valid_set = make_chen_dataset(40, 100, {0.3, 0.3, 3002}, 5, Role::validation);
  Rng rng(3003);
  auto model = build_model(chen_tcn(3, 2, 16), rng);
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.batch_size = 8;
  cfg.lr_factor = 0.5;
  cfg.min_lr = 2e-4;
  cfg.seed = 3004;
  train(*model, train_set, &valid_set, cfg);
  const double r = evaluate(*model, valid_set, EvalMode::one_step).report.mean_rmse;
  Checks checks;
  checks.expect(r >= 0.42 && r <= 0.60, "one-step RMSE outside [0.42, 0.60]");
  return checks.outcome("N=8000, validation one-step RMSE " + fmt("%.4f", r));
}

Outcome chen_noiseless_recovery() {
  const Dataset train_set = make_chen_dataset(20, 100, {0.0, 0.0, 4001});
  const Dataset valid_set = make_chen_dataset(20, 100, {0.0, 0.0, 4002}, 5, Role::validation);
  const Dataset fresh = make_chen_dataset(20, 100, {0.0, 0.0, 4003}, 5, Role::test);
  Rng rng(4004);
  auto model = build_model(chen_tcn(5, 2, 16), rng);
  // Single-window batches and a floor under the plateau decay keep the
  // optimizer moving long enough to resolve the noiseless map.
  TrainConfig cfg;
  cfg.max_epochs = 4000;
  cfg.batch_size = 1;
  cfg.lr_factor = 0.5;
  cfg.min_lr = 2e-4;
  cfg.early_stopping_patience = 500;
  cfg.seed = 4005;
  train(*model, train_set, &valid_set, cfg);
  const double r = evaluate(*model, fresh, EvalMode::free_run).report.mean_rmse;
  Checks checks;
  checks.expect(r < 0.05, "free-run RMSE not below 0.05");
  return checks.outcome("L=5, n=2, fresh-set free-run RMSE " + fmt("%.4f", r));
}

// ---- 5. Volterra ---------------------------------------------------------------

Outcome volterra_equivalence() {
  Checks checks;
  Rng rng(55);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    ModelConfig c;
    c.family = Family::mlp;
    c.feedback = false;
    c.depth = 1;
    c.order = 1 + rng.below(5);
    c.hidden = 1 + rng.below(6);
    c.activation = Activation::tanh;
    auto model = build_model(c, rng);
    for (auto* p : model->parameters()) p->value = uniform(rng, p->value.shape(), -0.8, 0.8);
    const auto k = extract_volterra_kernels(*model, 2);
    const auto oracle = fd_volterra_oracle(*model, 2);
    const double diff = max_kernel_difference(k, oracle);
    const double bound = 1e-4 * std::max(max_kernel_magnitude(k), 1.0);
    worst = std::max(worst, diff / bound);
    checks.expect(diff <= bound, "network " + std::to_string(trial) + ": kernel difference " + fmt("%.3g", diff));

    for (auto* p : model->parameters())
      if (p->name == "hidden0.bias") p->value.fill(0.0);
    const auto at_zero = extract_volterra_kernels(*model, 2);
    checks.expect(norm2(at_zero.h2) < 1e-12, "network " + std::to_string(trial) + ": h2 nonzero at zero bias");
  }
  return checks.outcome("50 tanh FIR networks, worst difference " + fmt("%.3g", worst) + " of bound");
}

// ---- 6. optimizer contracts ----------------------------------------------------

Outcome optimizer_contracts() {
  Checks checks;
  Rng rng(66);
  double worst = 0.0;
  for (double lr : {1e-4, 1e-3, 1e-2, 1e-1}) {
    Parameter p;
    p.name = "p";
    p.value = gaussian(rng, {50}, 0, 1);
    // Log-uniform magnitudes in [1e-3, 1e3] with random signs. Near the
    // epsilon scale the step is lr |g| / (|g| + eps) and falls short of lr.
    const Tensor exponent = uniform(rng, {50}, -3.0, 3.0);
    p.grad = Tensor::zeros({50});
    for (std::size_t k = 0; k < 50; ++k) p.grad[k] = (rng.below(2) == 0 ? -1.0 : 1.0) * std::pow(10.0, exponent[k]);
    const Tensor before = p.value;
    TrainConfig cfg;
    OptimizerState state;
    Parameter* ptr = &p;
    optimizer_step(std::span<Parameter* const>(&ptr, 1), state, cfg, lr);
    for (std::size_t k = 0; k < 50; ++k) {
      const double step = std::abs(p.value[k] - before[k]);
      worst = std::max(worst, std::abs(step - lr));
      checks.expect(std::abs(step - lr) <= 1e-6, "Adam first step differs from lr " + fmt("%g", lr));
    }
  }

  TrainConfig cfg;
  checks.expect(cfg.plateau_patience == 10, "default plateau patience is not 10");
  for (std::size_t stagnant = 0; stagnant <= 12; ++stagnant) {
    std::vector<double> losses{1.0, 0.5};
    for (std::size_t s = 0; s < stagnant; ++s) losses.push_back(s % 2 == 0 ? 0.5 : 0.7);
    const double lr = reduce_lr_on_plateau(losses, 1e-3, cfg);
    const double expected = stagnant == 10 ? 1e-4 : 1e-3;
    checks.expect(std::abs(lr - expected) < 1e-18,
                  "lr after " + std::to_string(stagnant) + " stagnant epochs is " + fmt("%g", lr));
  }
  PlateauScheduler plateau(10, 0.1, 1e-6);
  plateau.observe(1.0);
  for (int s = 1; s <= 10; ++s)
    checks.expect(plateau.observe(1.0) == (s == 10), "scheduler fired after " + std::to_string(s) + " epochs");
  return checks.outcome("Adam first step max |step - lr| " + fmt("%.3g", worst) + "; plateau fires at 10");
}

// ---- 7. determinism ------------------------------------------------------------

GridResult without_timing(GridResult r) {
  for (auto& row : r.rows) row.seconds = 0.0;
  return r;
}

Outcome determinism() {
  Checks checks;
  const Dataset train_set = make_chen_dataset(6, 100, {0.3, 0.3, 7001});
  const Dataset valid_set = make_chen_dataset(2, 100, {0.3, 0.3, 7002}, 5, Role::validation);
  ModelConfig c = chen_tcn(2, 3, 6);
  c.dropout = 0.2;
  c.norm = Norm::batch;
  TrainConfig cfg;
  cfg.max_epochs = 20;
  cfg.batch_size = 4;
  cfg.window = 50;
  cfg.seed = 7003;
  std::string histories[2];
  for (auto& h : histories) {
    Rng rng(7004);
    auto model = build_model(c, rng);
    h = train(*model, train_set, &valid_set, cfg).to_csv();
  }
  checks.expect(histories[0] == histories[1], "seeded training histories differ");

  const GridSpace space = grid_space_from_json(nlohmann::ordered_json::parse(R"({
    "model": {"family": "tcn", "depth": 1, "activation": "tanh"},
    "train": {"max_epochs": 5, "batch_size": 4, "window": 50},
    "axes": {"hidden": [2, 4], "kernel_size": [1, 2, 3]},
    "repetitions": 2
  })"));
  GridOptions one, four;
  one.seed = four.seed = 7005;
  four.jobs = 4;
  const auto a = without_timing(run_grid(space, train_set, valid_set, one)).to_csv();
  const auto b = without_timing(run_grid(space, train_set, valid_set, four)).to_csv();
  checks.expect(a == b, "grid results differ between 1 and 4 workers");
  return checks.outcome("history CSVs identical; 12-run grid identical for 1 and 4 workers");
}

// ---- 8. benchmarks -------------------------------------------------------------

std::filesystem::path benchmark_dir() {
  if (const char* env = std::getenv("SYSID_BENCHMARK_DIR")) return env;
  return SYSID_DEFAULT_BENCHMARK_DIR;
}

bool has_split(const std::filesystem::path& dir) {
  for (const char* name : {"train.csv", "valid.csv", "test.csv"})
    if (!std::filesystem::exists(dir / name)) return false;
  return true;
}

/// Trains on normalized data; evaluation maps back to physical units.
std::unique_ptr<Model> fit_benchmark(const std::filesystem::path& dir, ModelConfig c, TrainConfig cfg,
                                     Dataset& test_out) {
  Dataset train_set = load_csv_dataset(dir / "train.csv");
  Dataset valid_set = load_csv_dataset(dir / "valid.csv", {}, Role::validation);
  Dataset test_set = load_csv_dataset(dir / "test.csv", {}, Role::test);
  const Normalization n = compute_normalization(train_set);
  train_set = normalize_dataset(train_set, n);
  valid_set = normalize_dataset(valid_set, n);
  test_out = normalize_dataset(test_set, n);
  c.num_inputs = train_set.num_inputs();
  c.num_outputs = train_set.num_outputs();
  Rng rng(cfg.seed + 1);
  auto model = build_model(c, rng);
  train(*model, train_set, &valid_set, cfg);
  return model;
}

Outcome benchmarks() {
  const auto root = benchmark_dir();
  const bool silverbox = has_split(root / "silverbox"), f16 = has_split(root / "f16");
  if (!silverbox && !f16) return {Status::skip, "no benchmark files under " + root.string()};
  Checks checks;
  std::string summary;
  if (silverbox) {
    ModelConfig c = chen_tcn(4, 3, 16);
    c.dilations = true;
    TrainConfig cfg;
    cfg.max_epochs = 200;
    cfg.window = 500;
    cfg.seed = 8001;
    Dataset test_set;
    auto model = fit_benchmark(root / "silverbox", c, cfg, test_set);
    const auto ev = evaluate(*model, test_set, EvalMode::free_run);
    const double full = ev.report.mean_rmse;
    // Leading 25000 samples of the first test record, in volts.
    const auto& rec = test_set.records.front();
    const std::size_t head = std::min<std::size_t>(25000, rec.length());
    const auto& n = *test_set.normalization;
    double sq = 0.0;
    for (std::size_t k = 0; k < head; ++k) {
      const double e = (ev.predictions.front().at(0, k) - rec.y.at(0, k)) * n.y_scale[0];
      sq += e * e;
    }
    const double first = std::sqrt(sq / static_cast<double>(head));
    checks.expect(full <= 0.010, "Silverbox free-run RMSE above 10 mV");
    checks.expect(first <= 0.0015, "Silverbox first-25000 free-run RMSE above 1.5 mV");
    summary += "Silverbox free-run " + fmt("%.2f", full * 1e3) + " mV, first 25000 " + fmt("%.2f", first * 1e3) +
               " mV";
  } else {
    summary += "Silverbox absent";
  }
  if (f16) {
    ModelConfig c = chen_tcn(4, 3, 32);
    c.dilations = true;
    TrainConfig cfg;
    cfg.max_epochs = 200;
    cfg.window = 500;
    cfg.seed = 8002;
    Dataset test_set;
    auto model = fit_benchmark(root / "f16", c, cfg, test_set);
    const double r = evaluate(*model, test_set, EvalMode::one_step).report.mean_rmse;
    checks.expect(r <= 0.07, "F-16 mean one-step RMSE above 0.07");
    summary += "; F-16 one-step " + fmt("%.4f", r);
  } else {
    summary += "; F-16 absent";
  }
  return checks.outcome(summary);
}

// ---- 9. grid harness -----------------------------------------------------------

Outcome grid_harness() {
  Checks checks;
  const std::size_t n = grid_expand(grid_preset("chen-tcn")).size();
  checks.expect(n == 1920, "chen-tcn preset expands to " + std::to_string(n));
  const Dataset train_set = make_chen_dataset(20, 100, {0.3, 0.3, 9001});
  const Dataset valid_set = make_chen_dataset(4, 100, {0.3, 0.3, 9002}, 5, Role::validation);
  const GridSpace smoke = grid_space_from_json(nlohmann::ordered_json::parse(R"({
    "model": {"family": "tcn", "depth": 2, "activation": "tanh"},
    "train": {"max_epochs": 20, "batch_size": 8},
    "axes": {"hidden": [4, 8, 16], "dilations": [false, true]}
  })"));
  checks.expect(grid_expand(smoke).size() == 6, "smoke grid does not have 6 configs");
  GridOptions options;
  options.seed = 9003;
  const auto result = run_grid(smoke, train_set, valid_set, options);
  std::size_t ok = 0;
  for (const auto& row : result.rows) ok += row.ok;
  checks.expect(result.rows.size() == 6 && ok == 6, std::to_string(ok) + " of 6 smoke runs succeeded");
  return checks.outcome("chen-tcn preset " + std::to_string(n) + " configs; smoke grid " + std::to_string(ok) +
                        "/6 ok");
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0 means unbounded
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", 60, gradient_correctness},
      {2, "causality and receptive field", 60, causality_and_receptive_field},
      {3, "Chen noise floor", 600, chen_noise_floor},
      {4, "Chen noiseless recovery", 300, chen_noiseless_recovery},
      {5, "Volterra equivalence", 60, volterra_equivalence},
      {6, "optimizer contracts", 0, optimizer_contracts},
      {7, "determinism", 0, determinism},
      {8, "benchmarks", 0, benchmarks},
      {9, "grid harness", 180, grid_harness},
  };
  // Optional arguments select criteria by number.
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out.status == Status::pass && c.limit_seconds > 0 && seconds > c.limit_seconds) {
      out.status = Status::fail;
      out.detail += "; exceeded " + fmt("%.0f", c.limit_seconds) + " s";
    }
    const char* label = out.status == Status::pass ? "PASS" : out.status == Status::fail ? "FAIL" : "SKIP";
    std::printf("criterion %d %s: %s (%s; %.1f s)\n", c.id, c.name, label, out.detail.c_str(), seconds);
    std::fflush(stdout);
    failures += out.status == Status::fail;
  }
  return failures == 0 ? 0 : 1;
}
