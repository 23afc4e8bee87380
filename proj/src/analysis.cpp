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

#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

#include <fftw3.h>

#include "errors.hpp"
#include "text.hpp"

namespace sysid {

namespace {

struct SquaredErrors {
  std::vector<double> sum;
  std::size_t count = 0;

  void add(const Tensor& prediction, const Tensor& target, std::size_t skip) {
    require_rank(prediction, 2, "rmse prediction");
    if (prediction.shape() != target.shape())
      throw DimensionError("rmse: prediction " + shape_string(prediction.shape()) + " vs target " +
                           shape_string(target.shape()));
    const std::size_t channels = prediction.dim(0), time = prediction.dim(1);
    if (sum.empty()) sum.assign(channels, 0.0);
    if (sum.size() != channels) throw DimensionError("rmse: channel count changed between records");
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t t = skip; t < time; ++t) {
        const double e = prediction.at(c, t) - target.at(c, t);
        sum[c] += e * e;
      }
    if (time > skip) count += time - skip;
  }

  RmseResult result() const {
    if (count == 0 || sum.empty()) throw DataError("rmse: no samples to evaluate");
    RmseResult r;
    for (double s : sum) r.per_channel.push_back(std::sqrt(s / static_cast<double>(count)));
    for (double v : r.per_channel) r.mean += v;
    r.mean /= static_cast<double>(r.per_channel.size());
    return r;
  }
};

}  // namespace

RmseResult rmse(const Tensor& prediction, const Tensor& target, std::size_t skip) {
  SquaredErrors acc;
  acc.add(prediction, target, skip);
  return acc.result();
}

EvalMode parse_eval_mode(std::string_view name) {
  if (name == "one-step" || name == "one_step") return EvalMode::one_step;
  if (name == "free-run" || name == "free_run") return EvalMode::free_run;
  throw ParameterError("unknown evaluation mode '" + std::string(name) + "'");
}

std::string_view to_string(EvalMode m) { return m == EvalMode::one_step ? "one-step" : "free-run"; }

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = {{"mode", to_string(r.mode)}, {"rmse", r.rmse},       {"mean_rmse", r.mean_rmse},
       {"samples", r.samples},      {"skipped", r.skipped}, {"physical_units", r.physical_units}};
}

Evaluation evaluate(const Model& model, const Dataset& dataset, EvalMode mode, std::size_t skip) {
  dataset.validate();
  const auto& c = model.config();
  if (dataset.num_inputs() != c.num_inputs || dataset.num_outputs() != c.num_outputs)
    throw SchemaError("data has " + std::to_string(dataset.num_inputs()) + " inputs and " +
                      std::to_string(dataset.num_outputs()) + " outputs; model expects " +
                      std::to_string(c.num_inputs) + " and " + std::to_string(c.num_outputs));
  Evaluation ev;
  SquaredErrors acc;
  for (const auto& rec : dataset.records) {
    Tensor pred = mode == EvalMode::one_step ? predict_one_step(model, rec.u, rec.y)
                                             : simulate_free_run(model, rec.u, Tensor());
    Tensor target = rec.y;
    if (dataset.normalization) {
      pred = denormalize_outputs(pred, *dataset.normalization);
      target = denormalize_outputs(target, *dataset.normalization);
    }
    acc.add(pred, target, skip);
    ev.predictions.push_back(std::move(pred));
  }
  const RmseResult r = acc.result();
  ev.report = EvalReport{mode, r.per_channel, r.mean, acc.count, skip, dataset.normalization.has_value()};
  return ev;
}

VolterraKernels extract_volterra_kernels(const Model& model, int degree, ExpansionPoint point) {
  const auto& c = model.config();
  if (degree < 0 || degree > 2) throw ParameterError("Volterra degree must be 0, 1 or 2");
  if (c.feedback) throw UnsupportedError("Volterra kernels need a FIR model (no output feedback)");
  if (c.family != Family::mlp || c.depth != 1)
    throw UnsupportedError("Volterra extraction supports single-hidden-layer MLP models only");
  if (c.num_inputs != 1 || c.num_outputs != 1)
    throw UnsupportedError("Volterra extraction supports one input and one output");
  if (c.activation == Activation::relu)
    throw UnsupportedError("Volterra extraction needs a smooth activation; ReLU is not differentiable at 0");

  const Tensor& w_in = model.find_parameter("hidden0.weight")->value;  // (H, 1, m)
  const Tensor& b_in = model.find_parameter("hidden0.bias")->value;    // (H)
  const Tensor& w_out = model.find_parameter("output.weight")->value;  // (1, H, 1)
  const double b_out = model.find_parameter("output.bias")->value[0];
  const std::size_t hidden = w_in.dim(0), m = w_in.dim(2);
  const Activation a = c.activation;

  VolterraKernels k;
  k.degree = degree;
  k.memory = m;
  k.h1.assign(m, 0.0);
  if (degree >= 2) k.h2 = Tensor::zeros({m, m});
  k.h0 = b_out;
  for (std::size_t j = 0; j < hidden; ++j) {
    const double bias = b_in[j];
    const double out = w_out[j];
    // Coefficients of sigma(bias + s) as a polynomial in s.
    double c0, c1, c2;
    if (point == ExpansionPoint::bias) {
      c0 = activate(bias, a);
      c1 = activation_derivative(bias, a);
      c2 = 0.5 * activation_second_derivative(bias, a);
    } else {
      const double s0 = activate(0.0, a), s1 = activation_derivative(0.0, a),
                   s2 = 0.5 * activation_second_derivative(0.0, a);
      c0 = s0 + s1 * bias + s2 * bias * bias;
      c1 = s1 + 2.0 * s2 * bias;
      c2 = s2;
    }
    k.h0 += out * c0;
    if (degree < 1) continue;
    for (std::size_t t = 0; t < m; ++t) k.h1[t] += out * c1 * w_in[j * m + t];
    if (degree < 2) continue;
    for (std::size_t t1 = 0; t1 < m; ++t1)
      for (std::size_t t2 = t1; t2 < m; ++t2) k.h2.at(t1, t2) += out * c2 * w_in[j * m + t1] * w_in[j * m + t2];
  }
  if (degree >= 2)
    for (std::size_t t1 = 0; t1 < m; ++t1)
      for (std::size_t t2 = 0; t2 < t1; ++t2) k.h2.at(t1, t2) = k.h2.at(t2, t1);
  return k;
}

VolterraKernels fd_volterra_oracle(const LagFunction& f, std::size_t memory, int degree, double amplitude) {
  if (degree < 0 || degree > 2) throw ParameterError("Volterra degree must be 0, 1 or 2");
  if (!(amplitude > 0.0)) throw ParameterError("probe amplitude must be positive");
  if (memory == 0) throw ParameterError("Volterra memory must be positive");
  const std::size_t m = memory;
  std::vector<double> lags(m);
  auto response = [&](std::initializer_list<std::pair<std::size_t, double>> probes) {
    std::fill(lags.begin(), lags.end(), 0.0);
    for (auto [tau, v] : probes) lags[tau] += v;
    return f(lags);
  };

  VolterraKernels k;
  k.degree = degree;
  k.memory = m;
  k.h0 = response({});
  k.h1.assign(m, 0.0);
  if (degree < 1) return k;
  const double a = amplitude;
  std::vector<double> plus(m), minus(m);
  for (std::size_t t = 0; t < m; ++t) {
    plus[t] = response({{t, a}});
    minus[t] = response({{t, -a}});
    k.h1[t] = (plus[t] - minus[t]) / (2.0 * a);
  }
  if (degree < 2) return k;
  k.h2 = Tensor::zeros({m, m});
  for (std::size_t t = 0; t < m; ++t) k.h2.at(t, t) = (plus[t] - 2.0 * k.h0 + minus[t]) / (2.0 * a * a);
  for (std::size_t t1 = 0; t1 < m; ++t1) {
    for (std::size_t t2 = t1 + 1; t2 < m; ++t2) {
      const double mixed = response({{t1, a}, {t2, a}}) - response({{t1, a}, {t2, -a}}) -
                           response({{t1, -a}, {t2, a}}) + response({{t1, -a}, {t2, -a}});
      k.h2.at(t1, t2) = mixed / (8.0 * a * a);
      k.h2.at(t2, t1) = k.h2.at(t1, t2);
    }
  }
  return k;
}

VolterraKernels fd_volterra_oracle(const Model& model, int degree, double amplitude) {
  const auto& c = model.config();
  if (c.feedback) throw UnsupportedError("Volterra kernels need a FIR model (no output feedback)");
  if (c.num_inputs != 1 || c.num_outputs != 1)
    throw UnsupportedError("Volterra probing supports one input and one output");
  const std::size_t m = model.receptive_field();
  const std::size_t len = m + 1;
  const Tensor y = Tensor::zeros({1, len});
  // Output at k = m sees x[m - tau] = u[m - 1 - tau] for tau in [0, m).
  auto output = [&](std::span<const double> lags) {
    Tensor u = Tensor::zeros({1, len});
    for (std::size_t tau = 0; tau < m; ++tau) u[m - 1 - tau] = lags[tau];
    return predict_one_step(model, u, y)[m];
  };
  return fd_volterra_oracle(output, m, degree, amplitude);
}

double max_kernel_difference(const VolterraKernels& a, const VolterraKernels& b) {
  if (a.memory != b.memory) throw DimensionError("kernel memories differ");
  double d = std::abs(a.h0 - b.h0);
  for (std::size_t t = 0; t < std::min(a.h1.size(), b.h1.size()); ++t) d = std::max(d, std::abs(a.h1[t] - b.h1[t]));
  if (!a.h2.empty() && !b.h2.empty()) d = std::max(d, max_abs_diff(a.h2, b.h2));
  return d;
}

double max_kernel_magnitude(const VolterraKernels& k) {
  double m = std::abs(k.h0);
  for (double v : k.h1) m = std::max(m, std::abs(v));
  if (!k.h2.empty()) m = std::max(m, max_abs(k.h2));
  return m;
}

std::string kernel_h0_csv(const VolterraKernels& k) { return "h0\n" + format_double(k.h0) + "\n"; }

std::string kernel_h1_csv(const VolterraKernels& k) {
  std::string out = "lag,h1\n";
  for (std::size_t t = 0; t < k.h1.size(); ++t) out += std::to_string(t) + "," + format_double(k.h1[t]) + "\n";
  return out;
}

std::string kernel_h2_csv(const VolterraKernels& k) {
  if (k.h2.empty()) throw ParameterError("kernels carry no second-order term");
  std::string out = "lag";
  for (std::size_t t = 0; t < k.memory; ++t) out += ",lag" + std::to_string(t);
  out += "\n";
  for (std::size_t t1 = 0; t1 < k.memory; ++t1) {
    out += std::to_string(t1);
    for (std::size_t t2 = 0; t2 < k.memory; ++t2) out += "," + format_double(k.h2.at(t1, t2));
    out += "\n";
  }
  return out;
}

Spectrum error_spectrum(std::span<const double> error, double sample_rate) {
  if (error.size() < 2) throw DataError("error spectrum needs at least 2 samples");
  if (!(sample_rate > 0.0)) throw ParameterError("sample rate must be positive");
  const std::size_t n = error.size();
  const std::size_t half = n / 2 + 1;
  std::vector<double> in(error.begin(), error.end());
  std::vector<std::complex<double>> out(half);
  {
    // The FFTW planner is not thread safe; execution is.
    static std::mutex planner;
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(planner);
      plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                  FFTW_ESTIMATE);
    }
    if (!plan) throw NumericError("FFT planning failed");
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(planner);
    fftw_destroy_plan(plan);
  }
  Spectrum s;
  s.frequency.resize(n);
  s.magnitude.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.frequency[k] = static_cast<double>(k) * sample_rate / static_cast<double>(n);
    s.magnitude[k] = std::abs(k < half ? out[k] : out[n - k]);
  }
  return s;
}

Spectrum select_band(const Spectrum& s, double lo, double hi) {
  if (!(lo <= hi)) throw ParameterError("band lower edge exceeds upper edge");
  const std::size_t n = s.frequency.size();
  Spectrum out;
  for (std::size_t k = 0; k <= n / 2 && k < n; ++k) {
    if (s.frequency[k] >= lo && s.frequency[k] <= hi) {
      out.frequency.push_back(s.frequency[k]);
      out.magnitude.push_back(s.magnitude[k]);
    }
  }
  return out;
}

std::string spectrum_csv(const Spectrum& s) {
  std::string out = "frequency_hz,magnitude\n";
  for (std::size_t k = 0; k < s.frequency.size(); ++k)
    out += format_double(s.frequency[k]) + "," + format_double(s.magnitude[k]) + "\n";
  return out;
}

}  // namespace sysid
