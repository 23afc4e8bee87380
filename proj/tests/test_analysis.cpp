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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "analysis.hpp"
#include "errors.hpp"
#include "test_util.hpp"

namespace sysid {
namespace {

Parameter& param(Model& model, std::string_view name) {
  for (auto* p : model.parameters())
    if (p->name == name) return *p;
  throw std::runtime_error("no parameter " + std::string(name));
}

TEST(Rmse, PerfectFitIsZero) {
  const Tensor y({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  const auto r = rmse(y, y);
  EXPECT_EQ(r.per_channel, (std::vector<double>{0, 0}));
  EXPECT_EQ(r.mean, 0.0);
}

TEST(Rmse, KnownValue) {
  EXPECT_NEAR(rmse(Tensor({1, 2}, 0.0), Tensor({1, 2}, std::vector<double>{3, 4})).mean, 3.5355339059327378,
              1e-15);
}

TEST(Rmse, ConstantOffsetPerChannel) {
  Rng rng(1);
  const Tensor y = gaussian(rng, {2, 50}, 0, 1);
  Tensor p = y;
  for (std::size_t k = 0; k < 50; ++k) {
    p.at(0, k) += 0.25;
    p.at(1, k) -= 2.0;
  }
  const auto r = rmse(p, y);
  EXPECT_NEAR(r.per_channel[0], 0.25, 1e-14);
  EXPECT_NEAR(r.per_channel[1], 2.0, 1e-14);
  EXPECT_NEAR(r.mean, 1.125, 1e-14);
}

TEST(Rmse, SkipAndErrors) {
  const Tensor p({1, 4}, std::vector<double>{9, 9, 1, 1});
  EXPECT_EQ(rmse(p, Tensor::zeros({1, 4}), 2).mean, 1.0);
  EXPECT_THROW(rmse(p, Tensor::zeros({1, 4}), 4), DataError);
  EXPECT_THROW(rmse(p, Tensor::zeros({1, 3})), DimensionError);
}

TEST(Rmse, InvariantUnderJointPermutation) {
  Rng rng(2);
  const Tensor p = gaussian(rng, {3, 64}, 0, 1), y = gaussian(rng, {3, 64}, 0, 1);
  const auto base = rmse(p, y);
  std::vector<std::size_t> perm(64);
  for (std::size_t k = 0; k < 64; ++k) perm[k] = k;
  for (int trial = 0; trial < 10; ++trial) {
    rng.shuffle(perm);
    Tensor pp(p.shape()), yp(y.shape());
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t k = 0; k < 64; ++k) {
        pp.at(c, k) = p.at(c, perm[k]);
        yp.at(c, k) = y.at(c, perm[k]);
      }
    const auto r = rmse(pp, yp);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(r.per_channel[c], base.per_channel[c], 1e-14);
  }
}

std::unique_ptr<Model> fir_mlp(std::size_t order, std::size_t hidden, Activation act, std::uint64_t seed,
                               std::size_t depth = 1) {
  ModelConfig c;
  c.family = Family::mlp;
  c.feedback = false;
  c.order = order;
  c.hidden = hidden;
  c.depth = depth;
  c.activation = act;
  Rng rng(seed);
  auto m = build_model(c, rng);
  for (auto* p : m->parameters()) p->value = uniform(rng, p->value.shape(), -0.5, 0.5);
  return m;
}

TEST(Volterra, ZeroInputWeightsGiveConstantKernel) {
  auto m = fir_mlp(3, 4, Activation::tanh, 3);
  param(*m, "hidden0.weight").value.fill(0.0);
  const auto k = extract_volterra_kernels(*m, 2);
  const Tensor& b = m->find_parameter("hidden0.bias")->value;
  const Tensor& w2 = m->find_parameter("output.weight")->value;
  double h0 = m->find_parameter("output.bias")->value[0];
  for (std::size_t j = 0; j < 4; ++j) h0 += w2[j] * std::tanh(b[j]);
  EXPECT_NEAR(k.h0, h0, 1e-15);
  EXPECT_EQ(k.h1, std::vector<double>(3, 0.0));
  EXPECT_EQ(max_abs(k.h2), 0.0);
  EXPECT_EQ(k.memory, 3u);
}

TEST(Volterra, SingleTanhUnitAtZeroBias) {
  auto m = fir_mlp(4, 1, Activation::tanh, 4);
  param(*m, "hidden0.bias").value.fill(0.0);
  const Tensor& w1 = m->find_parameter("hidden0.weight")->value;
  const double w2 = m->find_parameter("output.weight")->value[0];
  const auto k = extract_volterra_kernels(*m, 2);
  for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(k.h1[t], w2 * w1[t], 1e-15);
  EXPECT_EQ(max_abs(k.h2), 0.0);
}

TEST(Volterra, ClosedFormForSigmoidUnits) {
  auto m = fir_mlp(2, 3, Activation::sigmoid, 5);
  const Tensor& w1 = m->find_parameter("hidden0.weight")->value;
  const Tensor& b = m->find_parameter("hidden0.bias")->value;
  const Tensor& w2 = m->find_parameter("output.weight")->value;
  const auto k = extract_volterra_kernels(*m, 2);
  double h1 = 0.0, h2 = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const double s = 1.0 / (1.0 + std::exp(-b[j]));
    h1 += w2[j] * s * (1 - s) * w1[j * 2 + 1];
    h2 += 0.5 * w2[j] * s * (1 - s) * (1 - 2 * s) * w1[j * 2] * w1[j * 2 + 1];
  }
  EXPECT_NEAR(k.h1[1], h1, 1e-14);
  EXPECT_NEAR(k.h2.at(0, 1), h2, 1e-14);
}

TEST(Volterra, SecondKernelIsExactlySymmetric) {
  for (ExpansionPoint point : {ExpansionPoint::bias, ExpansionPoint::zero}) {
    auto m = fir_mlp(5, 6, Activation::sigmoid, 6);
    const auto k = extract_volterra_kernels(*m, 2, point);
    const auto o = fd_volterra_oracle(*m, 2);
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t b = 0; b < 5; ++b) {
        ASSERT_EQ(k.h2.at(a, b), k.h2.at(b, a));
        ASSERT_EQ(o.h2.at(a, b), o.h2.at(b, a));
      }
  }
}

TEST(Volterra, ExtractionMatchesOracleOnRandomNetworks) {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t order = 1 + rng.below(6), hidden = 1 + rng.below(8);
    const Activation act = trial % 2 == 0 ? Activation::tanh : Activation::sigmoid;
    auto m = fir_mlp(order, hidden, act, 100 + trial);
    const auto k = extract_volterra_kernels(*m, 2);
    const auto o = fd_volterra_oracle(*m, 2);
    EXPECT_EQ(k.memory, m->receptive_field());
    EXPECT_LE(max_kernel_difference(k, o), 1e-4 * std::max(max_kernel_magnitude(k), 1.0)) << trial;
  }
}

TEST(Volterra, ZeroExpansionOfOddActivations) {
  // Both tanh and the sigmoid have a vanishing second derivative at zero.
  for (Activation act : {Activation::tanh, Activation::sigmoid}) {
    auto m = fir_mlp(3, 4, act, 8);
    const auto k = extract_volterra_kernels(*m, 2, ExpansionPoint::zero);
    EXPECT_LE(max_abs(k.h2), 1e-15);
    const Tensor& w1 = m->find_parameter("hidden0.weight")->value;
    const Tensor& w2 = m->find_parameter("output.weight")->value;
    const double slope = act == Activation::tanh ? 1.0 : 0.25;
    double h1 = 0.0;
    for (std::size_t j = 0; j < 4; ++j) h1 += w2[j] * slope * w1[j * 3 + 2];
    EXPECT_NEAR(k.h1[2], h1, 1e-15);
  }
}

TEST(Volterra, ExpansionPointsAgreeAtZeroBias) {
  auto m = fir_mlp(3, 5, Activation::tanh, 9);
  param(*m, "hidden0.bias").value.fill(0.0);
  EXPECT_LE(max_kernel_difference(extract_volterra_kernels(*m, 2, ExpansionPoint::bias),
                                  extract_volterra_kernels(*m, 2, ExpansionPoint::zero)),
            1e-15);
}

TEST(Volterra, UnsupportedModelsRejected) {
  EXPECT_THROW(extract_volterra_kernels(*fir_mlp(2, 3, Activation::relu, 10), 2), UnsupportedError);
  EXPECT_THROW(extract_volterra_kernels(*fir_mlp(2, 3, Activation::tanh, 10, 2), 2), UnsupportedError);
  ModelConfig narx;
  narx.family = Family::mlp;
  narx.activation = Activation::tanh;
  Rng rng(1);
  EXPECT_THROW(extract_volterra_kernels(*build_model(narx, rng), 2), UnsupportedError);
  EXPECT_THROW(fd_volterra_oracle(*build_model(narx, rng), 2), UnsupportedError);
  EXPECT_THROW(extract_volterra_kernels(*fir_mlp(2, 3, Activation::tanh, 10), 3), ParameterError);
}

TEST(VolterraOracle, LinearFunctionGivesImpulseResponse) {
  const std::vector<double> g{0.7, -1.2, 0.05, 2.5};
  auto f = [&](std::span<const double> x) {
    double s = 0.3;
    for (std::size_t t = 0; t < 4; ++t) s += g[t] * x[t];
    return s;
  };
  const auto k = fd_volterra_oracle(f, 4, 2);
  EXPECT_NEAR(k.h0, 0.3, 1e-15);
  for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(k.h1[t], g[t], 1e-8);
  EXPECT_LE(max_abs(k.h2), 1e-6);
}

TEST(VolterraOracle, LinearModelGivesImpulseResponse) {
  // A TCN whose residual bodies are zero is the 1x1 output map of the input.
  ModelConfig c;
  c.family = Family::tcn;
  c.feedback = false;
  c.hidden = 1;
  c.depth = 2;
  c.kernel_size = 2;
  Rng rng(11);
  auto m = build_model(c, rng);
  for (auto* p : m->parameters()) p->value.fill(0.0);
  param(*m, "output.weight").value.fill(0.7);
  param(*m, "output.bias").value.fill(-0.1);
  const auto k = fd_volterra_oracle(*m, 2);
  ASSERT_EQ(k.memory, 5u);
  EXPECT_NEAR(k.h0, -0.1, 1e-15);
  EXPECT_NEAR(k.h1[0], 0.7, 1e-8);
  for (std::size_t t = 1; t < 5; ++t) EXPECT_NEAR(k.h1[t], 0.0, 1e-8);
  EXPECT_LE(max_abs(k.h2), 1e-6);
}

TEST(VolterraOracle, SquareLawAtUnitMemory) {
  const auto k = fd_volterra_oracle([](std::span<const double> x) { return x[0] * x[0]; }, 1, 2);
  EXPECT_EQ(k.h1[0], 0.0);
  EXPECT_NEAR(k.h2.at(0, 0), 1.0, 1e-9);
}

TEST(VolterraOracle, MixedDifferenceOfBilinearTerm) {
  // y = 3 x0 x2: off-diagonal entries carry half the coefficient each.
  const auto k = fd_volterra_oracle([](std::span<const double> x) { return 3.0 * x[0] * x[2]; }, 3, 2);
  EXPECT_NEAR(k.h2.at(0, 2), 1.5, 1e-9);
  EXPECT_NEAR(k.h2.at(2, 0), 1.5, 1e-9);
  EXPECT_NEAR(k.h2.at(1, 1), 0.0, 1e-9);
}

TEST(VolterraOracle, SecondOrderConvergenceInAmplitude) {
  auto m = fir_mlp(3, 5, Activation::tanh, 12);
  // Truncation error shrinks fourfold per halving of the probe amplitude.
  const double a = 0.05;
  const auto k1 = fd_volterra_oracle(*m, 2, a);
  const auto k2 = fd_volterra_oracle(*m, 2, a / 2);
  const auto k4 = fd_volterra_oracle(*m, 2, a / 4);
  const double d12 = max_kernel_difference(k1, k2), d24 = max_kernel_difference(k2, k4);
  EXPECT_LE(d12, a * a * std::max(max_kernel_magnitude(k1), 1.0));
  EXPECT_NEAR(d12 / d24, 4.0, 0.5);
}

TEST(Volterra, KernelCsvLayout) {
  auto m = fir_mlp(2, 2, Activation::tanh, 13);
  const auto k = extract_volterra_kernels(*m, 2);
  EXPECT_EQ(kernel_h0_csv(k).substr(0, 3), "h0\n");
  const std::string h1 = kernel_h1_csv(k);
  EXPECT_EQ(h1.substr(0, h1.find('\n')), "lag,h1");
  EXPECT_EQ(std::count(h1.begin(), h1.end(), '\n'), 3);
  const std::string h2 = kernel_h2_csv(k);
  EXPECT_EQ(h2.substr(0, h2.find('\n')), "lag,lag0,lag1");
}

TEST(Spectrum, ZeroErrorZeroSpectrum) {
  const std::vector<double> e(64, 0.0);
  const auto s = error_spectrum(e, 10.0);
  for (double v : s.magnitude) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(s.frequency.size(), 64u);
  EXPECT_EQ(s.frequency[1], 10.0 / 64);
}

TEST(Spectrum, SinusoidAtBinHasOneDominantBin) {
  const std::size_t L = 128, bin = 9;
  const double fs = 256.0;
  std::vector<double> e(L);
  for (std::size_t k = 0; k < L; ++k) e[k] = 0.8 * std::sin(2 * std::numbers::pi * bin * k / L + 0.3);
  const auto band = select_band(error_spectrum(e, fs), 0.0, fs / 2);
  ASSERT_EQ(band.frequency.size(), L / 2 + 1);
  std::size_t peak = 0;
  for (std::size_t k = 0; k < band.magnitude.size(); ++k) {
    if (band.magnitude[k] > band.magnitude[peak]) peak = k;
  }
  EXPECT_EQ(peak, bin);
  EXPECT_EQ(band.frequency[peak], fs * bin / L);
  EXPECT_NEAR(band.magnitude[peak], 0.8 * L / 2, 1e-9);
  for (std::size_t k = 0; k < band.magnitude.size(); ++k)
    if (k != peak) EXPECT_LT(band.magnitude[k], 1e-9);
}

TEST(Spectrum, MatchesDirectDftAndParseval) {
  Rng rng(14);
  for (std::size_t L : {2u, 7u, 64u, 1000u}) {
    std::vector<double> e(L);
    for (double& v : e) v = rng.normal();
    const auto s = error_spectrum(e, 1.0);
    double energy = 0.0, spectral = 0.0;
    for (double v : e) energy += v * v;
    for (double m : s.magnitude) spectral += m * m;
    EXPECT_NEAR(spectral / static_cast<double>(L), energy, 1e-8 * energy);
    if (L <= 64) {
      for (std::size_t f = 0; f < L; ++f) {
        std::complex<double> acc = 0.0;
        for (std::size_t k = 0; k < L; ++k)
          acc += e[k] * std::polar(1.0, -2 * std::numbers::pi * static_cast<double>(f * k) / static_cast<double>(L));
        EXPECT_NEAR(s.magnitude[f], std::abs(acc), 1e-10);
      }
    }
  }
}

TEST(Spectrum, BandSelectionAndErrors) {
  std::vector<double> e(10, 1.0);
  const auto band = select_band(error_spectrum(e, 10.0), 2.0, 4.0);
  EXPECT_EQ(band.frequency, (std::vector<double>{2.0, 3.0, 4.0}));
  EXPECT_THROW(select_band(error_spectrum(e, 10.0), 4.0, 2.0), ParameterError);
  EXPECT_THROW(error_spectrum(std::vector<double>{1.0}, 1.0), DataError);
  EXPECT_EQ(spectrum_csv(band).substr(0, 23), "frequency_hz,magnitude\n");
}

TEST(Evaluate, FeedbackFreeModesAgree) {
  auto m = fir_mlp(3, 4, Activation::tanh, 15);
  const auto ds = make_chen_dataset(3, 60, {0.3, 0.3, 16});
  const auto one = evaluate(*m, ds, EvalMode::one_step, 5);
  const auto free = evaluate(*m, ds, EvalMode::free_run, 5);
  EXPECT_EQ(one.report.rmse, free.report.rmse);
  EXPECT_EQ(one.report.samples, 3u * 55u);
  EXPECT_EQ(one.report.skipped, 5u);
}

TEST(Evaluate, PhysicalUnitsAfterNormalization) {
  auto m = fir_mlp(2, 3, Activation::tanh, 17);
  const auto raw = make_chen_dataset(2, 50, {0.3, 0.3, 18});
  const auto n = compute_normalization(raw);
  const auto ds = normalize_dataset(raw, n);
  const auto ev = evaluate(*m, ds, EvalMode::one_step);
  EXPECT_TRUE(ev.report.physical_units);
  double sq = 0.0;
  for (std::size_t r = 0; r < 2; ++r) {
    const Tensor p = predict_one_step(*m, ds.records[r].u, ds.records[r].y);
    for (std::size_t k = 0; k < 50; ++k) {
      const double e = (p[k] - ds.records[r].y[k]) * n.y_scale[0];
      sq += e * e;
    }
  }
  EXPECT_NEAR(ev.report.mean_rmse, std::sqrt(sq / 100), 1e-12);
  EXPECT_NEAR(ev.predictions[0][0] * 1.0, predict_one_step(*m, ds.records[0].u, ds.records[0].y)[0] * n.y_scale[0] +
                                               n.y_mean[0],
              1e-12);
  const nlohmann::json j = ev.report;
  EXPECT_EQ(j.at("mode"), "one-step");
  EXPECT_TRUE(j.at("physical_units").get<bool>());
}

TEST(Evaluate, ChannelMismatchIsSchemaError) {
  auto m = fir_mlp(2, 3, Activation::tanh, 19);
  Dataset ds;
  SequenceRecord rec;
  rec.u = Tensor::zeros({2, 10});
  rec.y = Tensor::zeros({1, 10});
  ds.records.push_back(rec);
  EXPECT_THROW(evaluate(*m, ds, EvalMode::one_step), SchemaError);
  EXPECT_THROW(parse_eval_mode("two-step"), ParameterError);
}

}  // namespace
}  // namespace sysid
