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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "data.hpp"
#include "model.hpp"

namespace sysid {

struct RmseResult {
  std::vector<double> per_channel;
  double mean = 0.0;
};

/// Root mean square error per row of (channels, T) tensors, skipping the
/// first `skip` time steps; `mean` averages the channel values.
RmseResult rmse(const Tensor& prediction, const Tensor& target, std::size_t skip = 0);

enum class EvalMode { one_step, free_run };

EvalMode parse_eval_mode(std::string_view name);
std::string_view to_string(EvalMode m);

struct EvalReport {
  EvalMode mode = EvalMode::one_step;
  std::vector<double> rmse;
  double mean_rmse = 0.0;
  std::size_t samples = 0;  // per channel, after skipping
  std::size_t skipped = 0;  // warm-up samples dropped per record
  bool physical_units = false;
};

void to_json(nlohmann::json& j, const EvalReport& r);

struct Evaluation {
  EvalReport report;
  /// Per record, (ny, T), in the units the report is computed in.
  std::vector<Tensor> predictions;
};

/// One-step or cold-start free-run evaluation pooled over the records. If
/// the dataset carries normalization constants, errors are measured after
/// mapping back to physical units.
Evaluation evaluate(const Model& model, const Dataset& dataset, EvalMode mode, std::size_t skip = 0);

enum class ExpansionPoint { bias, zero };

struct VolterraKernels {
  int degree = 2;
  std::size_t memory = 0;
  double h0 = 0.0;
  std::vector<double> h1;  // [memory]
  Tensor h2;               // (memory, memory), symmetric; empty for degree < 2
};

/// Closed-form kernels of a single-hidden-layer FIR network from its
/// weights via a Taylor expansion of the activation. Lag tau refers to the
/// network input x[k - tau], i.e. u[k - 1 - tau].
VolterraKernels extract_volterra_kernels(const Model& model, int degree,
                                         ExpansionPoint point = ExpansionPoint::bias);

/// Kernels measured from the model output with central and mixed
/// differences of probe amplitude `amplitude`. Works for any FIR model with
/// a finite receptive field.
VolterraKernels fd_volterra_oracle(const Model& model, int degree, double amplitude = 1e-3);

/// Scalar response to the lag window (x[k], x[k - 1], ..., x[k - m + 1]).
using LagFunction = std::function<double(std::span<const double>)>;

/// Same differences applied to an arbitrary function of the lag window.
VolterraKernels fd_volterra_oracle(const LagFunction& f, std::size_t memory, int degree, double amplitude = 1e-3);

/// Largest |a - b| over all kernel entries present in both.
double max_kernel_difference(const VolterraKernels& a, const VolterraKernels& b);
double max_kernel_magnitude(const VolterraKernels& k);

std::string kernel_h0_csv(const VolterraKernels& k);
std::string kernel_h1_csv(const VolterraKernels& k);
std::string kernel_h2_csv(const VolterraKernels& k);

struct Spectrum {
  std::vector<double> frequency;  // Hz
  std::vector<double> magnitude;  // |DFT|
};

/// DFT magnitude over all L bins, f_k = k fs / L, so that
/// sum |E|^2 / L == sum e^2.
Spectrum error_spectrum(std::span<const double> error, double sample_rate);
/// Bins with lo <= f <= hi, up to the Nyquist frequency.
Spectrum select_band(const Spectrum& s, double lo, double hi);
std::string spectrum_csv(const Spectrum& s);

}  // namespace sysid
