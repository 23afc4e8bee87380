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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include <unistd.h>

#include "rng.hpp"
#include "tensor.hpp"

namespace sysid::testing {

/// ||a - n|| / max(||a||, ||n||, 1e-3). The floor sits above finite-difference
/// noise for gradients that vanish exactly.
inline double relative_error(const Tensor& analytic, const Tensor& numeric) {
  Tensor d = analytic - numeric;
  return norm2(d) / std::max({norm2(analytic), norm2(numeric), 1e-3});
}

/// Central differences of `objective` with respect to every entry of `t`,
/// which is perturbed in place and restored.
inline Tensor numeric_gradient(Tensor& t, const std::function<double()>& objective, double h = 1e-5) {
  Tensor g = Tensor::zeros(t.shape());
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double saved = t[k];
    t[k] = saved + h;
    const double up = objective();
    t[k] = saved - h;
    const double down = objective();
    t[k] = saved;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

/// sum(weights * y), the scalar used to probe a vector-valued map.
inline double contract(const Tensor& weights, const Tensor& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) s += weights[k] * y[k];
  return s;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng r(hash_string(tag) ^ static_cast<std::uint64_t>(std::hash<std::string>{}(
                                 std::filesystem::current_path().string())));
    path_ = std::filesystem::temp_directory_path() /
            ("sysid-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(r.next_u64() % 100000));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace sysid::testing
