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

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace sysid {

/// 64-bit finalizer from SplitMix64; a bijective avalanche mix.
std::uint64_t mix64(std::uint64_t x) noexcept;
/// Combines two words into a seed; order sensitive.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;
/// FNV-1a over bytes, for turning names into seed material.
std::uint64_t hash_string(std::string_view s) noexcept;

/// Counter-based generator: draw i is mix64(key + i * golden), so the stream
/// is a pure function of (key, counter). Child streams come from split().
///
/// Distribution sampling is done here rather than through <random> so that
/// a seed yields the same doubles on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal() noexcept;
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) noexcept;

  /// Independent child stream; does not advance this stream.
  Rng split(std::uint64_t stream) const noexcept;

  template <class T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_normal_;
};

/// i.i.d. normal samples; std must be non-negative.
Tensor gaussian(Rng& rng, const Shape& shape, double mean, double std);
Tensor uniform(Rng& rng, const Shape& shape, double lo, double hi);

}  // namespace sysid
