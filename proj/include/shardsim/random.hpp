// Copyright 2026 The Shardsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Counter-based Gaussian samples: every value is a pure function of
// (seed, stream, counter), so sampled objects do not depend on the order in
// which they are generated or on how they are partitioned across workers.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace shardsim {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept : key_(splitmix64(seed ^ 0x5851f42d4c957f2dULL)) {}

  constexpr std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const noexcept {
    return splitmix64(splitmix64(key_ ^ splitmix64(stream)) + counter);
  }

  // Uniform on (0, 1].
  double uniform(std::uint64_t stream, std::uint64_t counter) const noexcept {
    return static_cast<double>((bits(stream, counter) >> 11) + 1) * 0x1.0p-53;
  }

  // Two independent standard normals (Box-Muller), returned as re/im.
  std::complex<double> normal_pair(std::uint64_t stream, std::uint64_t counter) const noexcept {
    const double u1 = uniform(stream, 2 * counter);
    const double u2 = uniform(stream, 2 * counter + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

 private:
  std::uint64_t key_;
};

}  // namespace shardsim
