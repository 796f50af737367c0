// Copyright 2026 The REVERB Authors
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

#include <cstdint>
#include <random>

#include "reverb/core.hpp"

namespace reverb {

/// Seeded generator. Every random draw in the simulator goes through one of
/// these; independent streams are derived from a (seed, stream) pair so that
/// adding draws to one subsystem never shifts another subsystem's sequence.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed = 0, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1).
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

  Vector normal_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Stream identifiers for the per-episode generator hierarchy.
enum class Stream : std::uint64_t {
  kInitialState = 1,
  kProcessNoise = 2,
  kSensorNoise = 3,
  kFading = 4,
  kPolicy = 5,
  kFleet = 6,
  kBeliefInit = 7,
};

inline RandomSource make_stream(std::uint64_t seed, Stream stream) {
  return RandomSource(seed, static_cast<std::uint64_t>(stream));
}

/// Draws L·z with z ~ N(0, I), where L·Lᵀ = cov. `factor` is the precomputed L.
inline Vector sample_gaussian(const Matrix& factor, RandomSource& rng) {
  return factor * rng.normal_vector(factor.cols());
}

/// Square-root factor of a symmetric PSD matrix (tolerates singular/zero input).
inline Matrix psd_factor(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(cov));
  if (eig.info() != Eigen::Success) throw NumericalError("psd_factor: eigen decomposition failed");
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

}  // namespace reverb
