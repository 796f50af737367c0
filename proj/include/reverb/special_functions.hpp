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

// Special functions for the outage-constrained bandwidth allocator:
// real Lambert W (both real branches), the Gaussian tail Q and its inverse,
// and the first-order Marcum Q function.

#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "reverb/core.hpp"

namespace reverb {

enum class LambertBranch { kPrincipal, kLower };

namespace detail {

template <std::floating_point T>
T lambert_initial_guess(LambertBranch branch, T x) {
  const T e = std::numbers::e_v<T>;
  // Branch-point series in p = sqrt(2(e x + 1)).
  const T p = std::sqrt(std::max(T(0), T(2) * (e * x + T(1))));
  if (branch == LambertBranch::kPrincipal) {
    if (x < T(-0.25)) return T(-1) + p - p * p / T(3) + T(11) / T(72) * p * p * p;
    if (x < T(3)) return std::log1p(x) * (T(1) - std::log1p(std::log1p(x)) / (T(2) + std::log1p(x)));
    const T l1 = std::log(x);
    const T l2 = std::log(l1);
    return l1 - l2 + l2 / l1;
  }
  if (x < T(-0.25)) return T(-1) - p - p * p / T(3) - T(11) / T(72) * p * p * p;
  const T l1 = std::log(-x);
  const T l2 = std::log(-l1);
  return l1 - l2 + l2 / l1;
}

}  // namespace detail

/// Real Lambert W: solves w·eʷ = x on the chosen branch via Halley iteration.
/// Principal branch: x >= -1/e, w >= -1. Lower branch: x in [-1/e, 0), w <= -1.
/// Throws DomainError outside the branch's domain.
template <std::floating_point T>
T lambert_w(LambertBranch branch, T x) {
  const T inv_e = T(1) / std::numbers::e_v<T>;
  const T slack = T(4) * std::numeric_limits<T>::epsilon() * inv_e;
  if (!std::isfinite(x) || x < -inv_e - slack) throw DomainError("lambert_w: x < -1/e");
  if (branch == LambertBranch::kLower && x >= T(0)) throw DomainError("lambert_w: lower branch needs x < 0");
  if (x <= -inv_e) return T(-1);
  if (x == T(0)) return T(0);

  T w = detail::lambert_initial_guess(branch, x);
  for (int it = 0; it < 64; ++it) {
    const T ew = std::exp(w);
    const T f = w * ew - x;
    const T wp1 = w + T(1);
    if (wp1 == T(0)) break;
    const T denom = ew * wp1 - (w + T(2)) * f / (T(2) * wp1);
    const T dw = f / denom;
    w -= dw;
    if (branch == LambertBranch::kPrincipal && w < T(-1)) w = T(-1);
    if (branch == LambertBranch::kLower && w > T(-1)) w = T(-1);
    if (std::abs(dw) <= T(4) * std::numeric_limits<T>::epsilon() * (T(1) + std::abs(w))) break;
  }
  return w;
}

/// Gaussian tail probability Q(x) = P[N(0,1) > x].
template <std::floating_point T>
T gaussian_q(T x) {
  return std::erfc(x / std::numbers::sqrt2_v<T>) / T(2);
}

/// Inverse Gaussian tail: returns x with Q(x) = eps, eps in (0, 1).
template <std::floating_point T>
T gaussian_q_inv(T eps) {
  if (!(eps > T(0)) || !(eps < T(1))) throw DomainError("gaussian_q_inv: eps must lie in (0, 1)");
  return std::numbers::sqrt2_v<T> * boost::math::erfc_inv(T(2) * eps);
}

namespace detail {

// P[Poisson(z) <= n - 1] and P[Poisson(z) >= n] for integer n >= 1; the
// smaller of the two is summed directly so both stay accurate in the tails.
template <std::floating_point T>
void poisson_split(int n, T z, T& upper_gamma, T& lower_gamma) {
  if (z == T(0)) {
    upper_gamma = T(1);
    lower_gamma = T(0);
    return;
  }
  const T tiny = std::numeric_limits<T>::epsilon() * T(1e-4);
  if (T(n - 1) < z) {
    // Sum t_{n-1} + t_{n-2} + ... downward: ratio j / z < 1.
    T term = std::exp(-z + T(n - 1) * std::log(z) - std::lgamma(T(n)));
    T sum = term;
    for (int j = n - 1; j > 0; --j) {
      term *= T(j) / z;
      sum += term;
      if (term < tiny * sum) break;
    }
    upper_gamma = sum;
    lower_gamma = T(1) - sum;
  } else {
    // Sum t_n + t_{n+1} + ... upward: ratio z / (j + 1) < 1.
    T term = std::exp(-z + T(n) * std::log(z) - std::lgamma(T(n + 1)));
    T sum = term;
    for (int j = n; j < n + 10000; ++j) {
      term *= z / T(j + 1);
      sum += term;
      if (term < tiny * sum) break;
    }
    lower_gamma = sum;
    upper_gamma = T(1) - sum;
  }
}

template <std::floating_point T>
struct MarcumPair {
  T q;           // Q1(a, b)
  T complement;  // 1 - Q1(a, b)
};

// Poisson mixture of central chi-square tails:
//   Q1(a,b) = Σ_k e^{-λ} λ^k / k! · P[Poisson(z) <= k],  λ = a²/2, z = b²/2.
template <std::floating_point T>
MarcumPair<T> marcum_q1_pair(T a, T b) {
  if (!(a >= T(0)) || !(b >= T(0)) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError("marcum_q1: arguments must be finite and >= 0");
  }
  if (b == T(0)) return {T(1), T(0)};
  const T lambda = a * a / T(2);
  const T z = b * b / T(2);
  if (lambda == T(0)) {
    const T q = std::exp(-z);
    return {q, -std::expm1(-z)};
  }
  const T rel = T(1e-12) * T(1e-4);
  T q = T(0);
  T comp = T(0);
  T weight_sum = T(0);
  const int k_max = static_cast<int>(lambda + T(40) * std::sqrt(lambda) + T(100));
  for (int k = 0; k <= k_max; ++k) {
    const T w = std::exp(-lambda + T(k) * std::log(lambda) - std::lgamma(T(k + 1)));
    T up, lo;
    poisson_split(k + 1, z, up, lo);
    q += w * up;
    comp += w * lo;
    weight_sum += w;
    if (T(k) > lambda && w < rel * std::min(T(1), weight_sum)) break;
  }
  return {q, comp};
}

}  // namespace detail

/// First-order Marcum Q function Q1(a, b) = P[|N(a,1) + iN(0,1)| > b].
template <std::floating_point T>
T marcum_q1(T a, T b) {
  return detail::marcum_q1_pair(a, b).q;
}

/// 1 - Q1(a, b), accurate when Q1 is close to one (outage probabilities).
template <std::floating_point T>
T marcum_q1_complement(T a, T b) {
  return detail::marcum_q1_pair(a, b).complement;
}

}  // namespace reverb
