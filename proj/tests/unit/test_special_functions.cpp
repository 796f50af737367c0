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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "reverb/special_functions.hpp"

using namespace reverb;

namespace {

// Composite Simpson on [lo, hi].
template <typename F>
double simpson(F f, double lo, double hi, int n = 20000) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Rician density of the envelope with unit scatter variance, written with
// the exponentially scaled Bessel function to stay finite.
double rice_pdf(double x, double a) {
  const double z = a * x;
  const double i0_scaled = std::cyl_bessel_i(0.0, z) * std::exp(-z);
  return x * std::exp(-0.5 * (x - a) * (x - a)) * i0_scaled;
}

double q_inv_bisection(double eps) {
  double lo = -40, hi = 40;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(mid / std::numbers::sqrt2) > eps ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("lambert W satisfies w e^w = x on both real branches") {
  for (double x : {-0.3678, -0.35, -0.2, -0.1, -1e-3, -1e-8, -1e-14}) {
    for (auto b : {LambertBranch::kPrincipal, LambertBranch::kLower}) {
      const double w = lambert_w(b, x);
      CHECK(std::abs(w * std::exp(w) - x) <= 1e-13 * std::abs(x) + 1e-16);
      if (b == LambertBranch::kPrincipal) CHECK(w >= -1.0);
      if (b == LambertBranch::kLower) CHECK(w <= -1.0);
    }
  }
  for (double x : {0.0, 1e-10, 0.5, 1.0, 10.0, 1e6}) {
    const double w = lambert_w(LambertBranch::kPrincipal, x);
    CHECK(std::abs(w * std::exp(w) - x) <= 1e-13 * std::max(1.0, x));
  }
}

TEST_CASE("lambert W known values and domain") {
  CHECK(lambert_w(LambertBranch::kPrincipal, std::numbers::e) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lambert_w(LambertBranch::kPrincipal, -1.0 / std::numbers::e) == doctest::Approx(-1.0));
  CHECK(lambert_w(LambertBranch::kLower, -1.0 / std::numbers::e) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(lambert_w(LambertBranch::kPrincipal, -0.5), DomainError);
  CHECK_THROWS_AS(lambert_w(LambertBranch::kLower, 0.1), DomainError);
  CHECK(lambert_w(LambertBranch::kPrincipal, 0.0) == 0.0);
}

TEST_CASE("inverse Gaussian tail matches bisection") {
  for (double eps : {1e-9, 1e-6, 1e-5, 1e-3, 0.05, 0.3, 0.5}) {
    CHECK(gaussian_q_inv(eps) == doctest::Approx(q_inv_bisection(eps)).epsilon(1e-10));
    CHECK(gaussian_q(gaussian_q_inv(eps)) == doctest::Approx(eps).epsilon(1e-12));
  }
  CHECK(gaussian_q_inv(1e-5) == doctest::Approx(4.264890793922825).epsilon(1e-12));
}

TEST_CASE("Marcum Q1 matches quadrature of the Rician density") {
  for (double a : {0.0, 0.5, 2.0, 4.47213595499958, 7.0}) {
    for (double b : {0.1, 1.0, 2.5, 4.0, 6.0, 9.0}) {
      const double upper = simpson([&](double x) { return rice_pdf(x, a); }, b, b + a + 40.0);
      const double lower = simpson([&](double x) { return rice_pdf(x, a); }, 0.0, b);
      CHECK(marcum_q1(a, b) == doctest::Approx(upper).epsilon(1e-9));
      CHECK(marcum_q1_complement(a, b) == doctest::Approx(lower).epsilon(1e-8).scale(0));
      CHECK(marcum_q1(a, b) + marcum_q1_complement(a, b) == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("Marcum Q1 closed forms") {
  // a = 0 reduces to the Rayleigh tail.
  for (double b : {0.3, 1.0, 3.0}) CHECK(marcum_q1(0.0, b) == doctest::Approx(std::exp(-b * b / 2)).epsilon(1e-14));
  CHECK(marcum_q1(3.0, 0.0) == 1.0);
  // Q1(a,a) = (1 + e^{-a²} I0(a²)) / 2.
  const double a = 1.7;
  CHECK(marcum_q1(a, a) == doctest::Approx(0.5 * (1 + std::exp(-a * a) * std::cyl_bessel_i(0.0, a * a))).epsilon(1e-13));
}
