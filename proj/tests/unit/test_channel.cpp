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

#include "../common/bandwidth_oracle.hpp"
#include "reverb/channel.hpp"
#include "reverb/special_functions.hpp"

using namespace reverb;

namespace {

ChannelParams table_params() { return ChannelParams::from_noise_power(kDefaultNoiseDbm, kDefaultNoiseReferenceHz); }

}  // namespace

TEST_CASE("snr scaling") {
  ChannelParams c = table_params();
  c.noise_psd = 2e-9;
  CHECK(snr(c, 1.0, 1.0, 1e3, 1.0) == doctest::Approx(1.0 / (1e3 * 2e-9)));
  CHECK(snr(c, 0.02, 10.0, 180e3, 1.0) / snr(c, 0.02, 20.0, 180e3, 1.0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(snr(c, 0.0, 1.0, 1.0, 1.0), InputError);
}

TEST_CASE("Rician power gain has unit mean") {
  for (double g : {0.0, 10.0, 1e9}) {
    RandomSource rng(5);
    const int n = 100000;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
      const double s = rician_fading_sample(g, rng);
      sum += s;
      sum2 += s * s;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    CHECK(std::abs(mean - 1.0) < 4 * std::max(sd, 1e-3) / std::sqrt(n) + 1e-3);
  }
}

TEST_CASE("y_tau formula, ordering and domain") {
  const double q = gaussian_q_inv(1e-5);
  const double x = std::sqrt(20.0);
  CHECK(y_tau(10.0, 1e-5) == doctest::Approx(x + std::log(x / (x - q)) / (2 * q) - q).epsilon(1e-14));
  // Outage is the envelope falling below y_τ, so a tighter ε lowers the threshold.
  CHECK(y_tau(10.0, 1e-5) < y_tau(10.0, 1e-3));
  CHECK_THROWS_AS(y_tau(2.0, 1e-6), DomainError);
  // At ε = 1e-3 the approximation is tight; at 1e-5 it stays within the
  // [0.2ε, 5ε] band used for the link budget.
  const double out3 = marcum_q1_complement(x, y_tau(10.0, 1e-3));
  CHECK(std::abs(out3 / 1e-3 - 1.0) < 0.1);
  const double out5 = marcum_q1_complement(x, y_tau(10.0, 1e-5));
  CHECK(out5 > 0.2e-5);
  CHECK(out5 < 5e-5);
}

TEST_CASE("optimal bandwidth satisfies its defining identity and matches bisection") {
  const auto c = table_params();
  for (double d : {1.0, 5.0, 12.0, 20.0}) {
    const auto b = optimal_bandwidth(c, 0.02, d, 3);
    const double u = -c.packet_bits * std::numbers::ln2 / (b.w_star * c.max_latency);
    CHECK(std::abs((1 - u * b.theta) * std::exp(u) - 1.0) < 1e-9);
    CHECK(b.w_star == doctest::Approx(oracle::bisect_bandwidth(c, 0.02, d)).epsilon(1e-6));
    CHECK(b.prbs == static_cast<int>(std::ceil(b.w_star / c.prb_hz)));
    CHECK(b.granted_hz >= b.w_star);
    CHECK(b.agent_id == 3);
  }
}

TEST_CASE("optimal bandwidth is monotone in power and distance") {
  const auto c = table_params();
  double prev = 0;
  for (double d = 1.0; d <= 20.0; d += 0.5) {
    const double w = optimal_bandwidth(c, 0.02, d).w_star;
    CHECK(w > prev);
    prev = w;
  }
  prev = INFINITY;
  for (double p = 0.01; p <= 0.1; p += 0.01) {
    const double w = optimal_bandwidth(c, p, 10.0).w_star;
    CHECK(w < prev);
    prev = w;
  }
}

TEST_CASE("weak links are infeasible") {
  auto c = table_params();
  c.noise_psd *= 100;
  CHECK(link_theta(c, 0.02, 20.0) <= 1.0);
  CHECK_THROWS_AS(optimal_bandwidth(c, 0.02, 20.0), InfeasibleError);
}

TEST_CASE("exact outage at W* stays inside the reliability band") {
  const auto c = table_params();
  for (double d : {2.0, 10.0, 20.0}) {
    const auto b = optimal_bandwidth(c, 0.02, d);
    const double out = exact_outage(c, 0.02, d, b.w_star);
    CHECK(out > 0.2 * c.outage);
    CHECK(out < 5 * c.outage);
  }
}

TEST_CASE("uplink outcomes") {
  const auto c = table_params();
  const auto b = optimal_bandwidth(c, 0.02, 15.0);
  // Unit fading at W* is well above the outage threshold.
  const double gamma = snr(c, 0.02, 15.0, b.w_star, 1.0);
  CHECK(c.packet_bits / (b.w_star * std::log2(1 + gamma)) <= c.max_latency);

  RandomSource rng(9);
  int lost = 0;
  for (int i = 0; i < 20000; ++i) lost += uplink_outcome_at(c, b, b.w_star / 10, rng).delivered ? 0 : 1;
  CHECK(lost > 19000);

  RandomSource rng2(10);
  int lost_full = 0;
  for (int i = 0; i < 20000; ++i) lost_full += uplink_outcome(c, b, rng2).delivered ? 0 : 1;
  CHECK(lost_full <= 2);
}

TEST_CASE("channel parameter validation") {
  auto c = table_params();
  CHECK_NOTHROW(c.validate());
  c.outage = 0.7;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = table_params();
  c.rician_factor = 2.0;
  c.outage = 1e-6;
  CHECK_THROWS_AS(c.validate(), InputError);
}
