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

#include "reverb/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "reverb/special_functions.hpp"

namespace reverb {

ChannelParams ChannelParams::from_noise_power(double noise_dbm, double reference_bandwidth_hz) {
  if (!(reference_bandwidth_hz > 0)) throw InputError("channel: reference bandwidth must be > 0");
  ChannelParams p;
  p.noise_psd = std::pow(10.0, noise_dbm / 10.0 - 3.0) / reference_bandwidth_hz;
  return p;
}

void ChannelParams::validate() const {
  if (!(system_gain > 0) || !(path_loss_exponent > 0) || !(noise_psd > 0) || !(rician_factor > 0) ||
      !(packet_bits > 0) || !(max_latency > 0) || !(prb_hz > 0)) {
    throw InputError("channel: all parameters must be strictly positive");
  }
  if (!(outage > 0) || !(outage < 0.5)) throw InputError("channel: outage must lie in (0, 0.5)");
  const double q = gaussian_q_inv(outage);
  if (!(std::sqrt(2.0 * rician_factor) > q)) {
    throw InputError("channel: strong line-of-sight condition sqrt(2G) > Q^-1(eps) violated");
  }
}

double snr(const ChannelParams& params, double tx_power, double distance, double bandwidth,
           double fading) {
  if (!(tx_power > 0) || !(distance > 0) || !(bandwidth > 0) || !(fading >= 0)) {
    throw InputError("snr: power, distance and bandwidth must be > 0");
  }
  return params.system_gain * tx_power * fading /
         (std::pow(distance, params.path_loss_exponent) * bandwidth * params.noise_psd);
}

double rician_fading_sample(double rician_factor, RandomSource& rng) {
  if (!(rician_factor >= 0)) throw InputError("rician_fading_sample: G must be >= 0");
  const double los = std::sqrt(rician_factor / (rician_factor + 1.0));
  const double sigma = std::sqrt(0.5 / (rician_factor + 1.0));
  const double re = los + sigma * rng.normal();
  const double im = sigma * rng.normal();
  return re * re + im * im;
}

double y_tau(double rician_factor, double outage) {
  const double q = gaussian_q_inv(outage);
  const double x = std::sqrt(2.0 * rician_factor);
  if (q == 0.0) throw DomainError("y_tau: Q^-1(eps) must be nonzero");
  if (!(x > q)) throw DomainError("y_tau: strong line-of-sight condition violated");
  const double y = x + std::log(x / (x - q)) / (2.0 * q) - q;
  if (!(y > 0)) throw DomainError("y_tau: threshold is not positive");
  return y;
}

double link_theta(const ChannelParams& params, double tx_power, double distance) {
  const double y = y_tau(params.rician_factor, params.outage);
  return params.system_gain * tx_power * y * y * params.max_latency /
         (2.0 * (1.0 + params.rician_factor) * std::pow(distance, params.path_loss_exponent) *
          params.noise_psd * params.packet_bits * std::numbers::ln2);
}

LinkBudget optimal_bandwidth(const ChannelParams& params, double tx_power, double distance,
                             int agent_id) {
  params.validate();
  if (!(tx_power > 0) || !(distance > 0)) throw InputError("optimal_bandwidth: p and d must be > 0");

  LinkBudget b;
  b.agent_id = agent_id;
  b.tx_power = tx_power;
  b.distance = distance;
  b.y_tau = y_tau(params.rician_factor, params.outage);
  b.theta = link_theta(params, tx_power, distance);
  const double theta = b.theta;
  const double inv = 1.0 / theta;
  const double x = -std::exp(-inv) / theta;
  if (!(x < 0) || !(x >= -1.0 / std::numbers::e - 1e-15)) {
    throw InfeasibleError("optimal_bandwidth: Lambert argument outside [-1/e, 0)");
  }

  // ν·e^ν = x always has the trivial root ν = -1/Θ (Υ = 0, unbounded W);
  // keep the branch that does not return it.
  double upsilon = std::numeric_limits<double>::quiet_NaN();
  for (auto branch : {LambertBranch::kPrincipal, LambertBranch::kLower}) {
    const double w = lambert_w(branch, x);
    if (std::abs(w + inv) > 1e-9 * std::max(1.0, inv)) {
      upsilon = w + inv;
      break;
    }
  }
  if (!(upsilon < 0)) {
    throw InfeasibleError("optimal_bandwidth: no finite bandwidth meets the outage target (theta = " +
                          std::to_string(theta) + ")");
  }
  // One Newton step on ln(1 - ΥΘ) + Υ = 0 polishes Υ near the branch point,
  // where forming the Lambert argument costs digits.
  const double g = std::log1p(-upsilon * theta) + upsilon;
  const double dg = 1.0 - theta / (1.0 - upsilon * theta);
  if (dg != 0.0) {
    const double refined = upsilon - g / dg;
    if (refined < 0 && std::isfinite(refined)) upsilon = refined;
  }

  b.w_star = -params.packet_bits * std::numbers::ln2 / (params.max_latency * upsilon);
  if (!(b.w_star > 0) || !std::isfinite(b.w_star)) {
    throw InfeasibleError("optimal_bandwidth: degenerate bandwidth");
  }
  b.prbs = std::max(1, static_cast<int>(std::ceil(b.w_star / params.prb_hz)));
  b.granted_hz = b.prbs * params.prb_hz;
  return b;
}

UplinkOutcome uplink_outcome_at(const ChannelParams& params, const LinkBudget& budget,
                                double bandwidth, RandomSource& rng) {
  UplinkOutcome out;
  out.fading = rician_fading_sample(params.rician_factor, rng);
  const double gamma = snr(params, budget.tx_power, budget.distance, bandwidth, out.fading);
  const double rate = bandwidth * std::log2(1.0 + gamma);
  out.latency = rate > 0 ? params.packet_bits / rate : std::numeric_limits<double>::infinity();
  out.delivered = out.latency <= params.max_latency;
  return out;
}

UplinkOutcome uplink_outcome(const ChannelParams& params, const LinkBudget& budget, RandomSource& rng) {
  return uplink_outcome_at(params, budget, budget.granted_hz, rng);
}

double exact_outage(const ChannelParams& params, double tx_power, double distance, double bandwidth) {
  const double mean_snr = snr(params, tx_power, distance, bandwidth, 1.0);
  const double threshold = std::exp2(params.packet_bits / (bandwidth * params.max_latency)) - 1.0;
  const double g = params.rician_factor;
  const double b = std::sqrt(2.0 * (g + 1.0) * threshold / mean_snr);
  return marcum_q1_complement(std::sqrt(2.0 * g), b);
}

std::vector<std::optional<LinkBudget>> link_table(const ChannelParams& params,
                                                  const SensorFleet& fleet) {
  std::vector<std::optional<LinkBudget>> table;
  table.reserve(fleet.size());
  for (const auto& a : fleet.agents()) {
    try {
      table.emplace_back(optimal_bandwidth(params, a.tx_power, a.distance, a.id));
    } catch (const InfeasibleError&) {
      table.emplace_back(std::nullopt);
    }
  }
  return table;
}

}  // namespace reverb
