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

#include <optional>
#include <vector>

#include "reverb/core.hpp"
#include "reverb/random.hpp"
#include "reverb/sensing.hpp"

namespace reverb {

/// Rician uplink parameters. Units: watts, hertz, seconds, bits.
struct ChannelParams {
  double system_gain = 1.0;        // Γ
  double path_loss_exponent = 2.0;
  double noise_psd = 0.0;          // N0 in W/Hz
  double rician_factor = 10.0;     // G, linear
  double packet_bits = 1024.0;     // D
  double max_latency = 5e-3;       // τ_max
  double outage = 1e-5;            // ε
  double prb_hz = 180e3;

  /// Defaults with N0 derived from a total noise power (dBm) measured over a
  /// reference bandwidth.
  static ChannelParams from_noise_power(double noise_dbm, double reference_bandwidth_hz);
  /// Throws InputError when a parameter is out of range or the strong
  /// line-of-sight condition sqrt(2G) > Q⁻¹(ε) fails.
  void validate() const;
};

inline constexpr double kDefaultNoiseDbm = -11.5;
inline constexpr double kDefaultNoiseReferenceHz = 15e6;

/// Bandwidth granted to one scheduled agent.
struct LinkBudget {
  int agent_id = -1;
  double w_star = 0.0;   // Hz, minimum bandwidth meeting the outage target
  int prbs = 0;          // ceil(w_star / prb_hz)
  double granted_hz = 0.0;
  double theta = 0.0;
  double y_tau = 0.0;
  double tx_power = 0.0;
  double distance = 0.0;
};

struct UplinkOutcome {
  bool delivered = false;
  double latency = 0.0;  // seconds; +inf when the rate is zero
  double fading = 0.0;
};

/// Instantaneous SNR Γ·p·g / (d^α · W · N0).
double snr(const ChannelParams& params, double tx_power, double distance, double bandwidth,
           double fading);

/// Unit-mean Rician power gain |h|², h = sqrt(G/(G+1)) + CN(0, 1/(G+1)).
double rician_fading_sample(double rician_factor, RandomSource& rng);

/// Outage threshold approximation for the Marcum-Q equation 1 - Q1(sqrt(2G), y) = ε.
double y_tau(double rician_factor, double outage);

/// Θ = Γ p y² τ / (2 (1+G) d^α N0 D ln 2).
double link_theta(const ChannelParams& params, double tx_power, double distance);

/// Closed-form minimum bandwidth meeting P[latency > τ_max] <= ε, via the
/// non-trivial real Lambert W root. Throws InfeasibleError when Θ <= 1 (no
/// finite bandwidth suffices).
LinkBudget optimal_bandwidth(const ChannelParams& params, double tx_power, double distance,
                             int agent_id = -1);

/// Samples fading and checks the Shannon-rate latency against τ_max at the
/// budget's granted (PRB-quantized) bandwidth.
UplinkOutcome uplink_outcome(const ChannelParams& params, const LinkBudget& budget, RandomSource& rng);

/// Same, at an explicit bandwidth.
UplinkOutcome uplink_outcome_at(const ChannelParams& params, const LinkBudget& budget,
                                double bandwidth, RandomSource& rng);

/// Exact outage probability at bandwidth W: 1 - Q1(sqrt(2G), y(W)).
double exact_outage(const ChannelParams& params, double tx_power, double distance, double bandwidth);

/// Per-agent link budgets for a static fleet; nullopt marks agents no
/// bandwidth can serve.
std::vector<std::optional<LinkBudget>> link_table(const ChannelParams& params,
                                                  const SensorFleet& fleet);

}  // namespace reverb
