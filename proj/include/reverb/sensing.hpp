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

#include <json.hpp>

#include "reverb/core.hpp"
#include "reverb/random.hpp"

namespace reverb {

/// A wireless sensor observing o = H·s + w, w ~ N(0, C_w).
struct SensingAgent {
  int id = 0;
  Matrix H;          // D x K
  Matrix noise_cov;  // D x D
  double distance = 1.0;  // metres to the access point
  double tx_power = 0.02; // watts

  Eigen::Index obs_dim() const { return H.rows(); }
  /// Feature index when H is a single selector row, otherwise nullopt.
  std::optional<int> selected_feature() const;
  /// Scalar noise level used for ranking sensors (mean of the diagonal).
  double noise_variance() const { return noise_cov.diagonal().mean(); }

  void validate(Eigen::Index state_dim, double max_distance) const;
};

struct Observation {
  int agent_id = 0;
  Vector value;
  int qi = 0;
};

struct NoiseRange {
  double lo;
  double hi;
};

struct FleetConfig {
  int agents = 30;
  int state_dim = 2;
  double max_distance = 20.0;
  double tx_power = 0.02;
  /// Per-feature measurement-noise variance ranges, indexed by feature.
  std::vector<NoiseRange> noise_variance{{1e-3, 2e-2}, {2e-4, 4e-3}};
};

class SensorFleet {
 public:
  SensorFleet() = default;
  SensorFleet(std::vector<SensingAgent> agents, int state_dim);

  const std::vector<SensingAgent>& agents() const { return agents_; }
  const SensingAgent& agent(int id) const { return agents_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return agents_.size(); }
  int state_dim() const { return state_dim_; }

  /// Ids of the agents whose H has a nonzero entry in column `feature`.
  const std::vector<int>& measuring(int feature) const {
    return feature_index_.at(static_cast<std::size_t>(feature));
  }
  /// Features not measured by any agent.
  std::vector<int> unmeasured_features() const;

 private:
  std::vector<SensingAgent> agents_;
  std::vector<std::vector<int>> feature_index_;
  int state_dim_ = 0;
};

/// Round-robin single-feature sensors with uniform distances on (0, d_max]
/// and per-feature uniform noise variances. Throws ConfigError when fewer
/// agents than features are requested.
SensorFleet generate_fleet(const FleetConfig& config, RandomSource& rng);

Observation observe(const SensingAgent& agent, const Vector& s, RandomSource& rng, int qi = 0);

nlohmann::json fleet_to_json(const SensorFleet& fleet);
SensorFleet fleet_from_json(const nlohmann::json& j);

}  // namespace reverb
