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
#include <span>
#include <vector>

#include "reverb/aol.hpp"
#include "reverb/channel.hpp"
#include "reverb/estimator.hpp"
#include "reverb/random.hpp"
#include "reverb/sensing.hpp"

namespace reverb {

/// A fleet together with its static link budgets (nullopt = unreachable).
struct Deployment {
  SensorFleet fleet;
  ChannelParams channel;
  std::vector<std::optional<LinkBudget>> links;

  static Deployment make(SensorFleet fleet, const ChannelParams& channel);
  bool reachable(int id) const { return links.at(static_cast<std::size_t>(id)).has_value(); }
};

/// Reachable-and-unscheduled agents, kept sorted by id.
class AvailableSet {
 public:
  explicit AvailableSet(const Deployment& deployment);
  AvailableSet(std::vector<int> ids) : ids_(std::move(ids)) {}

  bool contains(int id) const;
  void remove(int id);
  bool empty() const { return ids_.empty(); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<int>& ids() const { return ids_; }

 private:
  std::vector<int> ids_;
};

/// min(ξ²_k, 1/η_k); η_k = 0 imposes nothing.
UncertaintyTargets compute_targets(const Vector& xi_sq, const Vector& eta);

struct AolService {
  std::vector<int> agents;
  std::vector<int> unserviceable;
};

/// For each violated feature (in the given order) the nearest available agent
/// measuring it; picked agents leave `available`. At most `cap` agents.
AolService service_aol(std::span<const int> violated_features, const SensorFleet& fleet,
                       AvailableSet& available, std::size_t cap = static_cast<std::size_t>(-1));

/// Feature with the largest variance-to-target ratio among features that an
/// available agent can measure; ties go to the lowest index.
std::optional<int> select_feature(const Vector& cov_diag, const UncertaintyTargets& targets,
                                  const SensorFleet& fleet, const AvailableSet& available);

/// Lowest-noise available agent measuring `feature`; ties by lowest id.
std::optional<int> best_agent_for(int feature, const SensorFleet& fleet, const AvailableSet& available);

enum class PickReason { kAol, kValue };

struct SchedulePick {
  PickReason reason;
  int feature;
  int agent;
};

struct ScheduleResult {
  std::vector<int> selected;
  std::vector<LinkBudget> budgets;
  std::vector<int> aol_serviced;
  std::vector<int> aol_unserviceable;
  std::vector<SchedulePick> trace;
  int value_iterations = 0;
  bool blind = true;
  /// Covariance assuming every selected agent reports.
  Matrix planned_cov;

  int total_prbs() const;
};

/// Selection half of the scheduler: AoL servicing first, then greedy
/// value-of-information picks while (|Q| < C, a target is violated, a
/// measurable feature remains). Pure and deterministic.
ScheduleResult plan_schedule(const Belief& prior, const UncertaintyTargets& targets,
                             const AolTracker& aol, const Deployment& deployment, int max_connections);

struct Execution {
  Belief posterior;
  AolTracker aol;
  std::vector<Observation> observations;
  std::vector<bool> delivered;  // parallel to ScheduleResult::selected
  std::vector<int> closed_features;
};

/// Transmission half: selected agents observe the true state, uplinks are
/// sampled, and only delivered observations update the belief and close loops.
Execution execute_schedule(const ScheduleResult& plan, const Belief& prior, const Vector& true_state,
                           const Deployment& deployment, const AolTracker& aol,
                           RandomSource& sensor_rng, RandomSource& channel_rng);

struct ScheduleOutcome {
  ScheduleResult result;
  Execution execution;
};

ScheduleOutcome schedule(const Belief& prior, const UncertaintyTargets& targets, const AolTracker& aol,
                         const Deployment& deployment, int max_connections, const Vector& true_state,
                         RandomSource& sensor_rng, RandomSource& channel_rng);

/// Attaches link budgets for an arbitrary selection (used by the greedy
/// benchmarks so every scheme is charged the same way).
std::vector<LinkBudget> budgets_for(const Deployment& deployment, std::span<const int> ids);

}  // namespace reverb
