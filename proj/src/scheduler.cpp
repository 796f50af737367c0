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

#include "reverb/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace reverb {

Deployment Deployment::make(SensorFleet fleet, const ChannelParams& channel) {
  Deployment d;
  d.links = link_table(channel, fleet);
  d.fleet = std::move(fleet);
  d.channel = channel;
  return d;
}

AvailableSet::AvailableSet(const Deployment& deployment) {
  for (const auto& a : deployment.fleet.agents()) {
    if (deployment.reachable(a.id)) ids_.push_back(a.id);
  }
}

bool AvailableSet::contains(int id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

void AvailableSet::remove(int id) {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it != ids_.end() && *it == id) ids_.erase(it);
}

int ScheduleResult::total_prbs() const {
  return std::accumulate(budgets.begin(), budgets.end(), 0,
                         [](int acc, const LinkBudget& b) { return acc + b.prbs; });
}

UncertaintyTargets compute_targets(const Vector& xi_sq, const Vector& eta) {
  if (xi_sq.size() != eta.size()) throw InputError("compute_targets: size mismatch");
  UncertaintyTargets t;
  t.variance = xi_sq;
  for (Eigen::Index k = 0; k < xi_sq.size(); ++k) {
    if (!(xi_sq(k) > 0)) throw InputError("compute_targets: xi^2 must be > 0");
    if (!(eta(k) >= 0) || !std::isfinite(eta(k))) throw InputError("compute_targets: eta must be finite and >= 0");
    if (eta(k) > 0) t.variance(k) = std::min(xi_sq(k), 1.0 / eta(k));
  }
  return t;
}

namespace {

std::optional<int> nearest_agent_for(int feature, const SensorFleet& fleet, const AvailableSet& available) {
  std::optional<int> best;
  for (int id : fleet.measuring(feature)) {
    if (!available.contains(id)) continue;
    if (!best || fleet.agent(id).distance < fleet.agent(*best).distance) best = id;
  }
  return best;
}

}  // namespace

AolService service_aol(std::span<const int> violated_features, const SensorFleet& fleet,
                       AvailableSet& available, std::size_t cap) {
  AolService out;
  for (int k : violated_features) {
    if (out.agents.size() >= cap) {
      out.unserviceable.push_back(k);
      continue;
    }
    auto id = nearest_agent_for(k, fleet, available);
    if (!id) {
      out.unserviceable.push_back(k);
      continue;
    }
    out.agents.push_back(*id);
    available.remove(*id);
  }
  return out;
}

std::optional<int> best_agent_for(int feature, const SensorFleet& fleet, const AvailableSet& available) {
  std::optional<int> best;
  for (int id : fleet.measuring(feature)) {
    if (!available.contains(id)) continue;
    if (!best || fleet.agent(id).noise_variance() < fleet.agent(*best).noise_variance()) best = id;
  }
  return best;
}

std::optional<int> select_feature(const Vector& cov_diag, const UncertaintyTargets& targets,
                                  const SensorFleet& fleet, const AvailableSet& available) {
  std::optional<int> best;
  double best_ratio = -1.0;
  for (int k = 0; k < fleet.state_dim(); ++k) {
    if (!best_agent_for(k, fleet, available)) continue;
    const double ratio = cov_diag(k) / targets.variance(k);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = k;
    }
  }
  return best;
}

ScheduleResult plan_schedule(const Belief& prior, const UncertaintyTargets& targets,
                             const AolTracker& aol, const Deployment& deployment, int max_connections) {
  const auto& fleet = deployment.fleet;
  if (max_connections < 0) throw InputError("plan_schedule: C must be >= 0");
  if (targets.variance.size() != prior.cov.rows()) throw InputError("plan_schedule: target size mismatch");
  const auto cap = static_cast<std::size_t>(max_connections);

  ScheduleResult r;
  AvailableSet available(deployment);

  // Most overdue first, ties by feature index.
  auto overdue = violated(aol);
  std::stable_sort(overdue.begin(), overdue.end(), [&](int a, int b) {
    const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    return aol.ages[ua] - aol.thresholds[ua] > aol.ages[ub] - aol.thresholds[ub];
  });
  auto service = service_aol(overdue, fleet, available, cap);
  for (std::size_t i = 0, j = 0; i < overdue.size(); ++i) {
    if (std::find(service.unserviceable.begin(), service.unserviceable.end(), overdue[i]) !=
        service.unserviceable.end()) {
      continue;
    }
    r.trace.push_back({PickReason::kAol, overdue[i], service.agents[j++]});
  }
  r.selected = service.agents;
  r.aol_serviced = service.agents;
  r.aol_unserviceable = service.unserviceable;

  r.planned_cov = fused_covariance(prior.cov, stack_agents(fleet, r.selected));
  while (r.selected.size() < cap && !meets_targets(r.planned_cov, targets).ok) {
    auto k = select_feature(r.planned_cov.diagonal(), targets, fleet, available);
    if (!k) break;
    const int id = *best_agent_for(*k, fleet, available);
    available.remove(id);
    r.selected.push_back(id);
    r.trace.push_back({PickReason::kValue, *k, id});
    ++r.value_iterations;
    r.planned_cov = fused_covariance(prior.cov, stack_agents(fleet, r.selected));
  }

  r.budgets = budgets_for(deployment, r.selected);
  r.blind = r.selected.empty();
  return r;
}

std::vector<LinkBudget> budgets_for(const Deployment& deployment, std::span<const int> ids) {
  std::vector<LinkBudget> out;
  out.reserve(ids.size());
  for (int id : ids) {
    const auto& link = deployment.links.at(static_cast<std::size_t>(id));
    if (!link) throw InfeasibleError("budgets_for: agent " + std::to_string(id) + " has no feasible link");
    out.push_back(*link);
  }
  return out;
}

Execution execute_schedule(const ScheduleResult& plan, const Belief& prior, const Vector& true_state,
                           const Deployment& deployment, const AolTracker& aol,
                           RandomSource& sensor_rng, RandomSource& channel_rng) {
  Execution ex;
  ex.aol = aol;
  std::vector<Observation> delivered_obs;
  for (std::size_t i = 0; i < plan.selected.size(); ++i) {
    const auto& agent = deployment.fleet.agent(plan.selected[i]);
    auto obs = observe(agent, true_state, sensor_rng, prior.qi);
    const auto up = uplink_outcome(deployment.channel, plan.budgets[i], channel_rng);
    ex.delivered.push_back(up.delivered);
    if (up.delivered) {
      delivered_obs.push_back(obs);
      for (Eigen::Index k = 0; k < agent.H.cols(); ++k) {
        if ((agent.H.col(k).array() != 0.0).any()) ex.closed_features.push_back(static_cast<int>(k));
      }
    }
    ex.observations.push_back(std::move(obs));
  }
  std::sort(ex.closed_features.begin(), ex.closed_features.end());
  ex.closed_features.erase(std::unique(ex.closed_features.begin(), ex.closed_features.end()),
                           ex.closed_features.end());
  ex.posterior = delivered_obs.empty() ? prior : fuse(prior, stack_observations(deployment.fleet, delivered_obs));
  ex.aol = close_loop(std::move(ex.aol), ex.closed_features);
  return ex;
}

ScheduleOutcome schedule(const Belief& prior, const UncertaintyTargets& targets, const AolTracker& aol,
                         const Deployment& deployment, int max_connections, const Vector& true_state,
                         RandomSource& sensor_rng, RandomSource& channel_rng) {
  ScheduleOutcome out;
  out.result = plan_schedule(prior, targets, aol, deployment, max_connections);
  out.execution = execute_schedule(out.result, prior, true_state, deployment, aol, sensor_rng, channel_rng);
  return out;
}

}  // namespace reverb
