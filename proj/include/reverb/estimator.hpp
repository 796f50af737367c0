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

#include <span>
#include <vector>

#include "reverb/core.hpp"
#include "reverb/dynamics.hpp"
#include "reverb/random.hpp"
#include "reverb/sensing.hpp"

namespace reverb {

/// Gaussian belief N(mean, cov) held by the digital twin.
struct Belief {
  Vector mean;
  Matrix cov;
  int qi = 0;

  void validate() const;
};

/// Per-feature variance ceilings the posterior must meet.
struct UncertaintyTargets {
  Vector variance;
};

/// Stacked observation model for a set of reporting agents.
struct FusionBatch {
  Matrix H;      // (sum D) x K
  Matrix noise;  // block diagonal (sum D) x (sum D)
  Vector obs;    // (sum D), may be empty when only the covariance is needed

  Eigen::Index rows() const { return H.rows(); }
};

/// Stacks the agents' H and C_w (observations left empty).
FusionBatch stack_agents(const SensorFleet& fleet, std::span<const int> ids);
/// Stacks agents together with their observations (same order).
FusionBatch stack_observations(const SensorFleet& fleet, std::span<const Observation> obs);

/// Blind prediction: mean through the deterministic update map, covariance
/// through the Jacobian at the previous mean plus process noise.
Belief predict(const Belief& belief, double action, const DynamicsModel& model);

/// Kalman update with the stacked batch. Covariance uses the Joseph form.
/// When `batch.obs` is empty the mean is left unchanged.
Belief fuse(const Belief& prior, const FusionBatch& batch);

/// Covariance-only fusion (cheaper, used inside the scheduling loop).
Matrix fused_covariance(const Matrix& prior_cov, const FusionBatch& batch);

/// η_k = 1 / [Ψ]_kk.
Vector accuracy_vector(const Belief& belief);

struct TargetCheck {
  bool ok = true;
  std::vector<int> violating;
};

/// Inclusive check [Ψ]_kk <= target_k for every feature.
TargetCheck meets_targets(const Belief& belief, const UncertaintyTargets& targets);
TargetCheck meets_targets(const Matrix& cov, const UncertaintyTargets& targets);

/// Initial belief: true state perturbed by N(0, init_var·I), covariance init_var·I.
Belief initial_belief(const Vector& true_state, double init_var, RandomSource& rng);

}  // namespace reverb
