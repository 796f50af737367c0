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

#include <functional>
#include <string>
#include <vector>

#include "reverb/core.hpp"
#include "reverb/random.hpp"

namespace reverb {

struct Bounds {
  double lo;
  double hi;
};

/// Constants of the continuous mountain-car plant.
struct MountainCarParams {
  double gravity = 0.0025;
  double force_gain = 0.0015;
  double goal_position = 0.45;
  Bounds position{-1.2, 0.6};
  Bounds velocity{-0.07, 0.07};
  Bounds start_position{-0.6, -0.4};

  void validate() const;
};

/// Discrete-time plant s' = f(s) + B·a + u, u ~ N(0, C_u), followed by the
/// model's clamping rule.
///
/// `drift` and `drift_jacobian` describe the clamp-free interior map; the
/// estimator linearizes that map. `transition` (when set) replaces the default
/// "add then box-clamp" rule so a model can clamp intermediate quantities the
/// way its reference environment does.
class DynamicsModel {
 public:
  using Map = std::function<Vector(const Vector&)>;
  using JacobianMap = std::function<Matrix(const Vector&)>;
  using Transition = std::function<Vector(const Vector& s, double a, const Vector& noise)>;

  DynamicsModel(Map drift, JacobianMap drift_jacobian, Vector control_gain, Matrix process_noise,
                std::vector<Bounds> clamps, Bounds action_bound,
                std::vector<std::string> feature_names = {});

  Eigen::Index dim() const { return control_gain_.size(); }
  const Vector& control_gain() const { return control_gain_; }
  const Matrix& process_noise() const { return process_noise_; }
  const std::vector<Bounds>& clamps() const { return clamps_; }
  const Bounds& action_bound() const { return action_bound_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  /// Interior map f(s) + B·a, no clamping, no noise.
  Vector interior(const Vector& s, double a) const;
  /// Deterministic update including the clamping rule (noise = 0).
  Vector update(const Vector& s, double a) const;
  /// Update with an explicit additive noise realization.
  Vector transition(const Vector& s, double a, const Vector& noise) const;
  /// ∂f/∂s at s (clamping ignored).
  Matrix jacobian(const Vector& s) const;

  Vector sample_noise(RandomSource& rng) const;

  void set_transition(Transition t) { transition_ = std::move(t); }

  /// Copy of this model with a different process-noise covariance.
  DynamicsModel with_process_noise(const Matrix& cov) const;

 private:
  Map drift_;
  JacobianMap drift_jacobian_;
  Vector control_gain_;
  Matrix process_noise_;
  Matrix noise_factor_;
  std::vector<Bounds> clamps_;
  Bounds action_bound_;
  std::vector<std::string> feature_names_;
  Transition transition_;
};

/// Mountain car with gym-style increment ordering: velocity first, then
/// position integrates the new velocity. Left-wall hits zero the velocity.
DynamicsModel make_mountain_car(const MountainCarParams& params = {},
                                const Matrix& process_noise = Vector::Constant(2, 1e-6).asDiagonal());

/// s' = A·s + B·a + u with no clamping. Used by estimator tests.
DynamicsModel make_linear_model(const Matrix& A, const Vector& B, const Matrix& process_noise);

/// Samples the successor state; throws InputError on non-finite state/action
/// or an action outside the model's bound.
Vector step(const DynamicsModel& model, const Vector& s, double a, RandomSource& noise_rng);

Matrix jacobian_at(const DynamicsModel& model, const Vector& s);

bool reached_goal(const MountainCarParams& params, const Vector& s);

}  // namespace reverb
