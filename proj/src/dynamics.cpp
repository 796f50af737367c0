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

#include "reverb/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace reverb {

void MountainCarParams::validate() const {
  if (!(gravity > 0) || !(force_gain > 0)) {
    throw InputError("mountain car: gravity and force gain must be strictly positive");
  }
  if (!(position.lo < position.hi) || !(velocity.lo < velocity.hi)) {
    throw InputError("mountain car: empty clamp interval");
  }
  if (!(start_position.lo <= start_position.hi)) {
    throw InputError("mountain car: empty start interval");
  }
}

DynamicsModel::DynamicsModel(Map drift, JacobianMap drift_jacobian, Vector control_gain,
                             Matrix process_noise, std::vector<Bounds> clamps, Bounds action_bound,
                             std::vector<std::string> feature_names)
    : drift_(std::move(drift)),
      drift_jacobian_(std::move(drift_jacobian)),
      control_gain_(std::move(control_gain)),
      process_noise_(std::move(process_noise)),
      clamps_(std::move(clamps)),
      action_bound_(action_bound),
      feature_names_(std::move(feature_names)) {
  const auto k = control_gain_.size();
  if (process_noise_.rows() != k || process_noise_.cols() != k) {
    throw InputError("dynamics: process noise must be K x K");
  }
  if ((process_noise_ - process_noise_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InputError("dynamics: process noise must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(process_noise_);
  if (eig.eigenvalues().minCoeff() < -1e-12) {
    throw InputError("dynamics: process noise must be positive semidefinite");
  }
  if (!clamps_.empty() && static_cast<Eigen::Index>(clamps_.size()) != k) {
    throw InputError("dynamics: one clamp interval per feature");
  }
  if (feature_names_.empty()) {
    for (Eigen::Index i = 0; i < k; ++i) feature_names_.push_back("s" + std::to_string(i));
  }
  noise_factor_ = psd_factor(process_noise_);
}

Vector DynamicsModel::interior(const Vector& s, double a) const {
  return drift_(s) + control_gain_ * a;
}

Vector DynamicsModel::transition(const Vector& s, double a, const Vector& noise) const {
  if (transition_) return transition_(s, a, noise);
  Vector next = interior(s, a) + noise;
  for (std::size_t i = 0; i < clamps_.size(); ++i) {
    next(static_cast<Eigen::Index>(i)) = std::clamp(next(static_cast<Eigen::Index>(i)), clamps_[i].lo, clamps_[i].hi);
  }
  return next;
}

Vector DynamicsModel::update(const Vector& s, double a) const {
  return transition(s, a, Vector::Zero(dim()));
}

Matrix DynamicsModel::jacobian(const Vector& s) const { return drift_jacobian_(s); }

Vector DynamicsModel::sample_noise(RandomSource& rng) const {
  return sample_gaussian(noise_factor_, rng);
}

DynamicsModel DynamicsModel::with_process_noise(const Matrix& cov) const {
  DynamicsModel copy(drift_, drift_jacobian_, control_gain_, cov, clamps_, action_bound_,
                     feature_names_);
  copy.transition_ = transition_;
  return copy;
}

DynamicsModel make_mountain_car(const MountainCarParams& p, const Matrix& process_noise) {
  p.validate();
  const double phi = p.gravity;
  const double theta = p.force_gain;
  // x' = x + v - phi*cos(3x) + theta*a, v' = v - phi*cos(3x) + theta*a.
  auto drift = [phi](const Vector& s) {
    const double v = s(1) - phi * std::cos(3.0 * s(0));
    Vector out(2);
    out << s(0) + v, v;
    return out;
  };
  auto jac = [phi](const Vector& s) {
    const double dv_dx = 3.0 * phi * std::sin(3.0 * s(0));
    Matrix j(2, 2);
    j << 1.0 + dv_dx, 1.0, dv_dx, 1.0;
    return j;
  };
  Vector gain(2);
  gain << theta, theta;
  DynamicsModel model(drift, jac, gain, process_noise, {p.position, p.velocity}, Bounds{-1.0, 1.0},
                      {"position", "velocity"});
  model.set_transition([p](const Vector& s, double a, const Vector& u) {
    double v = s(1) + p.force_gain * a - p.gravity * std::cos(3.0 * s(0)) + u(1);
    v = std::clamp(v, p.velocity.lo, p.velocity.hi);
    double x = std::clamp(s(0) + v + u(0), p.position.lo, p.position.hi);
    if (x <= p.position.lo && v < 0) v = 0;
    Vector out(2);
    out << x, v;
    return out;
  });
  return model;
}

DynamicsModel make_linear_model(const Matrix& A, const Vector& B, const Matrix& process_noise) {
  if (A.rows() != A.cols() || A.rows() != B.size()) throw InputError("linear model: A must be K x K");
  return DynamicsModel([A](const Vector& s) -> Vector { return A * s; },
                       [A](const Vector&) -> Matrix { return A; }, B, process_noise, {},
                       Bounds{-1e300, 1e300});
}

namespace {

void check_inputs(const DynamicsModel& model, const Vector& s) {
  if (s.size() != model.dim()) throw InputError("state dimension does not match the model");
  if (!all_finite(s)) throw InputError("state must be finite");
}

}  // namespace

Vector step(const DynamicsModel& model, const Vector& s, double a, RandomSource& noise_rng) {
  check_inputs(model, s);
  if (!std::isfinite(a)) throw InputError("action must be finite");
  const auto& bound = model.action_bound();
  if (a < bound.lo || a > bound.hi) throw InputError("action outside the model's bound");
  return model.transition(s, a, model.sample_noise(noise_rng));
}

Matrix jacobian_at(const DynamicsModel& model, const Vector& s) {
  check_inputs(model, s);
  return model.jacobian(s);
}

bool reached_goal(const MountainCarParams& params, const Vector& s) {
  return s(0) >= params.goal_position;
}

}  // namespace reverb
