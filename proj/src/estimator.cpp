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

#include "reverb/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace reverb {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kPsdTol = 1e-10;
constexpr double kJitter = 1e-12;

Matrix checked_covariance(const Matrix& cov, const char* where) {
  if (!all_finite(cov)) throw NumericalError(std::string(where) + ": covariance is not finite");
  // Tolerances scale with the largest entry so long blind horizons do not trip them.
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw NumericalError(std::string(where) + ": covariance lost symmetry");
  }
  Matrix sym = symmetrized(cov);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -kPsdTol * scale) {
    throw NumericalError(std::string(where) + ": covariance is not positive semidefinite");
  }
  return sym;
}

Matrix block_diagonal(const std::vector<const Matrix*>& blocks) {
  Eigen::Index n = 0;
  for (const auto* b : blocks) n += b->rows();
  Matrix out = Matrix::Zero(n, n);
  Eigen::Index at = 0;
  for (const auto* b : blocks) {
    out.block(at, at, b->rows(), b->cols()) = *b;
    at += b->rows();
  }
  return out;
}

// Kalman gain Ψ Hᵀ S⁻¹ via Cholesky of S = C_w + H Ψ Hᵀ, one jitter retry.
Matrix kalman_gain(const Matrix& prior_cov, const FusionBatch& batch) {
  if (batch.H.cols() != prior_cov.rows() || batch.noise.rows() != batch.H.rows() ||
      batch.noise.cols() != batch.H.rows()) {
    throw InputError("fuse: batch dimensions do not match the belief");
  }
  Matrix innovation = symmetrized(Matrix(batch.noise + batch.H * prior_cov * batch.H.transpose()));
  Eigen::LLT<Matrix> llt(innovation);
  if (llt.info() != Eigen::Success) {
    innovation.diagonal().array() += kJitter;
    llt.compute(innovation);
    if (llt.info() != Eigen::Success) throw NumericalError("fuse: singular innovation covariance");
  }
  // K = Ψ Hᵀ S⁻¹  <=>  Kᵀ = S⁻¹ H Ψ.
  return llt.solve(batch.H * prior_cov).transpose();
}

Matrix joseph_update(const Matrix& prior_cov, const FusionBatch& batch, const Matrix& gain) {
  const auto k = prior_cov.rows();
  const Matrix a = Matrix::Identity(k, k) - gain * batch.H;
  return a * prior_cov * a.transpose() + gain * batch.noise * gain.transpose();
}

}  // namespace

void Belief::validate() const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw InputError("belief: covariance must be K x K");
  }
  if (!all_finite(mean)) throw InputError("belief: mean must be finite");
  checked_covariance(cov, "belief");
}

FusionBatch stack_agents(const SensorFleet& fleet, std::span<const int> ids) {
  const auto k = static_cast<Eigen::Index>(fleet.state_dim());
  Eigen::Index rows = 0;
  for (int id : ids) rows += fleet.agent(id).obs_dim();
  FusionBatch batch{Matrix(rows, k), Matrix(), Vector()};
  std::vector<const Matrix*> blocks;
  Eigen::Index at = 0;
  for (int id : ids) {
    const auto& a = fleet.agent(id);
    batch.H.middleRows(at, a.obs_dim()) = a.H;
    blocks.push_back(&a.noise_cov);
    at += a.obs_dim();
  }
  batch.noise = block_diagonal(blocks);
  return batch;
}

FusionBatch stack_observations(const SensorFleet& fleet, std::span<const Observation> obs) {
  std::vector<int> ids;
  ids.reserve(obs.size());
  for (const auto& o : obs) ids.push_back(o.agent_id);
  FusionBatch batch = stack_agents(fleet, ids);
  batch.obs.resize(batch.rows());
  Eigen::Index at = 0;
  for (const auto& o : obs) {
    if (o.value.size() != fleet.agent(o.agent_id).obs_dim()) {
      throw InputError("fuse: observation length does not match its agent");
    }
    batch.obs.segment(at, o.value.size()) = o.value;
    at += o.value.size();
  }
  return batch;
}

Belief predict(const Belief& belief, double action, const DynamicsModel& model) {
  belief.validate();
  if (belief.mean.size() != model.dim()) throw InputError("predict: belief/model dimension mismatch");
  const Matrix p = model.jacobian(belief.mean);
  Belief out;
  out.mean = model.update(belief.mean, action);
  out.cov = checked_covariance(p * belief.cov * p.transpose() + model.process_noise(), "predict");
  out.qi = belief.qi + 1;
  return out;
}

Matrix fused_covariance(const Matrix& prior_cov, const FusionBatch& batch) {
  if (batch.rows() == 0) return prior_cov;
  const Matrix gain = kalman_gain(prior_cov, batch);
  return checked_covariance(symmetrized(joseph_update(prior_cov, batch, gain)), "fuse");
}

Belief fuse(const Belief& prior, const FusionBatch& batch) {
  prior.validate();
  if (batch.rows() == 0) return prior;
  const Matrix gain = kalman_gain(prior.cov, batch);
  Belief out;
  out.qi = prior.qi;
  out.cov = checked_covariance(symmetrized(joseph_update(prior.cov, batch, gain)), "fuse");
  if (batch.obs.size() == 0) {
    out.mean = prior.mean;
  } else {
    if (batch.obs.size() != batch.rows()) throw InputError("fuse: observation vector length");
    if (!all_finite(batch.obs)) throw InputError("fuse: observations must be finite");
    out.mean = prior.mean + gain * (batch.obs - batch.H * prior.mean);
  }
  return out;
}

Vector accuracy_vector(const Belief& belief) {
  const Vector d = belief.cov.diagonal();
  if ((d.array() <= 0.0).any()) throw NumericalError("accuracy_vector: nonpositive variance");
  return d.cwiseInverse();
}

TargetCheck meets_targets(const Matrix& cov, const UncertaintyTargets& targets) {
  if (targets.variance.size() != cov.rows()) throw InputError("meets_targets: dimension mismatch");
  TargetCheck check;
  for (Eigen::Index k = 0; k < cov.rows(); ++k) {
    if (cov(k, k) > targets.variance(k)) {
      check.ok = false;
      check.violating.push_back(static_cast<int>(k));
    }
  }
  return check;
}

TargetCheck meets_targets(const Belief& belief, const UncertaintyTargets& targets) {
  return meets_targets(belief.cov, targets);
}

Belief initial_belief(const Vector& true_state, double init_var, RandomSource& rng) {
  const auto k = true_state.size();
  Belief b;
  b.mean = true_state + std::sqrt(init_var) * rng.normal_vector(k);
  b.cov = Matrix::Identity(k, k) * init_var;
  b.qi = 0;
  return b;
}

}  // namespace reverb
