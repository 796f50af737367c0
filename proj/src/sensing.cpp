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

#include "reverb/sensing.hpp"

#include <cmath>
#include <iostream>

namespace reverb {

std::optional<int> SensingAgent::selected_feature() const {
  if (H.rows() != 1) return std::nullopt;
  int found = -1;
  for (Eigen::Index k = 0; k < H.cols(); ++k) {
    if (H(0, k) == 0.0) continue;
    if (found >= 0) return std::nullopt;
    found = static_cast<int>(k);
  }
  if (found < 0) return std::nullopt;
  return found;
}

void SensingAgent::validate(Eigen::Index state_dim, double max_distance) const {
  if (H.cols() != state_dim || H.rows() < 1 || H.rows() > state_dim) {
    throw InputError("sensing agent " + std::to_string(id) + ": H must be D x K with D <= K");
  }
  if (noise_cov.rows() != H.rows() || noise_cov.cols() != H.rows()) {
    throw InputError("sensing agent " + std::to_string(id) + ": C_w must be D x D");
  }
  Eigen::LLT<Matrix> llt(symmetrized(noise_cov));
  if ((noise_cov - noise_cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
      llt.info() != Eigen::Success) {
    throw InputError("sensing agent " + std::to_string(id) + ": C_w must be symmetric PD");
  }
  if (!(distance > 0) || distance > max_distance) {
    throw InputError("sensing agent " + std::to_string(id) + ": distance outside (0, d_max]");
  }
  if (!(tx_power > 0)) throw InputError("sensing agent " + std::to_string(id) + ": p_tx must be > 0");
}

SensorFleet::SensorFleet(std::vector<SensingAgent> agents, int state_dim)
    : agents_(std::move(agents)), feature_index_(static_cast<std::size_t>(state_dim)),
      state_dim_(state_dim) {
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const auto& a = agents_[i];
    if (a.id != static_cast<int>(i)) throw InputError("fleet: agent ids must equal their position");
    if (a.H.cols() != state_dim) throw InputError("fleet: H column count must equal K");
    for (Eigen::Index k = 0; k < a.H.cols(); ++k) {
      if ((a.H.col(k).array() != 0.0).any()) feature_index_[static_cast<std::size_t>(k)].push_back(a.id);
    }
  }
  for (int k : unmeasured_features()) {
    std::cerr << "warning: feature " << k << " is not measured by any sensing agent\n";
  }
}

std::vector<int> SensorFleet::unmeasured_features() const {
  std::vector<int> out;
  for (std::size_t k = 0; k < feature_index_.size(); ++k) {
    if (feature_index_[k].empty()) out.push_back(static_cast<int>(k));
  }
  return out;
}

SensorFleet generate_fleet(const FleetConfig& config, RandomSource& rng) {
  const int k = config.state_dim;
  if (k < 1) throw ConfigError("fleet: state dimension must be >= 1");
  if (config.agents < 1) throw ConfigError("fleet: need at least one agent");
  if (config.agents < k) {
    throw ConfigError("fleet: " + std::to_string(config.agents) + " agents cannot cover " +
                      std::to_string(k) + " features");
  }
  if (static_cast<int>(config.noise_variance.size()) != k) {
    throw ConfigError("fleet: one noise-variance range per feature");
  }
  for (const auto& r : config.noise_variance) {
    if (!(r.lo > 0) || !(r.lo <= r.hi)) throw ConfigError("fleet: noise range needs 0 < lo <= hi");
  }
  if (!(config.max_distance > 0) || !(config.tx_power > 0)) {
    throw ConfigError("fleet: max distance and power must be > 0");
  }

  std::vector<SensingAgent> agents;
  agents.reserve(static_cast<std::size_t>(config.agents));
  for (int m = 0; m < config.agents; ++m) {
    const int feature = m % k;
    SensingAgent a;
    a.id = m;
    a.H = Matrix::Zero(1, k);
    a.H(0, feature) = 1.0;
    // 1 - U[0,1) lies in (0, 1], so distances land in (0, d_max].
    a.distance = config.max_distance * (1.0 - rng.uniform());
    const auto& range = config.noise_variance[static_cast<std::size_t>(feature)];
    a.noise_cov = Matrix::Constant(1, 1, rng.uniform(range.lo, range.hi));
    a.tx_power = config.tx_power;
    agents.push_back(std::move(a));
  }
  return SensorFleet(std::move(agents), k);
}

Observation observe(const SensingAgent& agent, const Vector& s, RandomSource& rng, int qi) {
  if (s.size() != agent.H.cols()) throw InputError("observe: state dimension mismatch");
  if (!all_finite(s)) throw InputError("observe: state must be finite");
  Eigen::LLT<Matrix> llt(agent.noise_cov);
  const Matrix factor = llt.info() == Eigen::Success ? Matrix(llt.matrixL()) : psd_factor(agent.noise_cov);
  return Observation{agent.id, agent.H * s + factor * rng.normal_vector(agent.obs_dim()), qi};
}

nlohmann::json fleet_to_json(const SensorFleet& fleet) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : fleet.agents()) {
    nlohmann::json h = nlohmann::json::array();
    for (Eigen::Index r = 0; r < a.H.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < a.H.cols(); ++c) row.push_back(a.H(r, c));
      h.push_back(row);
    }
    nlohmann::json cw = nlohmann::json::array();
    for (Eigen::Index r = 0; r < a.noise_cov.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < a.noise_cov.cols(); ++c) row.push_back(a.noise_cov(r, c));
      cw.push_back(row);
    }
    arr.push_back({{"id", a.id}, {"H", h}, {"noise_cov", cw}, {"distance", a.distance},
                   {"tx_power", a.tx_power}});
  }
  return {{"state_dim", fleet.state_dim()}, {"agents", arr}};
}

namespace {

Matrix matrix_from_json(const nlohmann::json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows[0].size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c) {
      throw ConfigError("fleet json: ragged matrix");
    }
    for (Eigen::Index j = 0; j < c; ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

}  // namespace

SensorFleet fleet_from_json(const nlohmann::json& j) {
  try {
    const int k = j.at("state_dim").get<int>();
    std::vector<SensingAgent> agents;
    for (const auto& e : j.at("agents")) {
      SensingAgent a;
      a.id = e.at("id").get<int>();
      a.H = matrix_from_json(e.at("H"));
      a.noise_cov = matrix_from_json(e.at("noise_cov"));
      a.distance = e.at("distance").get<double>();
      a.tx_power = e.at("tx_power").get<double>();
      agents.push_back(std::move(a));
    }
    return SensorFleet(std::move(agents), k);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("fleet json: ") + e.what());
  }
}

}  // namespace reverb
