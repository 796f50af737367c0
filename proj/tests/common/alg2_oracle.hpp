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

// Step-by-step re-implementation of the sensor-scheduling loop used as a
// test oracle. It shares no code with the library scheduler: covariances
// are updated one scalar sensor at a time with the plain Kalman formula.

#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Sensor {
  int feature;
  double variance;
  double distance;
  bool reachable = true;
};

struct Pick {
  bool aol;
  int feature;
  int agent;
  bool operator==(const Pick&) const = default;
};

inline Eigen::MatrixXd scalar_update(const Eigen::MatrixXd& p, int k, double r) {
  const Eigen::VectorXd col = p.col(k);
  return p - col * col.transpose() / (p(k, k) + r);
}

inline std::vector<Pick> run(const Eigen::MatrixXd& prior, const Eigen::VectorXd& targets,
                             const std::vector<int>& ages, const std::vector<int>& thresholds,
                             const std::vector<Sensor>& sensors, int cap) {
  const int k_dim = static_cast<int>(prior.rows());
  std::vector<bool> used(sensors.size(), false);
  for (std::size_t m = 0; m < sensors.size(); ++m) used[m] = !sensors[m].reachable;
  std::vector<Pick> trace;
  Eigen::MatrixXd p = prior;

  // Overdue features, most overdue first.
  std::vector<int> overdue;
  for (int k = 0; k < k_dim; ++k) {
    if (ages[static_cast<std::size_t>(k)] > thresholds[static_cast<std::size_t>(k)]) overdue.push_back(k);
  }
  std::stable_sort(overdue.begin(), overdue.end(), [&](int a, int b) {
    return ages[a] - thresholds[a] > ages[b] - thresholds[b];
  });
  for (int k : overdue) {
    if (static_cast<int>(trace.size()) >= cap) break;
    int best = -1;
    for (std::size_t m = 0; m < sensors.size(); ++m) {
      if (used[m] || sensors[m].feature != k) continue;
      if (best < 0 || sensors[m].distance < sensors[static_cast<std::size_t>(best)].distance) best = static_cast<int>(m);
    }
    if (best < 0) continue;
    used[static_cast<std::size_t>(best)] = true;
    p = scalar_update(p, k, sensors[static_cast<std::size_t>(best)].variance);
    trace.push_back({true, k, best});
  }

  for (;;) {
    if (static_cast<int>(trace.size()) >= cap) break;
    bool violated = false;
    for (int k = 0; k < k_dim; ++k) violated = violated || p(k, k) > targets(k);
    if (!violated) break;
    int feature = -1;
    double best_ratio = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < k_dim; ++k) {
      bool has = false;
      for (std::size_t m = 0; m < sensors.size(); ++m) has = has || (!used[m] && sensors[m].feature == k);
      if (has && p(k, k) / targets(k) > best_ratio) {
        best_ratio = p(k, k) / targets(k);
        feature = k;
      }
    }
    if (feature < 0) break;
    int agent = -1;
    for (std::size_t m = 0; m < sensors.size(); ++m) {
      if (used[m] || sensors[m].feature != feature) continue;
      if (agent < 0 || sensors[m].variance < sensors[static_cast<std::size_t>(agent)].variance) agent = static_cast<int>(m);
    }
    used[static_cast<std::size_t>(agent)] = true;
    p = scalar_update(p, feature, sensors[static_cast<std::size_t>(agent)].variance);
    trace.push_back({false, feature, agent});
  }
  return trace;
}

}  // namespace oracle
