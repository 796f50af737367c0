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

#include "reverb/aol.hpp"

#include "reverb/core.hpp"

namespace reverb {

AolTracker AolTracker::make(std::vector<int> thresholds, int initial_age) {
  for (int t : thresholds) {
    if (t < 1) throw InputError("aol: thresholds must be >= 1");
  }
  if (initial_age < 0) throw InputError("aol: ages must be >= 0");
  AolTracker tracker;
  tracker.ages.assign(thresholds.size(), initial_age);
  tracker.thresholds = std::move(thresholds);
  return tracker;
}

AolTracker tick(AolTracker tracker) {
  for (int& a : tracker.ages) ++a;
  return tracker;
}

AolTracker close_loop(AolTracker tracker, std::span<const int> features) {
  for (int k : features) {
    if (k < 0 || k >= static_cast<int>(tracker.ages.size())) {
      throw InputError("aol: feature index out of range");
    }
    tracker.ages[static_cast<std::size_t>(k)] = 1;
  }
  return tracker;
}

std::vector<int> violated(const AolTracker& tracker) {
  std::vector<int> out;
  for (std::size_t k = 0; k < tracker.ages.size(); ++k) {
    if (tracker.ages[k] > tracker.thresholds[k]) out.push_back(static_cast<int>(k));
  }
  return out;
}

}  // namespace reverb
