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

namespace reverb {

/// Age-of-Loop per feature, in query intervals.
struct AolTracker {
  std::vector<int> ages;
  std::vector<int> thresholds;

  /// All ages start at `initial_age`; throws InputError on thresholds < 1.
  static AolTracker make(std::vector<int> thresholds, int initial_age = 1);
};

/// Every age grows by one QI.
AolTracker tick(AolTracker tracker);

/// Ages of the listed features drop to 1 (the closing QI counts once).
AolTracker close_loop(AolTracker tracker, std::span<const int> features);

/// Features whose age exceeds the threshold.
std::vector<int> violated(const AolTracker& tracker);

}  // namespace reverb
