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

#include <doctest.h>

#include "reverb/aol.hpp"
#include "reverb/core.hpp"

using namespace reverb;

TEST_CASE("ages grow, reset and flag violations") {
  auto t = AolTracker::make({2, 3});
  CHECK(t.ages == std::vector<int>{1, 1});
  t = tick(tick(t));
  CHECK(t.ages == std::vector<int>{3, 3});
  CHECK(violated(t) == std::vector<int>{0});
  t = close_loop(t, std::vector<int>{0});
  CHECK(t.ages == std::vector<int>{1, 3});
  CHECK(violated(t).empty());
  t = tick(t);
  CHECK(violated(t) == std::vector<int>{1});
}

TEST_CASE("aol input checks") {
  CHECK_THROWS_AS(AolTracker::make({0, 1}), InputError);
  auto t = AolTracker::make({1});
  CHECK_THROWS_AS(close_loop(t, std::vector<int>{2}), InputError);
}
