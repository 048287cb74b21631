// Copyright 2026 The genmatch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GENMATCH_ORACLE_H_
#define GENMATCH_ORACLE_H_

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "genmatch/core.h"
#include "genmatch/evaluate.h"
#include "genmatch/matcher.h"

namespace genmatch {

inline constexpr std::size_t kOracleMaxUnits = 13;

struct OracleResult {
  Matching matching;
  double value = 0.0;
  // Admissible partitions reached by the search.
  std::uint64_t partitions_examined = 0;
};

// Exact optimum over all admissible generalized full matchings, found by
// enumerating set partitions as restricted growth strings. Branches that can
// no longer satisfy the size minima are cut, and for the max and sum
// objectives so are branches already no better than the incumbent. Among
// equally good partitions the lexicographically smallest label string wins.
//
// Throws InvalidInput above kOracleMaxUnits units and Infeasible when no
// admissible partition exists.
OracleResult OptimalMatchingBruteForce(const MetricSpace& space,
                                       const Constraints& constraints,
                                       Objective objective,
                                       Condition treated = 0);

enum class BaselineMethod {
  kGreedy1to1,       // each treated, in index order, takes its nearest unused control
  kReplacement1to1,  // each treated takes its nearest control; shared controls merge groups
  kGreedy1toK,       // each treated, in index order, takes its `ratio` nearest unused controls
};

std::string_view BaselineName(BaselineMethod method);

// Comparison matchers for the simulation harness. Needs two conditions;
// throws Infeasible when the greedy variants run out of controls.
Matching BaselineMatch(const MetricSpace& space, BaselineMethod method,
                       Condition treated = 0, std::size_t ratio = 2);

}  // namespace genmatch

#endif  // GENMATCH_ORACLE_H_
