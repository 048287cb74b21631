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

#ifndef GENMATCH_EVALUATE_H_
#define GENMATCH_EVALUATE_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genmatch/core.h"
#include "genmatch/matcher.h"
#include "json.hpp"

namespace genmatch {

// Aggregates of within-group distances. "tc" variants only look at pairs of
// units in different conditions and need exactly two conditions. The mean
// variants weight each group by its share of the treated units.
enum class Objective { kMax, kMaxTc, kMean, kMeanTc, kSumTc };

inline constexpr Objective kAllObjectives[] = {
    Objective::kMax, Objective::kMaxTc, Objective::kMean, Objective::kMeanTc,
    Objective::kSumTc};

std::string_view ObjectiveName(Objective objective);  // "lmax", "lmax_tc", ...
Objective ParseObjective(std::string_view name);
bool IsCrossConditionObjective(Objective objective);

// Throws InvalidInput for a tc variant on a sample without exactly two
// conditions. Unassigned units are ignored; empty aggregates count as 0.
double EvaluateObjective(const Matching& matching, const MetricSpace& space,
                         Objective objective, Condition treated = 0);

// ATT weights: 1/T for each assigned treated unit, where T is the number of
// assigned treated units, and |w_1 n m| / (T |w_0 n m|) for each control in
// group m. Unassigned units weigh 0. Needs two conditions; throws
// InvalidInput when a group holding treated units has no controls.
std::vector<double> ImpliedWeights(const Matching& matching,
                                   const Sample& sample, Condition treated = 0);

// Weights of the unmatched comparison: 1/|w_1| per treated and 1/|w_0| per
// control unit.
std::vector<double> UniformWeights(const Sample& sample, Condition treated = 0);

// Treated-share-weighted average of within-group treated minus control mean
// outcomes.
double AttEstimate(const Matching& matching, const Sample& sample,
                   std::span<const double> outcomes, Condition treated = 0);

// Sizes use the population standard deviation (divide by group count).
struct GroupStats {
  std::size_t num_groups = 0;
  double mean_size = 0.0;
  double size_sd = 0.0;
  double percent_dropped = 0.0;
};

GroupStats ComputeGroupStats(const Matching& matching);

// Population standard deviation of the control units' weights.
double ControlWeightSd(const Sample& sample, std::span<const double> weights,
                       Condition treated = 0);

// Moment functions: each covariate, each square, then each pairwise product.
std::vector<std::string> MomentNames(std::size_t dims);

// |sum over treated w_i f(x_i) - sum over controls w_i f(x_i)| per moment.
std::vector<double> Balance(const Sample& sample, std::span<const double> weights,
                            Condition treated = 0);

struct ConstraintViolation {
  GroupId group;
  std::string description;
};

// Groups breaking a per-condition or total size minimum.
std::vector<ConstraintViolation> FindConstraintViolations(
    const Matching& matching, const Sample& sample,
    const Constraints& constraints);

struct ObjectiveValue {
  Objective objective;
  double value;
};

struct MatchReport {
  std::size_t num_units = 0;
  std::vector<std::string> condition_labels;
  std::optional<std::string> treated_label;
  std::string constraints;
  std::string metric;
  std::vector<ObjectiveValue> objectives;
  GroupStats group_stats;
  std::vector<double> weights;  // per unit; empty unless two conditions
  std::optional<double> weight_sd;
  std::vector<std::string> balance_moments;
  std::vector<double> balance;
  std::optional<double> att;
  std::size_t constraint_violations = 0;
};

// Everything that can be computed for the matching. Weight, balance and the
// estimate need two conditions with a control in every treated group; they
// are left empty otherwise.
MatchReport BuildReport(const Matching& matching, const MetricSpace& space,
                        const Constraints& constraints, Condition treated = 0,
                        std::optional<std::span<const double>> outcomes = {});

nlohmann::ordered_json ReportToJson(const MatchReport& report);

}  // namespace genmatch

#endif  // GENMATCH_EVALUATE_H_
