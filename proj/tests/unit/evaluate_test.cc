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

#include "genmatch/evaluate.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.h"

namespace genmatch {
namespace {

using ::genmatch::testing::FourPointLine;
using ::genmatch::testing::LineSample;
using ::genmatch::testing::NaiveEvaluate;
using ::genmatch::testing::RandomFeasibleConstraints;
using ::genmatch::testing::RandomSample;

double Sum(const std::vector<double>& w, const Sample& s, Condition c) {
  double total = 0;
  for (Unit u : s.members(c)) total += w[u];
  return total;
}

// Random matching over a two-condition sample in which every group has at
// least one unit of each condition.
Matching RandomMixedMatching(std::mt19937_64& rng, const Sample& s) {
  const auto t = s.members(0);
  const auto c = s.members(1);
  const std::size_t groups = std::min(t.size(), c.size());
  std::vector<GroupId> labels(s.size());
  std::uniform_int_distribution<GroupId> pick(0, static_cast<GroupId>(groups - 1));
  for (std::size_t g = 0; g < groups; ++g) {
    labels[t[g]] = static_cast<GroupId>(g);
    labels[c[g]] = static_cast<GroupId>(g);
  }
  for (std::size_t i = groups; i < t.size(); ++i) labels[t[i]] = pick(rng);
  for (std::size_t i = groups; i < c.size(); ++i) labels[c[i]] = pick(rng);
  return Matching::FromLabels(std::move(labels));
}

TEST(ObjectiveTest, FourPointLine) {
  const Sample s = FourPointLine();
  const MetricSpace space(s, Metric::Euclidean());
  const Matching m = Matching::FromLabels({0, 0, 1, 1});
  EXPECT_EQ(EvaluateObjective(m, space, Objective::kMax), 1.0);
  EXPECT_EQ(EvaluateObjective(m, space, Objective::kMaxTc), 1.0);
  EXPECT_EQ(EvaluateObjective(m, space, Objective::kSumTc), 2.0);
  EXPECT_EQ(EvaluateObjective(m, space, Objective::kMean), 1.0);
  EXPECT_EQ(EvaluateObjective(m, space, Objective::kMeanTc), 1.0);
}

TEST(ObjectiveTest, IdenticalPointsAreZero) {
  const Sample s = LineSample({2, 2, 2, 2, 2}, {0, 1, 0, 1, 1}, 2);
  const MetricSpace space(s, Metric::Euclidean());
  const Matching m = Matching::FromLabels({0, 0, 1, 1, 1});
  for (Objective o : kAllObjectives) EXPECT_EQ(EvaluateObjective(m, space, o), 0.0);
}

TEST(ObjectiveTest, CrossConditionNeedsTwoConditions) {
  const Sample s = LineSample({0, 1, 2}, {0, 1, 2}, 3);
  const MetricSpace space(s, Metric::Euclidean());
  const Matching m = Matching::FromLabels({0, 0, 0});
  EXPECT_THROW(EvaluateObjective(m, space, Objective::kMaxTc), InvalidInput);
  EXPECT_THROW(EvaluateObjective(m, space, Objective::kSumTc), InvalidInput);
  EXPECT_EQ(EvaluateObjective(m, space, Objective::kMax), 2.0);
}

TEST(ObjectiveTest, MatchesNaiveDoubleLoops) {
  std::mt19937_64 rng(83);
  for (int rep = 0; rep < 50; ++rep) {
    const Sample s = RandomSample(rng, 40, 3, 2, {3, 3});
    const MetricSpace space(s, Metric::Euclidean());
    std::vector<GroupId> labels(40);
    std::uniform_int_distribution<GroupId> pick(-1, 6);
    for (auto& l : labels) l = pick(rng);
    for (GroupId g = 0; g <= 6; ++g) labels[g] = g;  // every id used
    const Matching m = Matching::FromLabels(labels);
    const auto naive = NaiveEvaluate(m, s);
    EXPECT_NEAR(EvaluateObjective(m, space, Objective::kMax), naive.lmax, 1e-12);
    EXPECT_NEAR(EvaluateObjective(m, space, Objective::kMaxTc), naive.lmax_tc, 1e-12);
    EXPECT_NEAR(EvaluateObjective(m, space, Objective::kMean), naive.lmean, 1e-12);
    EXPECT_NEAR(EvaluateObjective(m, space, Objective::kMeanTc), naive.lmean_tc,
                1e-12);
    EXPECT_NEAR(EvaluateObjective(m, space, Objective::kSumTc), naive.lsum_tc, 1e-9);
    EXPECT_LE(EvaluateObjective(m, space, Objective::kMaxTc),
              EvaluateObjective(m, space, Objective::kMax));
  }
}

TEST(ObjectiveTest, PairsGiveSumProportionalToMean) {
  std::mt19937_64 rng(89);
  const Sample s = RandomSample(rng, 60, 2, 2, {30, 30});
  const MetricSpace space(s, Metric::Euclidean());
  std::vector<GroupId> labels(60);
  const auto t = s.members(0);
  const auto c = s.members(1);
  for (std::size_t i = 0; i < 30; ++i) {
    labels[t[i]] = static_cast<GroupId>(i);
    labels[c[i]] = static_cast<GroupId>(i);
  }
  const Matching m = Matching::FromLabels(labels);
  EXPECT_NEAR(EvaluateObjective(m, space, Objective::kSumTc),
              30 * EvaluateObjective(m, space, Objective::kMeanTc), 1e-12);
}

TEST(ObjectiveTest, NamesRoundTrip) {
  for (Objective o : kAllObjectives) EXPECT_EQ(ParseObjective(ObjectiveName(o)), o);
  EXPECT_THROW(ParseObjective("lmin"), InvalidInput);
}

TEST(WeightsTest, FormulaInstances) {
  // {T, C} and {T, C, C} with two treated units overall.
  const Sample s = LineSample({0, 1, 2, 3, 4}, {0, 1, 0, 1, 1}, 2);
  const Matching m = Matching::FromLabels({0, 0, 1, 1, 1});
  const auto w = ImpliedWeights(m, s);
  EXPECT_DOUBLE_EQ(w[0], 0.5);
  EXPECT_DOUBLE_EQ(w[1], 0.5);
  EXPECT_DOUBLE_EQ(w[2], 0.5);
  EXPECT_DOUBLE_EQ(w[3], 0.25);
  EXPECT_DOUBLE_EQ(w[4], 0.25);
}

TEST(WeightsTest, GroupWithoutControlsIsAnError) {
  const Sample s = LineSample({0, 1, 2}, {0, 1, 0}, 2);
  EXPECT_THROW(ImpliedWeights(Matching::FromLabels({0, 0, 1}), s), InvalidInput);
  EXPECT_THROW(AttEstimate(Matching::FromLabels({0, 0, 1}), s,
                           std::vector<double>{1, 2, 3}),
               InvalidInput);
}

TEST(WeightsTest, UnassignedUnitsWeighNothing) {
  const Sample s = LineSample({0, 1, 2, 3}, {0, 1, 0, 1}, 2);
  const auto w = ImpliedWeights(Matching::FromLabels({0, 0, kUnassigned, kUnassigned}), s);
  EXPECT_EQ(w, (std::vector<double>{1, 1, 0, 0}));
}

TEST(WeightsTest, BlocksSumToOne) {
  std::mt19937_64 rng(97);
  for (int rep = 0; rep < 50; ++rep) {
    const Sample s = RandomSample(rng, 80, 2, 2, {5, 5});
    const Matching m = RandomMixedMatching(rng, s);
    const auto w = ImpliedWeights(m, s);
    EXPECT_NEAR(Sum(w, s, 0), 1.0, 1e-12);
    EXPECT_NEAR(Sum(w, s, 1), 1.0, 1e-12);
    for (Unit u : s.members(0)) EXPECT_DOUBLE_EQ(w[u], 1.0 / s.members(0).size());
    for (double x : w) EXPECT_GE(x, 0.0);
    const auto uniform = UniformWeights(s);
    EXPECT_NEAR(Sum(uniform, s, 0), 1.0, 1e-12);
    EXPECT_NEAR(Sum(uniform, s, 1), 1.0, 1e-12);
  }
}

TEST(AttTest, SimpleCases) {
  const Sample s = LineSample({0, 1}, {0, 1}, 2);
  const Matching one = Matching::FromLabels({0, 0});
  EXPECT_EQ(AttEstimate(one, s, std::vector<double>{3, 1}), 2.0);
  const Sample big = LineSample({0, 1, 2, 3, 4}, {0, 1, 0, 1, 1}, 2);
  EXPECT_EQ(AttEstimate(Matching::FromLabels({0, 0, 1, 1, 1}), big,
                        std::vector<double>(5, 7.5)),
            0.0);
}

TEST(AttTest, GroupMeanFormEqualsWeightForm) {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> noise(0, 3);
  for (int rep = 0; rep < 100; ++rep) {
    const Sample s = RandomSample(rng, 70, 2, 2, {4, 4});
    const Matching m = RandomMixedMatching(rng, s);
    std::vector<double> y(70);
    for (double& v : y) v = noise(rng);
    const auto w = ImpliedWeights(m, s);
    double weighted = 0;
    for (Unit u = 0; u < s.size(); ++u) {
      weighted += (s.condition(u) == 0 ? 1 : -1) * w[u] * y[u];
    }
    EXPECT_NEAR(AttEstimate(m, s, y), weighted, 1e-12);
  }
}

TEST(GroupStatsTest, Examples) {
  const auto pairs = ComputeGroupStats(Matching::FromLabels({0, 0, 1, 1}));
  EXPECT_EQ(pairs.num_groups, 2u);
  EXPECT_EQ(pairs.mean_size, 2.0);
  EXPECT_EQ(pairs.size_sd, 0.0);
  EXPECT_EQ(pairs.percent_dropped, 0.0);
  // Sizes 3 and 5: population standard deviation is 1.
  const auto uneven = ComputeGroupStats(Matching::FromLabels({0, 0, 0, 1, 1, 1, 1, 1}));
  EXPECT_EQ(uneven.mean_size, 4.0);
  EXPECT_EQ(uneven.size_sd, 1.0);
  const auto dropped = ComputeGroupStats(Matching::FromLabels({0, 0, kUnassigned, 0}));
  EXPECT_EQ(dropped.percent_dropped, 25.0);
}

TEST(BalanceTest, MirroredGroupsBalanceExactly) {
  // Each treated unit shares coordinates with its control partner.
  const Sample s = Sample::FromConditions({0.5, 1, 0.5, 1, -2, 3, -2, 3}, 2,
                                          {0, 1, 0, 1}, 2);
  const auto w = ImpliedWeights(Matching::FromLabels({0, 0, 1, 1}), s);
  EXPECT_EQ(MomentNames(2),
            (std::vector<std::string>{"X1", "X2", "X1^2", "X2^2", "X1*X2"}));
  for (double b : Balance(s, w)) EXPECT_EQ(b, 0.0);
}

TEST(BalanceTest, InvariantToGroupRelabeling) {
  std::mt19937_64 rng(103);
  for (int rep = 0; rep < 20; ++rep) {
    const Sample s = RandomSample(rng, 50, 2, 2, {5, 5});
    const Matching m = RandomMixedMatching(rng, s);
    std::vector<GroupId> perm(m.num_groups());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<GroupId> relabeled(s.size());
    for (Unit u = 0; u < s.size(); ++u) relabeled[u] = perm[m.label(u)];
    const Matching p = Matching::FromLabels(relabeled);
    const auto a = Balance(s, ImpliedWeights(m, s));
    const auto b = Balance(s, ImpliedWeights(p, s));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
  }
}

TEST(BalanceTest, UnadjustedComparesRawMeans) {
  const Sample s = LineSample({1, 3, 10, 20}, {0, 0, 1, 1}, 2);
  const auto b = Balance(s, UniformWeights(s));
  ASSERT_EQ(b.size(), 2u);
  EXPECT_DOUBLE_EQ(b[0], 13.0);            // |2 - 15|
  EXPECT_DOUBLE_EQ(b[1], 250.0 - 5.0);     // |(1+9)/2 - (100+400)/2|
}

TEST(ControlWeightSdTest, PopulationConvention) {
  const Sample s = LineSample({0, 1, 2, 3, 4}, {0, 1, 0, 1, 1}, 2);
  const auto w = ImpliedWeights(Matching::FromLabels({0, 0, 1, 1, 1}), s);
  // Control weights 0.5, 0.25, 0.25.
  const double mean = 1.0 / 3;
  const double var = ((0.5 - mean) * (0.5 - mean) + 2 * (0.25 - mean) * (0.25 - mean)) / 3;
  EXPECT_NEAR(ControlWeightSd(s, w), std::sqrt(var), 1e-15);
}

TEST(ViolationsTest, ReportsGroupsBelowMinima) {
  const Sample s = FourPointLine();
  const auto v = FindConstraintViolations(Matching::FromLabels({0, 1, 0, 1}), s,
                                          Constraints::Parse("1,1,2"));
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].group, 0);
  EXPECT_EQ(v[1].group, 1);
  EXPECT_TRUE(FindConstraintViolations(Matching::FromLabels({0, 0, 1, 1}), s,
                                       Constraints::Parse("1,1,2"))
                  .empty());
}

TEST(ReportTest, JsonCarriesEveryField) {
  const Sample s = FourPointLine();
  const MetricSpace space(s, Metric::Euclidean());
  const Matching m = Matching::FromLabels({0, 0, 1, 1});
  const std::vector<double> y = {3, 1, 5, 4};
  const auto j = ReportToJson(BuildReport(m, space, Constraints::Parse("1,1,2"), 0,
                                          std::span<const double>(y)));
  EXPECT_EQ(j["n"], 4);
  EXPECT_EQ(j["groups"], 2);
  EXPECT_EQ(j["objectives"]["lmax"], 1.0);
  EXPECT_EQ(j["objectives"]["lsum_tc"], 2.0);
  EXPECT_EQ(j["att"], 1.5);
  EXPECT_EQ(j["constraint_violations"], 0);
  EXPECT_TRUE(j.contains("balance"));
  EXPECT_TRUE(j.contains("control_weight_sd"));
}

TEST(ReportTest, ThreeConditionsSkipTreatedControlFields) {
  const Sample s = LineSample({0, 1, 2, 3}, {0, 1, 2, 0}, 3);
  const MetricSpace space(s, Metric::Euclidean());
  const auto r = BuildReport(Matching::FromLabels({0, 0, 0, 0}), space,
                             Constraints::Parse("1,1,1,3"));
  EXPECT_EQ(r.objectives.size(), 2u);  // lmax and lmean
  EXPECT_TRUE(r.weights.empty());
  EXPECT_FALSE(r.att.has_value());
}

}  // namespace
}  // namespace genmatch
