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

#include "genmatch/matcher.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "genmatch/digraph.h"
#include "genmatch/evaluate.h"
#include "test_support.h"

namespace genmatch {
namespace {

using ::genmatch::testing::CheckAdmissible;
using ::genmatch::testing::FourPointLine;
using ::genmatch::testing::LineSample;
using ::genmatch::testing::RandomFeasibleConstraints;
using ::genmatch::testing::RandomSample;

Sample FivePointLine() {
  // x = 0, 1, 2, 10, 11; units 0 and 3 treated.
  return LineSample({0, 1, 2, 10, 11}, {0, 1, 1, 0, 1}, 2);
}

bool Intersects(const std::vector<Unit>& a, const std::vector<Unit>& b) {
  for (Unit u : a) {
    if (std::find(b.begin(), b.end(), u) != b.end()) return true;
  }
  return false;
}

void ExpectIndependentAndMaximal(const CompatibleDigraph& g, const SeedSet& seeds) {
  for (std::size_t a = 0; a < seeds.seeds.size(); ++a) {
    EXPECT_EQ(seeds.neighborhoods[a], g.ClosedNeighborhood(seeds.seeds[a]));
    for (std::size_t b = a + 1; b < seeds.seeds.size(); ++b) {
      EXPECT_FALSE(Intersects(seeds.neighborhoods[a], seeds.neighborhoods[b]));
    }
  }
  for (Unit i : g.feasible_sources()) {
    if (std::find(seeds.seeds.begin(), seeds.seeds.end(), i) != seeds.seeds.end()) {
      continue;
    }
    const auto hood = g.ClosedNeighborhood(i);
    bool blocked = false;
    for (const auto& other : seeds.neighborhoods) blocked |= Intersects(hood, other);
    EXPECT_TRUE(blocked) << "source " << i << " could still be added";
  }
}

TEST(FindSeedsTest, FourPointLine) {
  const Sample s = FourPointLine();
  const MetricSpace space(s, Metric::Euclidean());
  const auto g = BuildCompatibleDigraph(space, Constraints::Parse("1,1,2"));
  const SeedSet seeds = FindSeeds(g);
  EXPECT_EQ(seeds.seeds, (std::vector<Unit>{0, 2}));
  EXPECT_EQ(seeds.neighborhoods,
            (std::vector<std::vector<Unit>>{{0, 1}, {2, 3}}));
  EXPECT_EQ(LabelSeedNeighborhoods(g, seeds), (std::vector<GroupId>{0, 0, 1, 1}));
}

TEST(FindSeedsTest, SingleSourceIsTheSeed) {
  const Sample s = FourPointLine();
  const MetricSpace space(s, Metric::Euclidean());
  MatchOptions o;
  o.focus_set = std::vector<Unit>{3};
  const auto g = BuildCompatibleDigraph(space, Constraints::Parse("1,1,2"), o);
  for (bool refined : {false, true}) {
    EXPECT_EQ(FindSeeds(g, refined).seeds, (std::vector<Unit>{3}));
  }
}

TEST(FindSeedsTest, OneNeighborhoodCoveringEverything) {
  const Sample s = LineSample({0, 1, 2}, {0, 0, 0}, 1);
  const MetricSpace space(s, Metric::Euclidean());
  const auto g = BuildCompatibleDigraph(space, Constraints::Parse("0,3"));
  const SeedSet seeds = FindSeeds(g);
  ASSERT_EQ(seeds.seeds.size(), 1u);
  EXPECT_EQ(LabelSeedNeighborhoods(g, seeds), (std::vector<GroupId>{0, 0, 0}));
}

TEST(FindSeedsTest, IndependenceAndMaximalityOnRandomInstances) {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 40; ++rep) {
    const Sample s = RandomSample(rng, 100, 2, 2, {1, 1}, rep % 4 == 0);
    const MetricSpace space(s, Metric::Euclidean());
    const auto g = BuildCompatibleDigraph(space, Constraints::Parse("1,1,2"));
    for (bool refined : {false, true}) {
      const SeedSet seeds = FindSeeds(g, refined);
      ExpectIndependentAndMaximal(g, seeds);
      const auto labels = LabelSeedNeighborhoods(g, seeds);
      std::size_t labeled = 0;
      for (GroupId l : labels) labeled += l != kUnassigned;
      std::size_t expected = 0;
      for (const auto& h : seeds.neighborhoods) expected += h.size();
      EXPECT_EQ(labeled, expected);
    }
  }
}

// Reference for the refined order: conflicts read off the dense product of
// closed-neighborhood incidence matrices.
std::vector<Unit> DenseRefinedSeeds(const CompatibleDigraph& g) {
  const std::size_t n = g.num_units();
  std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));  // A + I
  for (Unit i : g.feasible_sources()) {
    a[i][i] = 1;
    for (Unit t : g.targets(i)) a[i][t] = 1;
  }
  std::vector<std::pair<std::size_t, Unit>> keyed;
  for (Unit i : g.feasible_sources()) {
    std::size_t degree = 0;
    for (Unit j : g.feasible_sources()) {
      if (j == i) continue;
      int product = 0;
      for (std::size_t u = 0; u < n; ++u) product += a[i][u] * a[j][u];
      degree += product > 0;
    }
    keyed.emplace_back(degree, i);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<bool> covered(n, false);
  std::vector<Unit> seeds;
  for (const auto& [degree, i] : keyed) {
    bool free = true;
    for (std::size_t u = 0; u < n; ++u) free &= !(a[i][u] && covered[u]);
    if (!free) continue;
    for (std::size_t u = 0; u < n; ++u) covered[u] = covered[u] || a[i][u];
    seeds.push_back(i);
  }
  return seeds;
}

TEST(FindSeedsTest, RefinedOrderMatchesDenseConflictCounts) {
  std::mt19937_64 rng(67);
  for (int rep = 0; rep < 30; ++rep) {
    const Sample s = RandomSample(rng, 60, 2, 2, {2, 2}, rep % 2 == 0);
    const MetricSpace space(s, Metric::Euclidean());
    const Constraints c = RandomFeasibleConstraints(rng, s, 2, 5);
    const auto g = BuildCompatibleDigraph(space, c);
    EXPECT_EQ(FindSeeds(g, true).seeds, DenseRefinedSeeds(g));
  }
}

TEST(AssignResidualTest, FivePointLineJoinsNearestLabeledTarget) {
  const Sample s = FivePointLine();
  const MetricSpace space(s, Metric::Euclidean());
  const Constraints c = Constraints::Parse("1,1,2");
  const auto g = BuildCompatibleDigraph(space, c);
  const SeedSet seeds = FindSeeds(g);
  EXPECT_EQ(seeds.seeds, (std::vector<Unit>{0, 3}));
  const auto labels = LabelSeedNeighborhoods(g, seeds);
  EXPECT_EQ(labels[2], kUnassigned);
  const Matching m = AssignResidual(g, labels, space, {});
  EXPECT_EQ(m.groups(), (std::vector<std::vector<Unit>>{{0, 1, 2}, {3, 4}}));
  EXPECT_EQ(m, FullMatch(s, Metric::Euclidean(), c));
}

TEST(AssignResidualTest, StepFiveCaliperLeavesUnitUnassigned) {
  const Sample s = FivePointLine();
  const Constraints c = Constraints::Parse("1,1,2");
  for (bool global : {false, true}) {
    MatchOptions o;
    o.global_step5 = global;
    o.use_refined_seeds = global;
    o.caliper_step5 = 0.5;
    const Matching m = FullMatch(s, Metric::Euclidean(), c, o);
    EXPECT_EQ(m.label(2), kUnassigned);
    EXPECT_EQ(m.unassigned(), (std::vector<Unit>{2}));
    // Base mode only looks along unit 2's arcs, where unit 0 sits at 2;
    // global mode finds unit 1 at distance 1.
    o.caliper_step5 = global ? 1.0 : 2.0;
    const Matching wider = FullMatch(s, Metric::Euclidean(), c, o);
    EXPECT_EQ(wider.label(2), wider.label(0));
    EXPECT_TRUE(wider.unassigned().empty());
  }
}

TEST(AssignResidualTest, GlobalStepFiveUsesNearestLabeledUnit) {
  std::mt19937_64 rng(71);
  for (int rep = 0; rep < 20; ++rep) {
    const Sample s = RandomSample(rng, 150, 2, 2, {1, 1});
    const MetricSpace space(s, Metric::Euclidean());
    const auto g = BuildCompatibleDigraph(space, Constraints::Parse("1,1,2"));
    const auto labels = LabelSeedNeighborhoods(g, FindSeeds(g));
    MatchOptions o;
    o.global_step5 = true;
    const Matching m = AssignResidual(g, labels, space, o);
    for (Unit u = 0; u < s.size(); ++u) {
      if (labels[u] != kUnassigned) {
        EXPECT_EQ(m.label(u), labels[u]);
        continue;
      }
      Unit best = u;
      double best_d = 0;
      bool found = false;
      for (Unit v = 0; v < s.size(); ++v) {
        if (labels[v] == kUnassigned) continue;
        const double d = testing::RawDistance(s, u, v);
        if (!found || d < best_d) {
          best = v;
          best_d = d;
          found = true;
        }
      }
      EXPECT_EQ(m.label(u), labels[best]);
    }
  }
}

TEST(FullMatchTest, FourPointLine) {
  const Sample s = FourPointLine();
  const Matching m = FullMatch(s, Metric::Euclidean(), Constraints::Parse("1,1,2"));
  EXPECT_EQ(m.labels().size(), 4u);
  EXPECT_EQ(m.groups(), (std::vector<std::vector<Unit>>{{0, 1}, {2, 3}}));
  const MetricSpace space(s, Metric::Euclidean());
  EXPECT_EQ(EvaluateObjective(m, space, Objective::kMax), 1.0);
}

TEST(FullMatchTest, IdenticalPointsHaveZeroSpread) {
  const Sample s = Sample::FromConditions(std::vector<double>(20, 3.0), 2,
                                          {0, 1, 0, 1, 0, 1, 1, 1, 0, 0}, 2);
  const MetricSpace space(s, Metric::Euclidean());
  for (const char* text : {"1,1,2", "2,1,3", "0,0,4", "1,3,2"}) {
    const Constraints c = Constraints::Parse(text);
    const Matching m = FullMatch(s, Metric::Euclidean(), c);
    EXPECT_TRUE(CheckAdmissible(m, s, c).ok()) << text;
    EXPECT_EQ(EvaluateObjective(m, space, Objective::kMax), 0.0);
  }
}

TEST(FullMatchTest, AdmissibleAndStructuredOnRandomInstances) {
  std::mt19937_64 rng(73);
  for (int rep = 0; rep < 120; ++rep) {
    std::uniform_int_distribution<std::size_t> pick_n(10, 200), pick_k(2, 3);
    const std::size_t k = pick_k(rng);
    const Sample s = RandomSample(rng, pick_n(rng), 2, k,
                                  std::vector<std::size_t>(k, 3), rep % 5 == 0);
    const Constraints c = RandomFeasibleConstraints(rng, s);
    const MetricSpace space(s, Metric::Euclidean());
    for (bool refined : {false, true}) {
      MatchOptions o;
      o.use_refined_seeds = refined;
      o.global_step5 = refined;
      const MatchResult r = FullMatchDetailed(space, c, o);
      const Matching& m = r.matching;
      const auto check = CheckAdmissible(m, s, c);
      ASSERT_TRUE(check.ok()) << "rep " << rep << " constraints " << c.ToString();
      // One seed per group, and each group holds its seed's neighborhood.
      ASSERT_EQ(m.num_groups(), r.seeds.seeds.size());
      for (std::size_t gi = 0; gi < m.num_groups(); ++gi) {
        for (Unit u : r.seeds.neighborhoods[gi]) {
          EXPECT_EQ(m.label(u), static_cast<GroupId>(gi));
        }
      }
      const double lambda = MaxArcWeight(r.digraph);
      EXPECT_LE(EvaluateObjective(m, space, Objective::kMax), 4 * lambda);
      if (refined) continue;
      // Within two undirected arcs of the group's seed.
      for (Unit u = 0; u < s.size(); ++u) {
        const auto& hood = r.seeds.neighborhoods[m.label(u)];
        if (std::find(hood.begin(), hood.end(), u) != hood.end()) continue;
        auto t = r.digraph.targets(u);
        const bool two_hops = std::any_of(t.begin(), t.end(), [&](Unit v) {
          return std::find(hood.begin(), hood.end(), v) != hood.end();
        });
        EXPECT_TRUE(two_hops) << "unit " << u;
      }
    }
  }
}

TEST(FullMatchTest, Deterministic) {
  std::mt19937_64 rng(79);
  const Sample s = RandomSample(rng, 3000, 2, 2, {1, 1});
  const Constraints c = Constraints::Parse("1,1,3");
  MatchOptions threaded;
  threaded.num_threads = 3;
  const Matching a = FullMatch(s, Metric::Euclidean(), c);
  EXPECT_EQ(a, FullMatch(s, Metric::Euclidean(), c));
  EXPECT_EQ(a, FullMatch(s, Metric::Euclidean(), c, threaded));
}

TEST(FullMatchTest, CaliperWithNoSeedIsInfeasible) {
  const Sample s = FourPointLine();
  MatchOptions o;
  o.caliper_gc = 0.1;
  try {
    FullMatch(s, Metric::Euclidean(), Constraints::Parse("1,1,2"), o);
    FAIL() << "expected Infeasible";
  } catch (const Infeasible& e) {
    EXPECT_EQ(e.units(), (std::vector<Unit>{0, 1, 2, 3}));
  }
}

TEST(FullMatchTest, CaliperDropsOutliers) {
  const Sample s = LineSample({0, 1, 10, 11, 30}, {0, 1, 0, 1, 0}, 2);
  MatchOptions o;
  o.caliper_gc = 2.0;
  const Matching m = FullMatch(s, Metric::Euclidean(), Constraints::Parse("1,1,2"), o);
  EXPECT_EQ(m.unassigned(), (std::vector<Unit>{4}));
  o.global_step5 = true;
  o.caliper_step5 = 25.0;
  EXPECT_EQ(FullMatch(s, Metric::Euclidean(), Constraints::Parse("1,1,2"), o).label(4),
            1);
}

TEST(FullMatchTest, FocusSetGuaranteesOnlyFocusUnits) {
  // Treated at 0 and 10; controls at 1, 2, 11, 50.
  const Sample s = LineSample({0, 1, 2, 10, 11, 50}, {0, 1, 1, 0, 1, 1}, 2);
  const Constraints c = Constraints::Parse("1,1,2");
  MatchOptions o;
  o.focus_set = std::vector<Unit>{0, 3};
  const Matching m = FullMatch(s, Metric::Euclidean(), c, o);
  EXPECT_EQ(m.groups(), (std::vector<std::vector<Unit>>{{0, 1}, {3, 4}}));
  EXPECT_EQ(m.unassigned(), (std::vector<Unit>{2, 5}));
  o.global_step5 = true;
  o.caliper_step5 = 5.0;
  const Matching g = FullMatch(s, Metric::Euclidean(), c, o);
  EXPECT_EQ(g.label(2), 0);
  EXPECT_EQ(g.label(5), kUnassigned);
}

TEST(MatchingTest, FromLabelsValidates) {
  EXPECT_THROW(Matching::FromLabels({0, 2}), InvalidInput);
  EXPECT_THROW(Matching::FromLabels({0, -2}), InvalidInput);
  const Matching m = Matching::FromLabels({1, kUnassigned, 0, 1});
  EXPECT_EQ(m.groups(), (std::vector<std::vector<Unit>>{{2}, {0, 3}}));
  EXPECT_EQ(m.unassigned(), (std::vector<Unit>{1}));
}

}  // namespace
}  // namespace genmatch
