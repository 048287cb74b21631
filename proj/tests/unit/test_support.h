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

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the search or matching code under test.

#ifndef GENMATCH_TESTS_TEST_SUPPORT_H_
#define GENMATCH_TESTS_TEST_SUPPORT_H_

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "genmatch/core.h"
#include "genmatch/matcher.h"

namespace genmatch::testing {

// Plain Euclidean distance on raw covariates.
inline double RawDistance(const Sample& s, Unit a, Unit b) {
  double sum = 0.0;
  for (std::size_t c = 0; c < s.dims(); ++c) {
    const double diff = s.row(a)[c] - s.row(b)[c];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

// Sample on a line with the given conditions.
inline Sample LineSample(const std::vector<double>& x,
                         const std::vector<Condition>& w, std::size_t k) {
  return Sample::FromConditions(x, 1, w, k);
}

// The four-point line: x = 0, 1, 10, 11 with conditions T, C, T, C.
inline Sample FourPointLine() { return LineSample({0, 1, 10, 11}, {0, 1, 0, 1}, 2); }

// Random sample where condition j has at least `min_per_condition[j]` units.
inline Sample RandomSample(std::mt19937_64& rng, std::size_t n, std::size_t d,
                           std::size_t k,
                           const std::vector<std::size_t>& min_per_condition = {},
                           bool integer_grid = false) {
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 4);
  std::uniform_int_distribution<Condition> cond(0, static_cast<Condition>(k - 1));
  std::vector<double> x(n * d);
  for (double& v : x) v = integer_grid ? grid(rng) : coord(rng);
  std::vector<Condition> w(n);
  std::size_t pos = 0;
  for (std::size_t j = 0; j < min_per_condition.size(); ++j) {
    for (std::size_t c = 0; c < min_per_condition[j] && pos < n; ++c) {
      w[pos++] = static_cast<Condition>(j);
    }
  }
  for (; pos < n; ++pos) w[pos] = cond(rng);
  std::shuffle(w.begin(), w.end(), rng);
  return Sample::FromConditions(std::move(x), d, std::move(w), k);
}

// A random constraint tuple that the sample can satisfy.
inline Constraints RandomFeasibleConstraints(std::mt19937_64& rng,
                                             const Sample& s,
                                             std::size_t max_c = 3,
                                             std::size_t max_t = 8) {
  Constraints c;
  for (Condition j = 0; j < s.num_conditions(); ++j) {
    const std::size_t cap = std::min(max_c, s.members(j).size());
    std::uniform_int_distribution<std::size_t> pick(0, cap);
    c.per_condition.push_back(pick(rng));
  }
  const std::size_t cap = std::min(max_t, s.size());
  std::uniform_int_distribution<std::size_t> pick_t(1, std::max<std::size_t>(cap, 1));
  c.total = pick_t(rng);
  if (c.condition_sum() == 0 && c.total == 0) c.total = 1;
  return c;
}

// k nearest members of `set` to `q` by sorting everything: key is
// (distance, not self, index).
inline std::vector<Unit> BruteKnn(const MetricSpace& space,
                                  const std::vector<Unit>& set, Unit q,
                                  std::size_t k,
                                  std::optional<double> caliper = std::nullopt,
                                  const std::vector<Unit>& excluded = {}) {
  std::vector<std::tuple<double, bool, Unit>> all;
  for (Unit u : set) {
    if (std::find(excluded.begin(), excluded.end(), u) != excluded.end()) continue;
    const double d = space.Distance(q, u);
    if (caliper && d > *caliper) continue;
    all.emplace_back(d, u != q, u);
  }
  std::sort(all.begin(), all.end());
  std::vector<Unit> out;
  for (std::size_t i = 0; i < all.size() && i < k; ++i) {
    out.push_back(std::get<2>(all[i]));
  }
  return out;
}

struct AdmissibilityCheck {
  bool spanning = true;
  bool disjoint = true;
  bool per_condition = true;
  bool total = true;
  bool ok() const { return spanning && disjoint && per_condition && total; }
};

// The four conditions of an admissible generalized full matching, checked
// from the label vector alone.
inline AdmissibilityCheck CheckAdmissible(const Matching& m, const Sample& s,
                                          const Constraints& c) {
  AdmissibilityCheck r;
  std::vector<int> seen(s.size(), 0);
  for (const auto& g : m.groups()) {
    std::vector<std::size_t> counts(s.num_conditions(), 0);
    for (Unit u : g) {
      ++seen[u];
      ++counts[s.condition(u)];
    }
    for (std::size_t j = 0; j < counts.size(); ++j) {
      if (counts[j] < c.per_condition[j]) r.per_condition = false;
    }
    if (g.size() < c.total) r.total = false;
  }
  for (Unit u = 0; u < s.size(); ++u) {
    if (seen[u] == 0 || m.label(u) == kUnassigned) r.spanning = false;
    if (seen[u] > 1) r.disjoint = false;
  }
  return r;
}

// Objectives by direct double loops over raw Euclidean distances.
struct NaiveObjectives {
  double lmax = 0, lmax_tc = 0, lmean = 0, lmean_tc = 0, lsum_tc = 0;
};

inline NaiveObjectives NaiveEvaluate(const Matching& m, const Sample& s,
                                     Condition treated = 0) {
  NaiveObjectives o;
  const double treated_total = static_cast<double>(s.members(treated).size());
  for (const auto& g : m.groups()) {
    double gmax = 0, gmax_tc = 0, sum = 0, sum_tc = 0;
    double pairs = 0, pairs_tc = 0, nt = 0;
    for (Unit a : g) {
      if (s.condition(a) == treated) nt += 1;
      for (Unit b : g) {
        if (b <= a) continue;
        const double d = RawDistance(s, a, b);
        gmax = std::max(gmax, d);
        sum += d;
        pairs += 1;
        if (s.num_conditions() == 2 && s.condition(a) != s.condition(b)) {
          gmax_tc = std::max(gmax_tc, d);
          sum_tc += d;
          pairs_tc += 1;
        }
      }
    }
    o.lmax = std::max(o.lmax, gmax);
    o.lmax_tc = std::max(o.lmax_tc, gmax_tc);
    o.lsum_tc += sum_tc;
    if (treated_total > 0) {
      if (pairs > 0) o.lmean += nt / treated_total * sum / pairs;
      if (pairs_tc > 0) o.lmean_tc += nt / treated_total * sum_tc / pairs_tc;
    }
  }
  return o;
}

}  // namespace genmatch::testing

#endif  // GENMATCH_TESTS_TEST_SUPPORT_H_
