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

#include "genmatch/oracle.h"

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>

#include "genmatch/nnsearch.h"

namespace genmatch {
namespace {

class PartitionSearch {
 public:
  PartitionSearch(const MetricSpace& space, const Constraints& constraints,
                  Objective objective, Condition treated)
      : space_(space),
        sample_(space.sample()),
        constraints_(constraints),
        objective_(objective),
        treated_(treated),
        n_(sample_.size()),
        k_(sample_.num_conditions()),
        cross_(IsCrossConditionObjective(objective)),
        prunable_(objective != Objective::kMean &&
                  objective != Objective::kMeanTc) {
    dist_.resize(n_ * n_);
    for (Unit a = 0; a < n_; ++a) {
      for (Unit b = 0; b < n_; ++b) dist_[a * n_ + b] = space.Distance(a, b);
    }
    // remaining_[u][j]: units of condition j at positions >= u.
    remaining_.assign((n_ + 1) * k_, 0);
    for (std::size_t u = n_; u-- > 0;) {
      for (std::size_t j = 0; j < k_; ++j) {
        remaining_[u * k_ + j] = remaining_[(u + 1) * k_ + j];
      }
      ++remaining_[u * k_ + sample_.condition(static_cast<Unit>(u))];
    }
    labels_.assign(n_, 0);
    counts_.assign(n_ * k_, 0);
    sizes_.assign(n_, 0);
  }

  void Run() { Recurse(0, 0, 0.0); }

  bool found() const { return best_labels_.has_value(); }
  std::uint64_t examined() const { return examined_; }
  const std::vector<GroupId>& best_labels() const { return *best_labels_; }

 private:
  // Lower bound on units still needed to bring every open block up to the
  // minima, per condition and overall.
  bool CanComplete(std::size_t next, std::size_t blocks) const {
    std::size_t total_needed = 0;
    for (std::size_t j = 0; j < k_; ++j) {
      std::size_t needed = 0;
      for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t have = counts_[b * k_ + j];
        if (have < constraints_.per_condition[j]) {
          needed += constraints_.per_condition[j] - have;
        }
      }
      if (needed > remaining_[next * k_ + j]) return false;
    }
    for (std::size_t b = 0; b < blocks; ++b) {
      std::size_t cond_deficit = 0;
      for (std::size_t j = 0; j < k_; ++j) {
        const std::size_t have = counts_[b * k_ + j];
        if (have < constraints_.per_condition[j]) {
          cond_deficit += constraints_.per_condition[j] - have;
        }
      }
      const std::size_t size_deficit =
          sizes_[b] < constraints_.total ? constraints_.total - sizes_[b] : 0;
      total_needed += std::max(cond_deficit, size_deficit);
    }
    return total_needed <= n_ - next;
  }

  // Cost of adding unit u to block b given the units already there.
  double Contribution(Unit u, std::size_t b, std::size_t upto) const {
    double max_d = 0.0;
    double sum_d = 0.0;
    for (Unit v = 0; v < upto; ++v) {
      if (static_cast<std::size_t>(labels_[v]) != b) continue;
      if (cross_ && sample_.condition(u) == sample_.condition(v)) continue;
      const double d = dist_[u * n_ + v];
      max_d = std::max(max_d, d);
      sum_d += d;
    }
    return objective_ == Objective::kSumTc ? sum_d : max_d;
  }

  void Recurse(std::size_t u, std::size_t blocks, double cost) {
    if (prunable_ && best_labels_ && cost >= best_value_) return;
    if (!CanComplete(u, blocks)) return;
    if (u == n_) {
      ++examined_;
      double value = cost;
      if (!prunable_) {
        value = EvaluateObjective(Matching::FromLabels(labels_), space_,
                                  objective_, treated_);
      }
      if (!best_labels_ || value < best_value_) {
        best_value_ = value;
        best_labels_ = labels_;
      }
      return;
    }
    const Unit unit = static_cast<Unit>(u);
    const Condition c = sample_.condition(unit);
    for (std::size_t b = 0; b <= blocks; ++b) {
      double next_cost = cost;
      if (prunable_ && b < blocks) {
        const double add = Contribution(unit, b, unit);
        next_cost = objective_ == Objective::kSumTc ? cost + add
                                                    : std::max(cost, add);
      }
      labels_[u] = static_cast<GroupId>(b);
      ++counts_[b * k_ + c];
      ++sizes_[b];
      Recurse(u + 1, b == blocks ? blocks + 1 : blocks, next_cost);
      --counts_[b * k_ + c];
      --sizes_[b];
    }
    labels_[u] = 0;
  }

  const MetricSpace& space_;
  const Sample& sample_;
  const Constraints& constraints_;
  Objective objective_;
  Condition treated_;
  std::size_t n_;
  std::size_t k_;
  bool cross_;
  bool prunable_;

  std::vector<double> dist_;
  std::vector<std::size_t> remaining_;
  std::vector<GroupId> labels_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> sizes_;

  std::optional<std::vector<GroupId>> best_labels_;
  double best_value_ = std::numeric_limits<double>::infinity();
  std::uint64_t examined_ = 0;
};

}  // namespace

OracleResult OptimalMatchingBruteForce(const MetricSpace& space,
                                       const Constraints& constraints,
                                       Objective objective, Condition treated) {
  const Sample& sample = space.sample();
  if (sample.size() > kOracleMaxUnits) {
    throw InvalidInput("exhaustive search is capped at " +
                       std::to_string(kOracleMaxUnits) + " units; sample has " +
                       std::to_string(sample.size()));
  }
  constraints.CheckFeasible(sample);
  if (IsCrossConditionObjective(objective) && sample.num_conditions() != 2) {
    throw InvalidInput(std::string(ObjectiveName(objective)) +
                       " is defined for two conditions");
  }
  PartitionSearch search(space, constraints, objective, treated);
  search.Run();
  if (!search.found()) throw Infeasible("no admissible partition exists");
  OracleResult result;
  result.matching = Matching::FromLabels(search.best_labels());
  result.value =
      EvaluateObjective(result.matching, space, objective, treated);
  result.partitions_examined = search.examined();
  return result;
}

std::string_view BaselineName(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::kGreedy1to1:
      return "greedy_1to1";
    case BaselineMethod::kReplacement1to1:
      return "replacement_1to1";
    case BaselineMethod::kGreedy1toK:
      return "greedy_1tok";
  }
  return "unknown";
}

Matching BaselineMatch(const MetricSpace& space, BaselineMethod method,
                       Condition treated, std::size_t ratio) {
  const Sample& sample = space.sample();
  if (sample.num_conditions() != 2 || treated > 1) {
    throw InvalidInput("baseline matchers need exactly two conditions");
  }
  const auto treated_units = sample.members(treated);
  const auto control_units = sample.members(1 - treated);
  if (treated_units.empty()) throw Infeasible("sample has no treated units");
  if (control_units.empty()) throw Infeasible("sample has no control units");

  const std::size_t per_treated =
      method == BaselineMethod::kGreedy1toK ? ratio : 1;
  if (per_treated == 0) throw InvalidInput("matching ratio must be at least 1");
  if (method != BaselineMethod::kReplacement1to1 &&
      control_units.size() < per_treated * treated_units.size()) {
    throw Infeasible("greedy 1:" + std::to_string(per_treated) + " matching needs " +
                     std::to_string(per_treated * treated_units.size()) +
                     " controls; sample has " +
                     std::to_string(control_units.size()));
  }

  NnIndex controls(space,
                   std::vector<Unit>(control_units.begin(), control_units.end()));
  std::vector<GroupId> labels(sample.size(), kUnassigned);
  GroupId next = 0;

  if (method == BaselineMethod::kReplacement1to1) {
    for (Unit t : treated_units) {
      const Unit c = controls.Knn(t, 1).front().unit;
      if (labels[c] == kUnassigned) labels[c] = next++;
      labels[t] = labels[c];
    }
    return Matching::FromLabels(std::move(labels));
  }

  std::vector<bool> used(sample.size(), false);
  const std::function<bool(Unit)> unused = [&used](Unit u) { return !used[u]; };
  for (Unit t : treated_units) {
    auto picks = controls.KnnFiltered(t, per_treated, unused);
    labels[t] = next;
    for (const Neighbor& nb : picks) {
      used[nb.unit] = true;
      labels[nb.unit] = next;
    }
    ++next;
  }
  return Matching::FromLabels(std::move(labels));
}

}  // namespace genmatch
