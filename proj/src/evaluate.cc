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

namespace genmatch {
namespace {

void RequireTwoConditions(const Sample& sample, Condition treated,
                          std::string_view what) {
  if (sample.num_conditions() != 2) {
    throw InvalidInput(std::string(what) +
                       " is defined for two conditions; sample has " +
                       std::to_string(sample.num_conditions()));
  }
  if (treated > 1) throw InvalidInput("treated condition out of range");
}

std::size_t AssignedCount(const Matching& matching, const Sample& sample,
                          Condition c) {
  std::size_t count = 0;
  for (Unit u : sample.members(c)) {
    if (matching.label(u) != kUnassigned) ++count;
  }
  return count;
}

}  // namespace

std::string_view ObjectiveName(Objective objective) {
  switch (objective) {
    case Objective::kMax:
      return "lmax";
    case Objective::kMaxTc:
      return "lmax_tc";
    case Objective::kMean:
      return "lmean";
    case Objective::kMeanTc:
      return "lmean_tc";
    case Objective::kSumTc:
      return "lsum_tc";
  }
  return "unknown";
}

Objective ParseObjective(std::string_view name) {
  for (Objective o : kAllObjectives) {
    if (ObjectiveName(o) == name) return o;
  }
  throw InvalidInput("unknown objective '" + std::string(name) + "'");
}

bool IsCrossConditionObjective(Objective objective) {
  return objective == Objective::kMaxTc || objective == Objective::kMeanTc ||
         objective == Objective::kSumTc;
}

double EvaluateObjective(const Matching& matching, const MetricSpace& space,
                         Objective objective, Condition treated) {
  const Sample& sample = space.sample();
  const bool cross = IsCrossConditionObjective(objective);
  if (cross) RequireTwoConditions(sample, treated, ObjectiveName(objective));
  if (treated >= sample.num_conditions()) {
    throw InvalidInput("treated condition out of range");
  }
  const double total_treated =
      static_cast<double>(sample.members(treated).size());

  double result = 0.0;
  for (const auto& group : matching.groups()) {
    double max_d = 0.0;
    double sum_d = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < group.size(); ++a) {
      for (std::size_t b = a + 1; b < group.size(); ++b) {
        if (cross && sample.condition(group[a]) == sample.condition(group[b])) {
          continue;
        }
        const double d = space.Distance(group[a], group[b]);
        max_d = std::max(max_d, d);
        sum_d += d;
        ++pairs;
      }
    }
    switch (objective) {
      case Objective::kMax:
      case Objective::kMaxTc:
        result = std::max(result, max_d);
        break;
      case Objective::kSumTc:
        result += sum_d;
        break;
      case Objective::kMean:
      case Objective::kMeanTc: {
        if (pairs == 0 || total_treated == 0.0) break;
        std::size_t in_group = 0;
        for (Unit u : group) in_group += sample.condition(u) == treated;
        result += (static_cast<double>(in_group) / total_treated) *
                  (sum_d / static_cast<double>(pairs));
        break;
      }
    }
  }
  return result;
}

std::vector<double> ImpliedWeights(const Matching& matching,
                                   const Sample& sample, Condition treated) {
  RequireTwoConditions(sample, treated, "implied weights");
  const std::size_t assigned_treated =
      AssignedCount(matching, sample, treated);
  std::vector<double> weights(sample.size(), 0.0);
  if (assigned_treated == 0) return weights;
  const double total = static_cast<double>(assigned_treated);
  for (std::size_t g = 0; g < matching.num_groups(); ++g) {
    const auto& group = matching.groups()[g];
    std::size_t t = 0;
    for (Unit u : group) t += sample.condition(u) == treated;
    const std::size_t c = group.size() - t;
    if (t > 0 && c == 0) {
      throw InvalidInput("group " + std::to_string(g + 1) +
                         " has treated units but no controls");
    }
    for (Unit u : group) {
      weights[u] = sample.condition(u) == treated
                       ? 1.0 / total
                       : static_cast<double>(t) /
                             (total * static_cast<double>(c));
    }
  }
  return weights;
}

std::vector<double> UniformWeights(const Sample& sample, Condition treated) {
  RequireTwoConditions(sample, treated, "unadjusted weights");
  std::vector<double> weights(sample.size(), 0.0);
  for (Condition c = 0; c < 2; ++c) {
    const auto members = sample.members(c);
    for (Unit u : members) weights[u] = 1.0 / static_cast<double>(members.size());
  }
  return weights;
}

double AttEstimate(const Matching& matching, const Sample& sample,
                   std::span<const double> outcomes, Condition treated) {
  RequireTwoConditions(sample, treated, "the ATT estimator");
  if (outcomes.size() != sample.size()) {
    throw InvalidInput("outcome count does not match sample size");
  }
  const std::size_t assigned_treated =
      AssignedCount(matching, sample, treated);
  if (assigned_treated == 0) throw InvalidInput("no treated unit is assigned");
  double estimate = 0.0;
  for (std::size_t g = 0; g < matching.num_groups(); ++g) {
    double sum_t = 0.0;
    double sum_c = 0.0;
    std::size_t t = 0;
    std::size_t c = 0;
    for (Unit u : matching.groups()[g]) {
      if (!std::isfinite(outcomes[u])) {
        throw InvalidInput("non-finite outcome at unit " + std::to_string(u + 1));
      }
      if (sample.condition(u) == treated) {
        sum_t += outcomes[u];
        ++t;
      } else {
        sum_c += outcomes[u];
        ++c;
      }
    }
    if (t == 0) continue;
    if (c == 0) {
      throw InvalidInput("group " + std::to_string(g + 1) +
                         " has treated units but no controls");
    }
    estimate += (static_cast<double>(t) / static_cast<double>(assigned_treated)) *
                (sum_t / static_cast<double>(t) - sum_c / static_cast<double>(c));
  }
  return estimate;
}

GroupStats ComputeGroupStats(const Matching& matching) {
  GroupStats stats;
  stats.num_groups = matching.num_groups();
  const std::size_t n = matching.num_units();
  if (n > 0) {
    stats.percent_dropped = 100.0 *
                            static_cast<double>(matching.unassigned().size()) /
                            static_cast<double>(n);
  }
  if (stats.num_groups == 0) return stats;
  double sum = 0.0;
  for (const auto& g : matching.groups()) sum += static_cast<double>(g.size());
  stats.mean_size = sum / static_cast<double>(stats.num_groups);
  double ss = 0.0;
  for (const auto& g : matching.groups()) {
    const double dev = static_cast<double>(g.size()) - stats.mean_size;
    ss += dev * dev;
  }
  stats.size_sd = std::sqrt(ss / static_cast<double>(stats.num_groups));
  return stats;
}

double ControlWeightSd(const Sample& sample, std::span<const double> weights,
                       Condition treated) {
  RequireTwoConditions(sample, treated, "control weight spread");
  const auto controls = sample.members(1 - treated);
  if (controls.empty()) return 0.0;
  double mean = 0.0;
  for (Unit u : controls) mean += weights[u];
  mean /= static_cast<double>(controls.size());
  double ss = 0.0;
  for (Unit u : controls) ss += (weights[u] - mean) * (weights[u] - mean);
  return std::sqrt(ss / static_cast<double>(controls.size()));
}

std::vector<std::string> MomentNames(std::size_t dims) {
  std::vector<std::string> names;
  for (std::size_t a = 0; a < dims; ++a) names.push_back("X" + std::to_string(a + 1));
  for (std::size_t a = 0; a < dims; ++a) {
    names.push_back("X" + std::to_string(a + 1) + "^2");
  }
  for (std::size_t a = 0; a < dims; ++a) {
    for (std::size_t b = a + 1; b < dims; ++b) {
      names.push_back("X" + std::to_string(a + 1) + "*X" + std::to_string(b + 1));
    }
  }
  return names;
}

std::vector<double> Balance(const Sample& sample, std::span<const double> weights,
                            Condition treated) {
  RequireTwoConditions(sample, treated, "balance");
  if (weights.size() != sample.size()) {
    throw InvalidInput("weight count does not match sample size");
  }
  const std::size_t d = sample.dims();
  const std::size_t moments = 2 * d + d * (d - 1) / 2;
  std::vector<double> treated_sum(moments, 0.0);
  std::vector<double> control_sum(moments, 0.0);
  std::vector<double> f(moments);
  for (Unit u = 0; u < sample.size(); ++u) {
    if (weights[u] == 0.0) continue;
    auto x = sample.row(u);
    std::size_t m = 0;
    for (std::size_t a = 0; a < d; ++a) f[m++] = x[a];
    for (std::size_t a = 0; a < d; ++a) f[m++] = x[a] * x[a];
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a + 1; b < d; ++b) f[m++] = x[a] * x[b];
    }
    auto& acc = sample.condition(u) == treated ? treated_sum : control_sum;
    for (std::size_t k = 0; k < moments; ++k) acc[k] += weights[u] * f[k];
  }
  std::vector<double> out(moments);
  for (std::size_t k = 0; k < moments; ++k) {
    out[k] = std::abs(treated_sum[k] - control_sum[k]);
  }
  return out;
}

std::vector<ConstraintViolation> FindConstraintViolations(
    const Matching& matching, const Sample& sample,
    const Constraints& constraints) {
  if (constraints.per_condition.size() != sample.num_conditions()) {
    throw InvalidInput("constraint tuple does not match the sample's conditions");
  }
  std::vector<ConstraintViolation> out;
  std::vector<std::size_t> counts(sample.num_conditions());
  for (std::size_t g = 0; g < matching.num_groups(); ++g) {
    const auto& group = matching.groups()[g];
    std::fill(counts.begin(), counts.end(), 0);
    for (Unit u : group) ++counts[sample.condition(u)];
    for (Condition j = 0; j < counts.size(); ++j) {
      if (counts[j] < constraints.per_condition[j]) {
        out.push_back({static_cast<GroupId>(g),
                       "group " + std::to_string(g + 1) + " has " +
                           std::to_string(counts[j]) + " units of '" +
                           sample.label(j) + "', needs " +
                           std::to_string(constraints.per_condition[j])});
      }
    }
    if (group.size() < constraints.total) {
      out.push_back({static_cast<GroupId>(g),
                     "group " + std::to_string(g + 1) + " has " +
                         std::to_string(group.size()) + " units, needs " +
                         std::to_string(constraints.total)});
    }
  }
  return out;
}

MatchReport BuildReport(const Matching& matching, const MetricSpace& space,
                        const Constraints& constraints, Condition treated,
                        std::optional<std::span<const double>> outcomes) {
  const Sample& sample = space.sample();
  MatchReport r;
  r.num_units = sample.size();
  r.condition_labels = sample.labels();
  r.constraints = constraints.ToString();
  r.metric = std::string(MetricKindName(space.metric().kind()));
  r.group_stats = ComputeGroupStats(matching);
  r.constraint_violations =
      FindConstraintViolations(matching, sample, constraints).size();

  const bool two = sample.num_conditions() == 2;
  if (two) r.treated_label = sample.label(treated);
  for (Objective o : kAllObjectives) {
    if (IsCrossConditionObjective(o) && !two) continue;
    r.objectives.push_back({o, EvaluateObjective(matching, space, o, treated)});
  }
  if (!two) return r;

  try {
    r.weights = ImpliedWeights(matching, sample, treated);
  } catch (const InvalidInput&) {
    return r;
  }
  r.weight_sd = ControlWeightSd(sample, r.weights, treated);
  r.balance_moments = MomentNames(sample.dims());
  r.balance = Balance(sample, r.weights, treated);
  if (outcomes) r.att = AttEstimate(matching, sample, *outcomes, treated);
  return r;
}

nlohmann::ordered_json ReportToJson(const MatchReport& report) {
  nlohmann::ordered_json j;
  j["n"] = report.num_units;
  j["conditions"] = report.condition_labels;
  if (report.treated_label) j["treated"] = *report.treated_label;
  j["constraints"] = report.constraints;
  j["metric"] = report.metric;
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  for (const auto& o : report.objectives) {
    obj[std::string(ObjectiveName(o.objective))] = o.value;
  }
  j["objectives"] = obj;
  j["groups"] = report.group_stats.num_groups;
  j["mean_group_size"] = report.group_stats.mean_size;
  j["group_size_sd"] = report.group_stats.size_sd;
  j["percent_dropped"] = report.group_stats.percent_dropped;
  if (report.weight_sd) j["control_weight_sd"] = *report.weight_sd;
  if (!report.balance.empty()) {
    nlohmann::ordered_json bal = nlohmann::ordered_json::object();
    for (std::size_t m = 0; m < report.balance.size(); ++m) {
      bal[report.balance_moments[m]] = report.balance[m];
    }
    j["balance"] = bal;
  }
  if (report.att) j["att"] = *report.att;
  j["constraint_violations"] = report.constraint_violations;
  return j;
}

}  // namespace genmatch
