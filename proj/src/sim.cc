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

#include "genmatch/sim.h"

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "genmatch/evaluate.h"
#include "genmatch/matcher.h"
#include "genmatch/oracle.h"

namespace genmatch {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void Add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

enum Measure : std::size_t {
  kLmax,
  kLmaxTc,
  kLmean,
  kLmeanTc,
  kLsumTc,
  kMeanGroupSize,
  kGroupSizeSd,
  kPercentDropped,
  kControlWeightSd,
  kBalanceFirst,  // five balance moments follow
  kEstimate = kBalanceFirst + 5,
  kNumMeasures,
};

std::vector<double> MatchedMeasures(const Matching& matching,
                                    const MetricSpace& space,
                                    const std::vector<double>& outcomes) {
  const Sample& sample = space.sample();
  std::vector<double> m(kNumMeasures, kNaN);
  for (std::size_t o = 0; o < 5; ++o) {
    m[kLmax + o] =
        EvaluateObjective(matching, space, kAllObjectives[o], kSimTreated);
  }
  const GroupStats stats = ComputeGroupStats(matching);
  m[kMeanGroupSize] = stats.mean_size;
  m[kGroupSizeSd] = stats.size_sd;
  m[kPercentDropped] = stats.percent_dropped;
  const std::vector<double> weights =
      ImpliedWeights(matching, sample, kSimTreated);
  m[kControlWeightSd] = ControlWeightSd(sample, weights, kSimTreated);
  const std::vector<double> balance = Balance(sample, weights, kSimTreated);
  std::copy(balance.begin(), balance.end(), m.begin() + kBalanceFirst);
  m[kEstimate] = AttEstimate(matching, sample, outcomes, kSimTreated);
  return m;
}

std::vector<double> RunMethod(SimMethod method, const SimSample& data,
                              const SimConfig& config) {
  const Sample& sample = data.sample;
  const Metric metric = Metric::ForSample(config.metric, sample);
  const MetricSpace space(sample, metric);
  switch (method) {
    case SimMethod::kUnadjusted: {
      std::vector<double> m(kNumMeasures, kNaN);
      const std::vector<double> weights = UniformWeights(sample, kSimTreated);
      m[kControlWeightSd] = ControlWeightSd(sample, weights, kSimTreated);
      const std::vector<double> balance = Balance(sample, weights, kSimTreated);
      std::copy(balance.begin(), balance.end(), m.begin() + kBalanceFirst);
      if (sample.members(kSimTreated).empty() ||
          sample.members(1 - kSimTreated).empty()) {
        throw Infeasible("sample lacks a treated or control unit");
      }
      const Matching everyone =
          Matching::FromLabels(std::vector<GroupId>(sample.size(), 0));
      m[kEstimate] = AttEstimate(everyone, sample, data.outcomes, kSimTreated);
      return m;
    }
    case SimMethod::kGfm:
    case SimMethod::kGfmRefined: {
      MatchOptions options;
      options.use_refined_seeds = method == SimMethod::kGfmRefined;
      options.global_step5 = method == SimMethod::kGfmRefined;
      const Matching matching =
          FullMatchDetailed(space, config.constraints, options).matching;
      return MatchedMeasures(matching, space, data.outcomes);
    }
    case SimMethod::kGreedy1to1:
      return MatchedMeasures(
          BaselineMatch(space, BaselineMethod::kGreedy1to1, kSimTreated), space,
          data.outcomes);
    case SimMethod::kReplacement1to1:
      return MatchedMeasures(
          BaselineMatch(space, BaselineMethod::kReplacement1to1, kSimTreated),
          space, data.outcomes);
    case SimMethod::kGreedy1to2:
      return MatchedMeasures(
          BaselineMatch(space, BaselineMethod::kGreedy1toK, kSimTreated, 2),
          space, data.outcomes);
    case SimMethod::kOracle: {
      const OracleResult best = OptimalMatchingBruteForce(
          space, config.constraints, Objective::kMax, kSimTreated);
      return MatchedMeasures(best.matching, space, data.outcomes);
    }
  }
  throw InvalidInput("unknown method");
}

std::string FormatNumber(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

double TreatmentProbability(double x1, double x2) {
  const double z = ((x1 + 1.0) * (x1 + 1.0) + (x2 + 1.0) * (x2 + 1.0) - 5.0) / 2.0;
  return 1.0 / (1.0 + std::exp(-z));
}

SimSample GenerateSample(std::size_t n, std::mt19937_64& rng) {
  if (n == 0) throw InvalidInput("sample size must be positive");
  std::uniform_real_distribution<double> covariate(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(2 * n);
  std::vector<Condition> w(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = covariate(rng);
    const double x2 = covariate(rng);
    const bool treated = unit(rng) < TreatmentProbability(x1, x2);
    const double eps = noise(rng);
    x[2 * i] = x1;
    x[2 * i + 1] = x2;
    w[i] = treated ? kSimTreated : 1 - kSimTreated;
    y[i] = (x1 - 1.0) * (x1 - 1.0) + (x2 - 1.0) * (x2 - 1.0) + eps;
  }
  return SimSample{
      Sample::FromConditions(std::move(x), 2, std::move(w), 2, {"1", "0"}),
      std::move(y)};
}

std::mt19937_64 ReplicateRng(std::uint64_t seed, std::uint64_t replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate),
                    static_cast<std::uint32_t>(replicate >> 32)};
  return std::mt19937_64(seq);
}

std::string_view SimMethodName(SimMethod method) {
  switch (method) {
    case SimMethod::kUnadjusted:
      return "unadjusted";
    case SimMethod::kGfm:
      return "gfm";
    case SimMethod::kGfmRefined:
      return "gfm_refined";
    case SimMethod::kGreedy1to1:
      return "greedy11";
    case SimMethod::kReplacement1to1:
      return "replacement11";
    case SimMethod::kGreedy1to2:
      return "greedy12";
    case SimMethod::kOracle:
      return "oracle";
  }
  return "unknown";
}

SimMethod ParseSimMethod(std::string_view name) {
  for (SimMethod m :
       {SimMethod::kUnadjusted, SimMethod::kGfm, SimMethod::kGfmRefined,
        SimMethod::kGreedy1to1, SimMethod::kReplacement1to1,
        SimMethod::kGreedy1to2, SimMethod::kOracle}) {
    if (SimMethodName(m) == name) return m;
  }
  throw InvalidInput("unknown method '" + std::string(name) + "'");
}

std::vector<SimMethod> ParseSimMethods(std::string_view list) {
  std::vector<SimMethod> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t end = list.find(',', pos);
    if (end == std::string_view::npos) end = list.size();
    std::string_view name = list.substr(pos, end - pos);
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front()))) {
      name.remove_prefix(1);
    }
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) {
      name.remove_suffix(1);
    }
    out.push_back(ParseSimMethod(name));
    pos = end + 1;
  }
  return out;
}

void SimConfig::Validate() const {
  if (n < 4) throw InvalidInput("simulation needs n >= 4");
  if (replicates == 0) throw InvalidInput("simulation needs at least one replicate");
  if (methods.empty()) throw InvalidInput("no methods selected");
  if (constraints.per_condition.size() != 2) {
    throw InvalidInput("simulated samples have two conditions; constraints need 3 entries");
  }
  for (SimMethod m : methods) {
    if (m == SimMethod::kOracle && n > kOracleMaxUnits) {
      throw InvalidInput("oracle method is capped at n = " +
                         std::to_string(kOracleMaxUnits) + "; requested n = " +
                         std::to_string(n));
    }
  }
}

std::vector<std::string> SimMeasureNames() {
  std::vector<std::string> names = {"lmax",          "lmax_tc",
                                    "lmean",         "lmean_tc",
                                    "lsum_tc",       "mean_group_size",
                                    "group_size_sd", "percent_dropped",
                                    "control_weight_sd"};
  for (const auto& m : MomentNames(2)) names.push_back("balance_" + m);
  names.push_back("estimate");
  return names;
}

std::optional<double> MethodSummary::mean(std::string_view measure) const {
  const auto names = SimMeasureNames();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == measure) {
      if (i >= means.size() || std::isnan(means[i])) return std::nullopt;
      return means[i];
    }
  }
  return std::nullopt;
}

const MethodSummary& SimReport::summary(SimMethod method) const {
  for (const auto& s : methods) {
    if (s.method == method) return s;
  }
  throw InvalidInput("method '" + std::string(SimMethodName(method)) +
                     "' was not run");
}

SimReport SimReport::Normalized(SimMethod reference) const {
  const MethodSummary& ref = summary(reference);
  SimReport out = *this;
  auto ratio = [](double v, double r) { return r == 0.0 ? kNaN : v / r; };
  for (auto& s : out.methods) {
    for (std::size_t i = 0; i < s.means.size(); ++i) {
      const bool scaled = i <= kLsumTc ||
                          (i >= kBalanceFirst && i < kBalanceFirst + 5);
      if (scaled) s.means[i] = ratio(s.means[i], ref.means[i]);
    }
    s.bias = ratio(s.bias, ref.bias);
    s.se = ratio(s.se, ref.se);
    s.rmse = ratio(s.rmse, ref.rmse);
  }
  return out;
}

std::string SimReport::ToCsv() const {
  std::ostringstream out;
  out << "method,succeeded,failed";
  for (const auto& name : SimMeasureNames()) out << ',' << name;
  out << ",bias,se,rmse,bias_over_rmse\n";
  for (const auto& s : methods) {
    out << SimMethodName(s.method) << ',' << s.succeeded << ',' << s.failed;
    for (double v : s.means) out << ',' << FormatNumber(v);
    out << ',' << FormatNumber(s.bias) << ',' << FormatNumber(s.se) << ','
        << FormatNumber(s.rmse) << ',' << FormatNumber(s.bias_over_rmse) << '\n';
  }
  return out.str();
}

nlohmann::ordered_json SimReport::ToJson() const {
  nlohmann::ordered_json j;
  j["n"] = config.n;
  j["replicates"] = config.replicates;
  j["seed"] = config.seed;
  j["constraints"] = config.constraints.ToString();
  j["metric"] = std::string(MetricKindName(config.metric));
  j["mean_treated_share"] = mean_treated_share;
  const auto names = SimMeasureNames();
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& s : methods) {
    nlohmann::ordered_json m;
    m["method"] = std::string(SimMethodName(s.method));
    m["succeeded"] = s.succeeded;
    m["failed"] = s.failed;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (!std::isnan(s.means[i])) m[names[i]] = s.means[i];
    }
    for (auto [key, v] : {std::pair{"bias", s.bias}, std::pair{"se", s.se},
                          std::pair{"rmse", s.rmse},
                          std::pair{"bias_over_rmse", s.bias_over_rmse}}) {
      if (std::isnan(v)) {
        m[key] = nullptr;
      } else {
        m[key] = v;
      }
    }
    list.push_back(std::move(m));
  }
  j["methods"] = std::move(list);
  return j;
}

std::string SimReport::ReplicatesCsv() const {
  std::ostringstream out;
  out << "replicate,method,ok";
  for (const auto& name : SimMeasureNames()) out << ',' << name;
  out << ",error\n";
  for (const auto& r : replicates) {
    out << r.replicate << ',' << SimMethodName(r.method) << ','
        << (r.ok ? 1 : 0);
    for (std::size_t i = 0; i < kNumMeasures; ++i) {
      out << ',' << (i < r.measures.size() ? FormatNumber(r.measures[i]) : "");
    }
    std::string err = r.error;
    for (char& c : err) {
      if (c == ',' || c == '\n') c = ';';
    }
    out << ',' << err << '\n';
  }
  return out.str();
}

SimReport RunExperiment(const SimConfig& config) {
  config.Validate();
  const std::size_t reps = config.replicates;
  const std::size_t num_methods = config.methods.size();

  std::vector<ReplicateRecord> records(reps * num_methods);
  std::vector<double> treated_share(reps, 0.0);

  auto run_replicate = [&](std::size_t rep) {
    std::mt19937_64 rng = ReplicateRng(config.seed, rep);
    const SimSample data = GenerateSample(config.n, rng);
    treated_share[rep] =
        static_cast<double>(data.sample.members(kSimTreated).size()) /
        static_cast<double>(config.n);
    for (std::size_t m = 0; m < num_methods; ++m) {
      ReplicateRecord& rec = records[rep * num_methods + m];
      rec.replicate = rep;
      rec.method = config.methods[m];
      try {
        rec.measures = RunMethod(config.methods[m], data, config);
        rec.ok = true;
      } catch (const Error& e) {
        rec.ok = false;
        rec.error = e.what();
      }
    }
  };

  const unsigned threads = static_cast<unsigned>(
      std::min<std::size_t>(ResolveThreads(config.threads), reps));
  if (threads <= 1) {
    for (std::size_t rep = 0; rep < reps; ++rep) run_replicate(rep);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t rep = next++; rep < reps; rep = next++) {
          run_replicate(rep);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  SimReport report;
  report.config = config;
  CompensatedSum share;
  for (double s : treated_share) share.Add(s);
  report.mean_treated_share = share.value() / static_cast<double>(reps);

  for (std::size_t m = 0; m < num_methods; ++m) {
    MethodSummary s;
    s.method = config.methods[m];
    std::vector<CompensatedSum> sums(kNumMeasures);
    std::vector<std::size_t> counts(kNumMeasures, 0);
    CompensatedSum sq_estimates;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const ReplicateRecord& rec = records[rep * num_methods + m];
      if (!rec.ok) {
        ++s.failed;
        continue;
      }
      ++s.succeeded;
      for (std::size_t i = 0; i < kNumMeasures; ++i) {
        if (std::isnan(rec.measures[i])) continue;
        sums[i].Add(rec.measures[i]);
        ++counts[i];
      }
      sq_estimates.Add(rec.measures[kEstimate] * rec.measures[kEstimate]);
    }
    s.means.assign(kNumMeasures, kNaN);
    for (std::size_t i = 0; i < kNumMeasures; ++i) {
      if (counts[i] > 0) {
        s.means[i] = sums[i].value() / static_cast<double>(counts[i]);
      }
    }
    if (s.succeeded == 0) {
      s.bias = s.se = s.rmse = s.bias_over_rmse = kNaN;
    } else {
      s.bias = s.means[kEstimate];
      CompensatedSum ss;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const ReplicateRecord& rec = records[rep * num_methods + m];
        if (!rec.ok) continue;
        const double dev = rec.measures[kEstimate] - s.bias;
        ss.Add(dev * dev);
      }
      s.se = s.succeeded > 1
                 ? std::sqrt(ss.value() / static_cast<double>(s.succeeded - 1))
                 : 0.0;
      s.rmse = std::sqrt(sq_estimates.value() / static_cast<double>(s.succeeded));
      s.bias_over_rmse = s.rmse > 0.0 ? std::abs(s.bias) / s.rmse : 0.0;
    }
    report.methods.push_back(std::move(s));
  }
  if (config.keep_replicates) report.replicates = std::move(records);
  return report;
}

}  // namespace genmatch
