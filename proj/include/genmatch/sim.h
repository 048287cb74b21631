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

#ifndef GENMATCH_SIM_H_
#define GENMATCH_SIM_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "genmatch/core.h"
#include "json.hpp"

namespace genmatch {

// Two uniform covariates on (-1, 1)^2, treatment drawn from a logistic
// propensity score rising towards (1, 1), and an outcome that does not
// depend on treatment, so the true ATT is 0.
struct SimSample {
  Sample sample;  // condition 0 is treated ("1"), condition 1 control ("0")
  std::vector<double> outcomes;
};

inline constexpr Condition kSimTreated = 0;

double TreatmentProbability(double x1, double x2);

SimSample GenerateSample(std::size_t n, std::mt19937_64& rng);

// Independent generator for replicate `replicate` of a run seeded `seed`.
std::mt19937_64 ReplicateRng(std::uint64_t seed, std::uint64_t replicate);

enum class SimMethod {
  kUnadjusted,
  kGfm,
  kGfmRefined,  // refined seeds and global residual assignment
  kGreedy1to1,
  kReplacement1to1,
  kGreedy1to2,
  kOracle,
};

std::string_view SimMethodName(SimMethod method);
SimMethod ParseSimMethod(std::string_view name);
// Comma-separated method names.
std::vector<SimMethod> ParseSimMethods(std::string_view list);

struct SimConfig {
  std::size_t n = 1000;
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  std::vector<SimMethod> methods = {SimMethod::kUnadjusted, SimMethod::kGfm};
  Constraints constraints = Constraints::Traditional(2);
  MetricKind metric = MetricKind::kEuclidean;
  unsigned threads = 1;
  bool keep_replicates = false;

  // Throws InvalidInput for n < 4, zero replicates, no methods, a
  // constraint tuple for other than two conditions, or the exhaustive
  // oracle above its size cap.
  void Validate() const;
};

// Per-replicate measures, in column order. Entries a method cannot produce
// (distances for the unadjusted comparison) are NaN.
std::vector<std::string> SimMeasureNames();

struct ReplicateRecord {
  std::size_t replicate = 0;
  SimMethod method = SimMethod::kGfm;
  bool ok = false;
  std::string error;
  std::vector<double> measures;  // aligned with SimMeasureNames()
};

struct MethodSummary {
  SimMethod method = SimMethod::kGfm;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  // Means over successful replicates, aligned with SimMeasureNames(); NaN
  // where the method has no value.
  std::vector<double> means;
  double bias = 0.0;  // mean estimate; the true effect is 0
  double se = 0.0;    // sample standard deviation of the estimates
  double rmse = 0.0;
  double bias_over_rmse = 0.0;  // |bias| / rmse

  std::optional<double> mean(std::string_view measure) const;
};

struct SimReport {
  SimConfig config;
  double mean_treated_share = 0.0;
  std::vector<MethodSummary> methods;
  std::vector<ReplicateRecord> replicates;  // only with keep_replicates

  const MethodSummary& summary(SimMethod method) const;

  // Distances, balance and bias/se/rmse divided by the reference method's
  // values. Group structure and bias/rmse are left as they are.
  SimReport Normalized(SimMethod reference) const;

  std::string ToCsv() const;
  nlohmann::ordered_json ToJson() const;
  std::string ReplicatesCsv() const;
};

// Runs every method on common samples, one independent sample per
// replicate. Output is identical for any thread count.
SimReport RunExperiment(const SimConfig& config);

}  // namespace genmatch

#endif  // GENMATCH_SIM_H_
