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

#ifndef GENMATCH_CORE_H_
#define GENMATCH_CORE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace genmatch {

// Units and treatment conditions are addressed by zero-based position.
using Unit = std::uint32_t;
using Condition = std::uint32_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad covariates, unknown labels, bad option values.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// The constraints cannot be met, either globally or (under a caliper) for
// the listed units.
class Infeasible : public Error {
 public:
  explicit Infeasible(const std::string& what, std::vector<Unit> units = {})
      : Error(what), units_(std::move(units)) {}

  const std::vector<Unit>& units() const { return units_; }

 private:
  std::vector<Unit> units_;
};

// A validated sample: n units with d finite covariates each and a treatment
// condition in [0, k). Immutable after construction.
class Sample {
 public:
  // `covariates` is row-major n x d. `labels` names each condition; when
  // empty, conditions are named "0".."k-1". Conditions may be empty.
  static Sample FromConditions(std::vector<double> covariates, std::size_t dims,
                               std::vector<Condition> conditions,
                               std::size_t num_conditions,
                               std::vector<std::string> labels = {});

  std::size_t size() const { return conditions_.size(); }
  std::size_t dims() const { return dims_; }
  std::size_t num_conditions() const { return members_.size(); }

  std::span<const double> row(Unit i) const {
    return {covariates_.data() + static_cast<std::size_t>(i) * dims_, dims_};
  }
  std::span<const double> covariates() const { return covariates_; }

  Condition condition(Unit i) const { return conditions_[i]; }
  std::span<const Condition> conditions() const { return conditions_; }

  // w_j: units assigned to condition j, ascending.
  std::span<const Unit> members(Condition j) const { return members_[j]; }

  const std::string& label(Condition j) const { return labels_[j]; }
  const std::vector<std::string>& labels() const { return labels_; }

  // Condition index carrying `label`, if any.
  std::optional<Condition> FindCondition(std::string_view label) const;

  // The raw inputs this sample would be validated from.
  std::vector<std::vector<double>> covariate_rows() const;
  std::vector<std::string> unit_labels() const;

  bool operator==(const Sample&) const = default;

 private:
  Sample() = default;

  std::size_t dims_ = 0;
  std::vector<double> covariates_;
  std::vector<Condition> conditions_;
  std::vector<std::vector<Unit>> members_;
  std::vector<std::string> labels_;
};

// Builds a sample from raw rows and per-unit labels. Conditions are numbered
// in order of first appearance. Throws InvalidInput on an empty or ragged
// table, zero-width rows, a label count mismatch, or a non-finite entry.
Sample ValidateSample(const std::vector<std::vector<double>>& covariates,
                      const std::vector<std::string>& labels);

// Matching constraints (c_1, ..., c_k, t).
struct Constraints {
  std::vector<std::size_t> per_condition;
  std::size_t total = 0;

  std::size_t condition_sum() const;
  // Units needed beyond the per-condition minima: max(0, t - sum c_j).
  std::size_t residual() const;
  // Out-degree of every source in the compatible digraph.
  std::size_t degree() const { return condition_sum() + residual(); }

  // Throws Infeasible when some |w_j| < c_j or n < max(t, sum c_j), and
  // InvalidInput when the tuple length does not match the sample.
  void CheckFeasible(const Sample& sample) const;

  // "c1,...,ck,t"
  static Constraints Parse(std::string_view text);
  // (1, ..., 1, k)
  static Constraints Traditional(std::size_t num_conditions);

  std::string ToString() const;

  bool operator==(const Constraints&) const = default;
};

enum class MetricKind { kEuclidean, kMahalanobis, kScalar };

std::string_view MetricKindName(MetricKind kind);
MetricKind ParseMetricKind(std::string_view name);

// A distance on covariate vectors. Every supported metric is the Euclidean
// distance after a fixed linear map of the covariates (identity, or the
// inverse Cholesky factor of the Mahalanobis scaling), so distances are
// evaluated as |embed(a) - embed(b)| in one place.
class Metric {
 public:
  static Metric Euclidean();
  // `scaling` is a row-major d x d symmetric positive-definite matrix.
  static Metric Mahalanobis(std::span<const double> scaling, std::size_t dims);
  // Scaling estimated as the unbiased sample covariance of `sample`.
  static Metric MahalanobisFromSample(const Sample& sample);
  // Absolute difference on a single covariate; the sample must have d = 1.
  static Metric Scalar();

  // Builds the requested kind; mahalanobis estimates its scaling from sample.
  static Metric ForSample(MetricKind kind, const Sample& sample);

  MetricKind kind() const { return kind_; }

  // Throws InvalidInput when the metric cannot apply to `sample`.
  void CheckCompatible(const Sample& sample) const;

  // Coordinates in which this metric is Euclidean, row-major n x d.
  std::vector<double> Embed(const Sample& sample) const;
  // Maps one covariate row; `out` has the same length as `row`.
  void EmbedRow(std::span<const double> row, std::span<double> out) const;

 private:
  MetricKind kind_ = MetricKind::kEuclidean;
  std::size_t dims_ = 0;
  // Lower-triangular inverse Cholesky factor, row-major (mahalanobis only).
  std::vector<double> whitening_;
};

// A sample viewed through a metric. Holds the embedded coordinates so that
// every distance in the library is computed by the same arithmetic.
class MetricSpace {
 public:
  MetricSpace(const Sample& sample, const Metric& metric);

  const Sample& sample() const { return *sample_; }
  const Metric& metric() const { return metric_; }
  std::size_t size() const { return sample_->size(); }
  std::size_t dims() const { return dims_; }

  std::span<const double> point(Unit i) const {
    return {coords_.data() + static_cast<std::size_t>(i) * dims_, dims_};
  }

  // Squared distance, for ordering only.
  double SquaredDistance(Unit a, Unit b) const {
    const double* pa = coords_.data() + static_cast<std::size_t>(a) * dims_;
    const double* pb = coords_.data() + static_cast<std::size_t>(b) * dims_;
    double sum = 0.0;
    for (std::size_t c = 0; c < dims_; ++c) {
      const double diff = pa[c] - pb[c];
      sum += diff * diff;
    }
    return sum;
  }

  double Distance(Unit a, Unit b) const;

 private:
  const Sample* sample_;
  Metric metric_;
  std::size_t dims_;
  std::vector<double> coords_;
};

// dm(a, b) for a single pair. Bit-identical to MetricSpace::Distance.
double Distance(const Metric& metric, Unit a, Unit b, const Sample& sample);

// Optional refinements of the matching algorithm.
struct MatchOptions {
  // Seeds chosen fewest-conflicts-first instead of by ascending index.
  bool use_refined_seeds = false;
  // Unlabeled units join the globally nearest labeled unit.
  bool global_step5 = false;
  // Maximum arc length in the compatible digraph.
  std::optional<double> caliper_gc;
  // Maximum distance from an unlabeled unit to the unit it joins.
  std::optional<double> caliper_step5;
  // Units guaranteed an assignment; all units when unset. Ascending, unique.
  std::optional<std::vector<Unit>> focus_set;
  // Worker threads for digraph construction; 0 picks hardware concurrency.
  unsigned num_threads = 1;

  // Throws InvalidInput on non-positive calipers or focus units out of range.
  void Validate(std::size_t num_units) const;
};

// Resolves a thread count request: 0 means all hardware threads.
unsigned ResolveThreads(unsigned requested);

}  // namespace genmatch

#endif  // GENMATCH_CORE_H_
