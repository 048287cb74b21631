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

#include "genmatch/core.h"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace genmatch {

Sample Sample::FromConditions(std::vector<double> covariates, std::size_t dims,
                              std::vector<Condition> conditions,
                              std::size_t num_conditions,
                              std::vector<std::string> labels) {
  if (conditions.empty()) throw InvalidInput("sample has no units");
  if (dims == 0) throw InvalidInput("sample has no covariates");
  if (num_conditions == 0) throw InvalidInput("sample has no conditions");
  if (covariates.size() != conditions.size() * dims) {
    throw InvalidInput("covariate table is not n x d");
  }
  for (std::size_t i = 0; i < covariates.size(); ++i) {
    if (!std::isfinite(covariates[i])) {
      throw InvalidInput("non-finite covariate at unit " +
                         std::to_string(i / dims + 1) + ", column " +
                         std::to_string(i % dims + 1));
    }
  }
  if (labels.empty()) {
    for (std::size_t j = 0; j < num_conditions; ++j) {
      labels.push_back(std::to_string(j));
    }
  }
  if (labels.size() != num_conditions) {
    throw InvalidInput("condition label count does not match k");
  }

  Sample s;
  s.dims_ = dims;
  s.covariates_ = std::move(covariates);
  s.members_.resize(num_conditions);
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    if (conditions[i] >= num_conditions) {
      throw InvalidInput("condition out of range at unit " +
                         std::to_string(i + 1));
    }
    s.members_[conditions[i]].push_back(static_cast<Unit>(i));
  }
  s.conditions_ = std::move(conditions);
  s.labels_ = std::move(labels);
  return s;
}

std::optional<Condition> Sample::FindCondition(std::string_view label) const {
  for (std::size_t j = 0; j < labels_.size(); ++j) {
    if (labels_[j] == label) return static_cast<Condition>(j);
  }
  return std::nullopt;
}

std::vector<std::vector<double>> Sample::covariate_rows() const {
  std::vector<std::vector<double>> rows;
  rows.reserve(size());
  for (Unit i = 0; i < size(); ++i) {
    auto r = row(i);
    rows.emplace_back(r.begin(), r.end());
  }
  return rows;
}

std::vector<std::string> Sample::unit_labels() const {
  std::vector<std::string> out;
  out.reserve(size());
  for (Condition c : conditions_) out.push_back(labels_[c]);
  return out;
}

Sample ValidateSample(const std::vector<std::vector<double>>& covariates,
                      const std::vector<std::string>& labels) {
  if (covariates.empty()) throw InvalidInput("sample has no units");
  if (labels.size() != covariates.size()) {
    throw InvalidInput("treatment label count does not match row count");
  }
  const std::size_t dims = covariates.front().size();
  std::vector<double> flat;
  flat.reserve(covariates.size() * dims);
  for (std::size_t i = 0; i < covariates.size(); ++i) {
    if (covariates[i].size() != dims) {
      throw InvalidInput("ragged covariate table at row " +
                         std::to_string(i + 1));
    }
    flat.insert(flat.end(), covariates[i].begin(), covariates[i].end());
  }

  std::unordered_map<std::string, Condition> index;
  std::vector<std::string> names;
  std::vector<Condition> conditions;
  conditions.reserve(labels.size());
  for (const auto& label : labels) {
    auto [it, inserted] =
        index.try_emplace(label, static_cast<Condition>(names.size()));
    if (inserted) names.push_back(label);
    conditions.push_back(it->second);
  }
  const std::size_t k = names.size();
  return Sample::FromConditions(std::move(flat), dims, std::move(conditions), k,
                                std::move(names));
}

std::size_t Constraints::condition_sum() const {
  return std::accumulate(per_condition.begin(), per_condition.end(),
                         std::size_t{0});
}

std::size_t Constraints::residual() const {
  const std::size_t sum = condition_sum();
  return total > sum ? total - sum : 0;
}

void Constraints::CheckFeasible(const Sample& sample) const {
  if (per_condition.size() != sample.num_conditions()) {
    throw InvalidInput("constraint tuple has " +
                       std::to_string(per_condition.size() + 1) +
                       " entries; expected k + 1 = " +
                       std::to_string(sample.num_conditions() + 1));
  }
  for (std::size_t j = 0; j < per_condition.size(); ++j) {
    if (sample.members(static_cast<Condition>(j)).size() < per_condition[j]) {
      throw Infeasible("condition '" + sample.label(static_cast<Condition>(j)) +
                       "' has " +
                       std::to_string(sample.members(static_cast<Condition>(j)).size()) +
                       " units but each group needs " +
                       std::to_string(per_condition[j]));
    }
  }
  if (sample.size() < std::max(total, condition_sum())) {
    throw Infeasible("sample has " + std::to_string(sample.size()) +
                     " units but each group needs " +
                     std::to_string(std::max(total, condition_sum())));
  }
}

Constraints Constraints::Parse(std::string_view text) {
  std::vector<std::size_t> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view token = text.substr(pos, end - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    std::size_t value = 0;
    auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() ||
        ptr != token.data() + token.size()) {
      throw InvalidInput("bad constraint entry '" + std::string(token) + "'");
    }
    values.push_back(value);
    pos = end + 1;
  }
  if (values.size() < 2) {
    throw InvalidInput("constraints need at least c_1 and t");
  }
  Constraints c;
  c.total = values.back();
  values.pop_back();
  c.per_condition = std::move(values);
  return c;
}

Constraints Constraints::Traditional(std::size_t num_conditions) {
  return Constraints{std::vector<std::size_t>(num_conditions, 1),
                     num_conditions};
}

std::string Constraints::ToString() const {
  std::ostringstream out;
  for (std::size_t c : per_condition) out << c << ',';
  out << total;
  return out.str();
}

std::string_view MetricKindName(MetricKind kind) {
  switch (kind) {
    case MetricKind::kEuclidean:
      return "euclidean";
    case MetricKind::kMahalanobis:
      return "mahalanobis";
    case MetricKind::kScalar:
      return "scalar";
  }
  return "unknown";
}

MetricKind ParseMetricKind(std::string_view name) {
  if (name == "euclidean") return MetricKind::kEuclidean;
  if (name == "mahalanobis") return MetricKind::kMahalanobis;
  if (name == "scalar") return MetricKind::kScalar;
  throw InvalidInput("unknown metric '" + std::string(name) + "'");
}

Metric Metric::Euclidean() { return Metric(); }

Metric Metric::Scalar() {
  Metric m;
  m.kind_ = MetricKind::kScalar;
  m.dims_ = 1;
  return m;
}

Metric Metric::Mahalanobis(std::span<const double> scaling, std::size_t dims) {
  if (dims == 0 || scaling.size() != dims * dims) {
    throw InvalidInput("mahalanobis scaling must be d x d");
  }
  using RowMatrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMatrix> s(scaling.data(), dims, dims);
  if (!s.allFinite() || !s.isApprox(s.transpose(), 1e-12)) {
    throw InvalidInput("mahalanobis scaling must be finite and symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput("mahalanobis scaling is not positive definite");
  }
  Eigen::MatrixXd lower = llt.matrixL();
  Eigen::MatrixXd inverse = lower.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(dims, dims));

  Metric m;
  m.kind_ = MetricKind::kMahalanobis;
  m.dims_ = dims;
  m.whitening_.resize(dims * dims);
  for (std::size_t r = 0; r < dims; ++r) {
    for (std::size_t c = 0; c < dims; ++c) {
      m.whitening_[r * dims + c] = c <= r ? inverse(r, c) : 0.0;
    }
  }
  return m;
}

Metric Metric::MahalanobisFromSample(const Sample& sample) {
  const std::size_t n = sample.size();
  const std::size_t d = sample.dims();
  if (n < 2) {
    throw InvalidInput("covariance estimation needs at least two units");
  }
  std::vector<double> mean(d, 0.0);
  for (Unit i = 0; i < n; ++i) {
    auto r = sample.row(i);
    for (std::size_t c = 0; c < d; ++c) mean[c] += r[c];
  }
  for (double& v : mean) v /= static_cast<double>(n);
  std::vector<double> cov(d * d, 0.0);
  for (Unit i = 0; i < n; ++i) {
    auto r = sample.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        cov[a * d + b] += (r[a] - mean[a]) * (r[b] - mean[b]);
      }
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      cov[a * d + b] /= static_cast<double>(n - 1);
      cov[b * d + a] = cov[a * d + b];
    }
  }
  return Mahalanobis(cov, d);
}

Metric Metric::ForSample(MetricKind kind, const Sample& sample) {
  switch (kind) {
    case MetricKind::kEuclidean:
      return Euclidean();
    case MetricKind::kMahalanobis:
      return MahalanobisFromSample(sample);
    case MetricKind::kScalar:
      return Scalar();
  }
  throw InvalidInput("unknown metric kind");
}

void Metric::CheckCompatible(const Sample& sample) const {
  if (kind_ == MetricKind::kEuclidean) return;
  if (sample.dims() != dims_) {
    throw InvalidInput(std::string(MetricKindName(kind_)) + " metric expects " +
                       std::to_string(dims_) + " covariate(s), sample has " +
                       std::to_string(sample.dims()));
  }
}

std::vector<double> Metric::Embed(const Sample& sample) const {
  CheckCompatible(sample);
  auto raw = sample.covariates();
  if (kind_ != MetricKind::kMahalanobis) {
    return std::vector<double>(raw.begin(), raw.end());
  }
  const std::size_t d = sample.dims();
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    EmbedRow(raw.subspan(i * d, d), std::span<double>(out).subspan(i * d, d));
  }
  return out;
}

void Metric::EmbedRow(std::span<const double> row, std::span<double> out) const {
  if (kind_ != MetricKind::kMahalanobis) {
    std::copy(row.begin(), row.end(), out.begin());
    return;
  }
  const std::size_t d = dims_;
  for (std::size_t r = 0; r < d; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c <= r; ++c) sum += whitening_[r * d + c] * row[c];
    out[r] = sum;
  }
}

MetricSpace::MetricSpace(const Sample& sample, const Metric& metric)
    : sample_(&sample),
      metric_(metric),
      dims_(sample.dims()),
      coords_(metric.Embed(sample)) {}

double MetricSpace::Distance(Unit a, Unit b) const {
  return std::sqrt(SquaredDistance(a, b));
}

double Distance(const Metric& metric, Unit a, Unit b, const Sample& sample) {
  if (a >= sample.size() || b >= sample.size()) {
    throw InvalidInput("unit index out of range");
  }
  metric.CheckCompatible(sample);
  const std::size_t d = sample.dims();
  std::vector<double> ea(d), eb(d);
  metric.EmbedRow(sample.row(a), ea);
  metric.EmbedRow(sample.row(b), eb);
  // Same summation order as MetricSpace::SquaredDistance.
  double sum = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double diff = ea[c] - eb[c];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

void MatchOptions::Validate(std::size_t num_units) const {
  auto check_caliper = [](const std::optional<double>& c, const char* name) {
    if (c && !(*c > 0.0 && std::isfinite(*c))) {
      throw InvalidInput(std::string(name) + " must be a positive real");
    }
  };
  check_caliper(caliper_gc, "caliper_gc");
  check_caliper(caliper_step5, "caliper_step5");
  if (focus_set) {
    for (std::size_t i = 0; i < focus_set->size(); ++i) {
      if ((*focus_set)[i] >= num_units) {
        throw InvalidInput("focus unit out of range");
      }
      if (i > 0 && (*focus_set)[i] <= (*focus_set)[i - 1]) {
        throw InvalidInput("focus set must be ascending and unique");
      }
    }
  }
}

unsigned ResolveThreads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace genmatch
