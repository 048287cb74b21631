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

#include "genmatch/digraph.h"

#include <algorithm>
#include <exception>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>

namespace genmatch {

std::span<const Unit> CompatibleDigraph::targets(Unit i) const {
  if (!has_arcs(i)) return {};
  return {targets_.data() + static_cast<std::size_t>(i) * degree_, degree_};
}

std::span<const double> CompatibleDigraph::arc_distances(Unit i) const {
  if (!has_arcs(i)) return {};
  return {distances_.data() + static_cast<std::size_t>(i) * degree_, degree_};
}

std::vector<Unit> CompatibleDigraph::ClosedNeighborhood(Unit i) const {
  std::vector<Unit> out{i};
  for (Unit t : targets(i)) {
    if (t != i) out.push_back(t);
  }
  return out;
}

std::vector<Unit> CompatibleDigraph::feasible_sources() const {
  std::vector<Unit> out;
  for (Unit i = 0; i < num_units(); ++i) {
    if (has_arcs(i)) out.push_back(i);
  }
  return out;
}

std::vector<Unit> CompatibleDigraph::infeasible_units() const {
  std::vector<Unit> out;
  for (Unit i = 0; i < num_units(); ++i) {
    if (status_[i] == SourceStatus::kInfeasible) out.push_back(i);
  }
  return out;
}

std::size_t CompatibleDigraph::num_arcs() const {
  return degree_ * static_cast<std::size_t>(std::count(
                       status_.begin(), status_.end(), SourceStatus::kFeasible));
}

void CompatibleDigraph::WriteEdgeList(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  for (Unit i = 0; i < num_units(); ++i) {
    auto t = targets(i);
    auto d = arc_distances(i);
    for (std::size_t a = 0; a < t.size(); ++a) {
      out << (i + 1) << ' ' << (t[a] + 1) << ' ' << d[a] << '\n';
    }
  }
  out.precision(old_precision);
}

std::vector<std::vector<Neighbor>> NnSubgraph(const MetricSpace& space,
                                              std::span<const Unit> sources,
                                              std::span<const Unit> targets,
                                              std::size_t k,
                                              std::optional<double> caliper) {
  NnIndex index(space, std::vector<Unit>(targets.begin(), targets.end()));
  std::vector<std::vector<Neighbor>> arcs;
  arcs.reserve(sources.size());
  for (Unit s : sources) arcs.push_back(index.Knn(s, k, caliper));
  return arcs;
}

namespace {

// Runs body(begin, end) over [0, count) split into contiguous chunks.
template <typename Body>
void ParallelChunks(std::size_t count, unsigned threads, Body body) {
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, std::max<std::size_t>(1, count / 1024)));
  if (threads <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

CompatibleDigraph BuildCompatibleDigraph(const MetricSpace& space,
                                         const Constraints& constraints,
                                         const MatchOptions& options) {
  const Sample& sample = space.sample();
  constraints.CheckFeasible(sample);
  options.Validate(sample.size());

  const std::size_t n = sample.size();
  const std::size_t degree = constraints.degree();
  const std::size_t residual = constraints.residual();

  std::vector<std::unique_ptr<NnIndex>> condition_index(
      sample.num_conditions());
  for (Condition j = 0; j < sample.num_conditions(); ++j) {
    if (constraints.per_condition[j] == 0) continue;
    auto members = sample.members(j);
    condition_index[j] = std::make_unique<NnIndex>(
        space, std::vector<Unit>(members.begin(), members.end()));
  }
  std::unique_ptr<NnIndex> full_index;
  if (residual > 0) {
    std::vector<Unit> all(n);
    std::iota(all.begin(), all.end(), Unit{0});
    full_index = std::make_unique<NnIndex>(space, std::move(all));
  }

  std::vector<Unit> sources;
  if (options.focus_set) {
    sources = *options.focus_set;
  } else {
    sources.resize(n);
    std::iota(sources.begin(), sources.end(), Unit{0});
  }

  // Visit sources in spatial order; neighboring queries then touch the same
  // parts of the trees.
  if (sources.size() > 1) {
    const NnIndex order(space, sources);
    if (order.uses_kdtree()) {
      sources.assign(order.members().begin(), order.members().end());
    }
  }

  CompatibleDigraph g;
  g.degree_ = degree;
  g.constraints_ = constraints;
  g.status_.assign(n, SourceStatus::kNotSource);
  g.targets_.assign(n * degree, 0);
  g.distances_.assign(n * degree, 0.0);

  const auto caliper = options.caliper_gc;
  ParallelChunks(sources.size(), ResolveThreads(options.num_threads),
                 [&](std::size_t begin, std::size_t end) {
    std::vector<Unit> drawn;
    drawn.reserve(degree);
    for (std::size_t s = begin; s < end; ++s) {
      const Unit i = sources[s];
      Unit* row_targets = g.targets_.data() + static_cast<std::size_t>(i) * degree;
      double* row_dist = g.distances_.data() + static_cast<std::size_t>(i) * degree;
      drawn.clear();
      bool feasible = true;
      auto take = [&](const std::vector<Neighbor>& nbs, std::size_t want) {
        if (nbs.size() < want) return false;
        for (const Neighbor& nb : nbs) {
          row_targets[drawn.size()] = nb.unit;
          row_dist[drawn.size()] = nb.distance;
          drawn.push_back(nb.unit);
        }
        return true;
      };
      for (Condition j = 0; feasible && j < sample.num_conditions(); ++j) {
        const std::size_t want = constraints.per_condition[j];
        if (want == 0) continue;
        feasible = take(condition_index[j]->Knn(i, want, caliper), want);
      }
      if (feasible && residual > 0) {
        feasible =
            take(full_index->KnnExcluding(i, residual, drawn, caliper), residual);
      }
      g.status_[i] =
          feasible ? SourceStatus::kFeasible : SourceStatus::kInfeasible;
    }
  });
  return g;
}

double MaxArcWeight(const CompatibleDigraph& g) {
  double best = 0.0;
  for (Unit i = 0; i < g.num_units(); ++i) {
    for (double d : g.arc_distances(i)) best = std::max(best, d);
  }
  return best;
}

double MaxCrossConditionArcWeight(const CompatibleDigraph& g,
                                  const Sample& sample) {
  double best = 0.0;
  for (Unit i = 0; i < g.num_units(); ++i) {
    auto t = g.targets(i);
    auto d = g.arc_distances(i);
    for (std::size_t a = 0; a < t.size(); ++a) {
      if (sample.condition(t[a]) != sample.condition(i)) {
        best = std::max(best, d[a]);
      }
    }
  }
  return best;
}

}  // namespace genmatch
