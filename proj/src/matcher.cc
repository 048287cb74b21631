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
#include <memory>
#include <numeric>

#include "genmatch/nnsearch.h"

namespace genmatch {

Matching Matching::FromLabels(std::vector<GroupId> labels) {
  GroupId max_label = kUnassigned;
  for (GroupId l : labels) {
    if (l < kUnassigned) throw InvalidInput("negative group label");
    max_label = std::max(max_label, l);
  }
  Matching m;
  m.groups_.resize(static_cast<std::size_t>(max_label + 1));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kUnassigned) {
      m.groups_[labels[i]].push_back(static_cast<Unit>(i));
    }
  }
  for (std::size_t g = 0; g < m.groups_.size(); ++g) {
    if (m.groups_[g].empty()) {
      throw InvalidInput("group ids are not contiguous: group " +
                         std::to_string(g + 1) + " is empty");
    }
  }
  m.labels_ = std::move(labels);
  return m;
}

std::vector<Unit> Matching::unassigned() const {
  std::vector<Unit> out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == kUnassigned) out.push_back(static_cast<Unit>(i));
  }
  return out;
}

namespace {

// Visiting order for the refined scan: feasible sources by ascending number
// of other sources whose neighborhoods intersect theirs.
std::vector<Unit> FewestConflictsFirst(const CompatibleDigraph& g) {
  const std::size_t n = g.num_units();
  const std::vector<Unit> sources = g.feasible_sources();

  // containing[u]: sources whose closed neighborhood holds u (CSR layout).
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::vector<Unit>> hoods;
  hoods.reserve(sources.size());
  for (Unit s : sources) {
    hoods.push_back(g.ClosedNeighborhood(s));
    for (Unit u : hoods.back()) ++offsets[u + 1];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<Unit> containing(offsets.back());
  std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
  for (std::size_t idx = 0; idx < sources.size(); ++idx) {
    for (Unit u : hoods[idx]) containing[fill[u]++] = sources[idx];
  }

  std::vector<std::size_t> conflicts(sources.size(), 0);
  std::vector<Unit> stamp(n, static_cast<Unit>(-1));
  for (std::size_t idx = 0; idx < sources.size(); ++idx) {
    const Unit s = sources[idx];
    stamp[s] = s;
    std::size_t count = 0;
    for (Unit u : hoods[idx]) {
      for (std::size_t p = offsets[u]; p < offsets[u + 1]; ++p) {
        const Unit other = containing[p];
        if (stamp[other] != s) {
          stamp[other] = s;
          ++count;
        }
      }
    }
    conflicts[idx] = count;
  }

  std::vector<std::size_t> order(sources.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return conflicts[a] < conflicts[b];
                   });
  std::vector<Unit> out;
  out.reserve(order.size());
  for (std::size_t idx : order) out.push_back(sources[idx]);
  return out;
}

}  // namespace

SeedSet FindSeeds(const CompatibleDigraph& g, bool refined) {
  const std::vector<Unit> order =
      refined ? FewestConflictsFirst(g) : g.feasible_sources();
  std::vector<bool> covered(g.num_units(), false);
  SeedSet out;
  for (Unit i : order) {
    if (covered[i]) continue;
    auto targets = g.targets(i);
    if (std::any_of(targets.begin(), targets.end(),
                    [&](Unit t) { return covered[t]; })) {
      continue;
    }
    std::vector<Unit> hood = g.ClosedNeighborhood(i);
    for (Unit u : hood) covered[u] = true;
    out.seeds.push_back(i);
    out.neighborhoods.push_back(std::move(hood));
  }
  return out;
}

std::vector<GroupId> LabelSeedNeighborhoods(const CompatibleDigraph& g,
                                            const SeedSet& seeds) {
  std::vector<GroupId> labels(g.num_units(), kUnassigned);
  for (std::size_t s = 0; s < seeds.seeds.size(); ++s) {
    for (Unit u : seeds.neighborhoods[s]) {
      labels[u] = static_cast<GroupId>(s);
    }
  }
  return labels;
}

Matching AssignResidual(const CompatibleDigraph& g, std::vector<GroupId> labels,
                        const MetricSpace& space, const MatchOptions& options) {
  const std::size_t n = labels.size();
  const auto caliper = options.caliper_step5;
  const std::vector<GroupId> seeded = labels;

  std::unique_ptr<NnIndex> labeled_index;
  if (options.global_step5) {
    std::vector<Unit> labeled;
    for (Unit u = 0; u < n; ++u) {
      if (seeded[u] != kUnassigned) labeled.push_back(u);
    }
    if (!labeled.empty()) {
      labeled_index = std::make_unique<NnIndex>(space, std::move(labeled));
    }
  }

  for (Unit u = 0; u < n; ++u) {
    if (seeded[u] != kUnassigned) continue;
    if (options.global_step5) {
      if (!labeled_index) continue;
      auto nearest = labeled_index->Knn(u, 1, caliper);
      if (!nearest.empty()) labels[u] = seeded[nearest.front().unit];
      continue;
    }
    auto targets = g.targets(u);
    auto dists = g.arc_distances(u);
    std::size_t best = targets.size();
    for (std::size_t a = 0; a < targets.size(); ++a) {
      if (seeded[targets[a]] == kUnassigned) continue;
      if (caliper && dists[a] > *caliper) continue;
      if (best == targets.size() || dists[a] < dists[best] ||
          (dists[a] == dists[best] && targets[a] < targets[best])) {
        best = a;
      }
    }
    if (best != targets.size()) labels[u] = seeded[targets[best]];
  }
  return Matching::FromLabels(std::move(labels));
}

MatchResult FullMatchDetailed(const MetricSpace& space,
                              const Constraints& constraints,
                              const MatchOptions& options) {
  CompatibleDigraph g = BuildCompatibleDigraph(space, constraints, options);
  SeedSet seeds = FindSeeds(g, options.use_refined_seeds);
  if (seeds.seeds.empty()) {
    std::vector<Unit> dropped = g.infeasible_units();
    std::string message =
        "no unit can anchor a group within the caliper; infeasible units:";
    for (std::size_t i = 0; i < dropped.size() && i < 20; ++i) {
      message += " " + std::to_string(dropped[i] + 1);
    }
    if (dropped.size() > 20) message += " ...";
    throw Infeasible(message, std::move(dropped));
  }
  std::vector<GroupId> labels = LabelSeedNeighborhoods(g, seeds);
  Matching matching = AssignResidual(g, std::move(labels), space, options);
  return MatchResult{std::move(g), std::move(seeds), std::move(matching)};
}

Matching FullMatch(const Sample& sample, const Metric& metric,
                   const Constraints& constraints, const MatchOptions& options) {
  MetricSpace space(sample, metric);
  return FullMatchDetailed(space, constraints, options).matching;
}

}  // namespace genmatch
