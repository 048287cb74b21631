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

#ifndef GENMATCH_MATCHER_H_
#define GENMATCH_MATCHER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "genmatch/core.h"
#include "genmatch/digraph.h"

namespace genmatch {

using GroupId = std::int32_t;
inline constexpr GroupId kUnassigned = -1;

// Disjoint, nonempty matched groups over a sample; some units may be left
// unassigned. Group ids are contiguous from 0.
class Matching {
 public:
  Matching() = default;

  // Throws InvalidInput unless every label is kUnassigned or in [0, G) and
  // every id in [0, G) is used.
  static Matching FromLabels(std::vector<GroupId> labels);

  std::size_t num_units() const { return labels_.size(); }
  std::size_t num_groups() const { return groups_.size(); }
  GroupId label(Unit i) const { return labels_[i]; }
  std::span<const GroupId> labels() const { return labels_; }
  // Members of each group, ascending.
  const std::vector<std::vector<Unit>>& groups() const { return groups_; }
  std::vector<Unit> unassigned() const;

  bool operator==(const Matching&) const = default;

 private:
  std::vector<GroupId> labels_;
  std::vector<std::vector<Unit>> groups_;
};

// Seeds whose closed neighborhoods are pairwise disjoint and such that no
// further feasible source could be added.
struct SeedSet {
  std::vector<Unit> seeds;  // in selection order
  std::vector<std::vector<Unit>> neighborhoods;
};

// Greedy maximal seed selection over the feasible sources of g. The base
// scan visits units by ascending index; the refined scan visits them by
// ascending count of conflicting sources (ties by index).
SeedSet FindSeeds(const CompatibleDigraph& g, bool refined = false);

// Labels each seed's neighborhood with the seed's position in the set.
std::vector<GroupId> LabelSeedNeighborhoods(const CompatibleDigraph& g,
                                            const SeedSet& seeds);

// Assigns every still-unlabeled unit against the seed labeling. By default a
// unit joins the group of its nearest labeled arc target; with
// options.global_step5 it joins the nearest labeled unit overall. Units
// without arcs (outside the focus set or dropped by the digraph caliper) are
// only assigned by the global search. options.caliper_step5 bounds the
// joining distance in both modes. Units left over stay unassigned.
Matching AssignResidual(const CompatibleDigraph& g,
                        std::vector<GroupId> labels, const MetricSpace& space,
                        const MatchOptions& options);

struct MatchResult {
  CompatibleDigraph digraph;
  SeedSet seeds;
  Matching matching;
};

// The full pipeline. Throws Infeasible when the constraints cannot be met,
// or when a caliper leaves no source able to anchor a group (the exception
// then lists the dropped units).
MatchResult FullMatchDetailed(const MetricSpace& space,
                              const Constraints& constraints,
                              const MatchOptions& options = {});

Matching FullMatch(const Sample& sample, const Metric& metric,
                   const Constraints& constraints,
                   const MatchOptions& options = {});

}  // namespace genmatch

#endif  // GENMATCH_MATCHER_H_
