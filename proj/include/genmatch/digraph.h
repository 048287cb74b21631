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

#ifndef GENMATCH_DIGRAPH_H_
#define GENMATCH_DIGRAPH_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "genmatch/core.h"
#include "genmatch/nnsearch.h"

namespace genmatch {

enum class SourceStatus : std::uint8_t {
  kNotSource,   // outside the focus set; no arcs
  kFeasible,    // carries exactly degree() arcs
  kInfeasible,  // could not draw its arcs within the caliper; no arcs
};

// The constraint-compatible nearest-neighbor digraph: for every source, arcs
// to its c_j nearest units of each condition j, then to its r nearest units
// not yet pointed to. Every feasible source's closed neighborhood (itself
// plus its targets) satisfies the constraints.
//
// Arcs live in one flat array of fixed width degree() per unit.
class CompatibleDigraph {
 public:
  std::size_t num_units() const { return status_.size(); }
  std::size_t degree() const { return degree_; }
  const Constraints& constraints() const { return constraints_; }

  SourceStatus status(Unit i) const { return status_[i]; }
  bool has_arcs(Unit i) const { return status_[i] == SourceStatus::kFeasible; }

  // Arc targets of i: condition blocks in condition order, nearest first,
  // then the residual arcs. Empty unless i is a feasible source.
  std::span<const Unit> targets(Unit i) const;
  std::span<const double> arc_distances(Unit i) const;

  // N[i]: i followed by its targets other than i.
  std::vector<Unit> ClosedNeighborhood(Unit i) const;

  std::vector<Unit> feasible_sources() const;
  std::vector<Unit> infeasible_units() const;
  std::size_t num_arcs() const;

  // One "source target distance" line per arc, 1-based units.
  void WriteEdgeList(std::ostream& out) const;

 private:
  friend CompatibleDigraph BuildCompatibleDigraph(const MetricSpace&,
                                                  const Constraints&,
                                                  const MatchOptions&);

  std::size_t degree_ = 0;
  Constraints constraints_;
  std::vector<SourceStatus> status_;
  std::vector<Unit> targets_;
  std::vector<double> distances_;
};

// NN(k, G(sources -> targets)): for each source, its k nearest targets under
// the NnIndex tie rules. Throws Infeasible when k exceeds the target set and
// there is no caliper.
std::vector<std::vector<Neighbor>> NnSubgraph(
    const MetricSpace& space, std::span<const Unit> sources,
    std::span<const Unit> targets, std::size_t k,
    std::optional<double> caliper = std::nullopt);

// Builds the digraph over options.focus_set (all units by default), drawing
// arcs only within options.caliper_gc when set. Throws Infeasible when the
// constraints cannot be met by the sample.
CompatibleDigraph BuildCompatibleDigraph(const MetricSpace& space,
                                         const Constraints& constraints,
                                         const MatchOptions& options = {});

// Longest arc; 0 for a digraph without arcs.
double MaxArcWeight(const CompatibleDigraph& g);
// Longest arc joining units of different conditions; 0 if there is none.
double MaxCrossConditionArcWeight(const CompatibleDigraph& g,
                                  const Sample& sample);

}  // namespace genmatch

#endif  // GENMATCH_DIGRAPH_H_
