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

#ifndef GENMATCH_NNSEARCH_H_
#define GENMATCH_NNSEARCH_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "genmatch/core.h"

namespace genmatch {

struct Neighbor {
  Unit unit;
  double distance;

  bool operator==(const Neighbor&) const = default;
};

enum class SearchBackend { kAuto, kKdTree, kLinearScan };

// Exact k-nearest-neighbor search over a fixed subset of a metric space.
//
// Results are ordered by distance; among equal distances the query unit
// itself comes first, then ascending unit index. A caliper drops members
// farther than the caliper, so fewer than k results may come back.
//
// The index keeps a reference to `space`, which must outlive it.
class NnIndex {
 public:
  // kd-tree when the embedded dimension is at most kMaxKdTreeDims, linear
  // scan otherwise. Throws InvalidInput on an empty search set.
  NnIndex(const MetricSpace& space, std::vector<Unit> search_set,
          SearchBackend backend = SearchBackend::kAuto);

  static constexpr std::size_t kMaxKdTreeDims = 10;
  // KnnExcluding switches from the fetch-and-drop rewrite to a filtered
  // search above this many excluded units.
  static constexpr std::size_t kExclusionRewriteLimit = 64;

  std::size_t size() const { return ids_.size(); }
  // Search-set members; in tree order when a kd-tree is used, so that
  // consecutive members are spatially close.
  std::span<const Unit> members() const { return ids_; }
  bool uses_kdtree() const { return !nodes_.empty(); }

  // Throws Infeasible when k exceeds the search set and there is no caliper.
  std::vector<Neighbor> Knn(Unit query, std::size_t k,
                            std::optional<double> caliper = std::nullopt) const;

  // As Knn, skipping members listed in `excluded`. Throws Infeasible when
  // fewer than k members remain and there is no caliper.
  std::vector<Neighbor> KnnExcluding(
      Unit query, std::size_t k, std::span<const Unit> excluded,
      std::optional<double> caliper = std::nullopt) const;

  // Up to k nearest members for which `keep` returns true. Never throws for
  // a short result.
  std::vector<Neighbor> KnnFiltered(
      Unit query, std::size_t k, const std::function<bool(Unit)>& keep,
      std::optional<double> caliper = std::nullopt) const;

 private:
  struct Node {
    std::uint32_t begin;
    std::uint32_t end;
    std::int32_t left;  // -1 for leaves
    std::int32_t right;
  };

  struct Candidate {
    double sq_distance;
    bool not_self;
    Unit unit;

    bool operator<(const Candidate& o) const {
      if (sq_distance != o.sq_distance) return sq_distance < o.sq_distance;
      if (not_self != o.not_self) return !not_self;
      return unit < o.unit;
    }
  };

  class Collector;

  std::int32_t Build(std::uint32_t begin, std::uint32_t end);
  double BoxSqDistance(std::size_t node, std::span<const double> q) const;
  std::vector<Neighbor> Search(Unit query, std::size_t k,
                               std::optional<double> caliper,
                               const std::function<bool(Unit)>* keep) const;

  const MetricSpace* space_;
  std::size_t dims_;
  // Search-set members in tree order, with their coordinates copied alongside.
  std::vector<Unit> ids_;
  std::vector<double> coords_;
  std::vector<Node> nodes_;
  // Per-node bounding boxes, nodes x dims each.
  std::vector<double> box_lo_;
  std::vector<double> box_hi_;
};

}  // namespace genmatch

#endif  // GENMATCH_NNSEARCH_H_
