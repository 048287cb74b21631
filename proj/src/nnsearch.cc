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

#include "genmatch/nnsearch.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace genmatch {
namespace {

constexpr std::uint32_t kLeafSize = 8;

}  // namespace

// Bounded max-heap of the best candidates seen so far.
class NnIndex::Collector {
 public:
  Collector(std::size_t k, std::optional<double> caliper)
      : k_(k), caliper_(caliper) {
    heap_.reserve(k);
  }

  bool full() const { return heap_.size() >= k_; }

  // Whether a region whose points are all at squared distance >= bound can
  // still contribute.
  bool Reachable(double bound) const {
    if (caliper_ && std::sqrt(bound) > *caliper_) return false;
    return !full() || bound <= heap_.front().sq_distance;
  }

  void Offer(const Candidate& c) {
    if (caliper_ && std::sqrt(c.sq_distance) > *caliper_) return;
    if (!full()) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  std::vector<Neighbor> Finish() {
    std::sort_heap(heap_.begin(), heap_.end());
    std::vector<Neighbor> out;
    out.reserve(heap_.size());
    for (const auto& c : heap_) {
      out.push_back({c.unit, std::sqrt(c.sq_distance)});
    }
    return out;
  }

 private:
  std::size_t k_;
  std::optional<double> caliper_;
  std::vector<Candidate> heap_;
};

NnIndex::NnIndex(const MetricSpace& space, std::vector<Unit> search_set,
                 SearchBackend backend)
    : space_(&space), dims_(space.dims()), ids_(std::move(search_set)) {
  if (ids_.empty()) throw InvalidInput("nearest-neighbor search set is empty");
  for (Unit u : ids_) {
    if (u >= space.size()) throw InvalidInput("search unit out of range");
  }
  const bool tree = backend == SearchBackend::kKdTree ||
                    (backend == SearchBackend::kAuto && dims_ <= kMaxKdTreeDims);
  if (tree) {
    nodes_.reserve(2 * (ids_.size() / kLeafSize + 1));
    Build(0, static_cast<std::uint32_t>(ids_.size()));
  }
  coords_.resize(ids_.size() * dims_);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    auto p = space.point(ids_[i]);
    std::copy(p.begin(), p.end(), coords_.begin() + i * dims_);
  }
}

std::int32_t NnIndex::Build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1});
  box_lo_.resize(box_lo_.size() + dims_);
  box_hi_.resize(box_hi_.size() + dims_);
  double* lo = box_lo_.data() + id * dims_;
  double* hi = box_hi_.data() + id * dims_;
  for (std::size_t c = 0; c < dims_; ++c) {
    lo[c] = std::numeric_limits<double>::infinity();
    hi[c] = -std::numeric_limits<double>::infinity();
  }
  for (std::uint32_t i = begin; i < end; ++i) {
    auto p = space_->point(ids_[i]);
    for (std::size_t c = 0; c < dims_; ++c) {
      lo[c] = std::min(lo[c], p[c]);
      hi[c] = std::max(hi[c], p[c]);
    }
  }
  if (end - begin <= kLeafSize) return id;

  std::size_t split_dim = 0;
  double widest = -1.0;
  for (std::size_t c = 0; c < dims_; ++c) {
    if (hi[c] - lo[c] > widest) {
      widest = hi[c] - lo[c];
      split_dim = c;
    }
  }
  if (widest <= 0.0) return id;  // all points coincide

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(ids_.begin() + begin, ids_.begin() + mid,
                   ids_.begin() + end, [&](Unit a, Unit b) {
                     const double pa = space_->point(a)[split_dim];
                     const double pb = space_->point(b)[split_dim];
                     return pa != pb ? pa < pb : a < b;
                   });
  const std::int32_t left = Build(begin, mid);
  const std::int32_t right = Build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double NnIndex::BoxSqDistance(std::size_t node,
                              std::span<const double> q) const {
  const double* lo = box_lo_.data() + node * dims_;
  const double* hi = box_hi_.data() + node * dims_;
  double sum = 0.0;
  for (std::size_t c = 0; c < dims_; ++c) {
    double gap = 0.0;
    if (q[c] < lo[c]) {
      gap = lo[c] - q[c];
    } else if (q[c] > hi[c]) {
      gap = q[c] - hi[c];
    }
    sum += gap * gap;
  }
  return sum;
}

std::vector<Neighbor> NnIndex::Search(
    Unit query, std::size_t k, std::optional<double> caliper,
    const std::function<bool(Unit)>* keep) const {
  if (query >= space_->size()) throw InvalidInput("query unit out of range");
  Collector out(k, caliper);
  if (k == 0) return out.Finish();

  const std::span<const double> q = space_->point(query);

  auto scan = [&](std::uint32_t begin, std::uint32_t end) {
    for (std::uint32_t i = begin; i < end; ++i) {
      const Unit u = ids_[i];
      if (keep && !(*keep)(u)) continue;
      const double* p = coords_.data() + static_cast<std::size_t>(i) * dims_;
      double sum = 0.0;
      for (std::size_t c = 0; c < dims_; ++c) {
        const double diff = q[c] - p[c];
        sum += diff * diff;
      }
      out.Offer({sum, u != query, u});
    }
  };

  if (nodes_.empty()) {
    scan(0, static_cast<std::uint32_t>(ids_.size()));
    return out.Finish();
  }

  // Depth-first, nearer child first.
  struct Pending {
    std::int32_t node;
    double bound;
  };
  thread_local std::vector<Pending> stack;
  stack.clear();
  stack.push_back({0, BoxSqDistance(0, q)});
  while (!stack.empty()) {
    const Pending top = stack.back();
    stack.pop_back();
    if (!out.Reachable(top.bound)) continue;
    const Node& node = nodes_[top.node];
    if (node.left < 0) {
      scan(node.begin, node.end);
      continue;
    }
    const double lb = BoxSqDistance(node.left, q);
    const double rb = BoxSqDistance(node.right, q);
    if (lb <= rb) {
      stack.push_back({node.right, rb});
      stack.push_back({node.left, lb});
    } else {
      stack.push_back({node.left, lb});
      stack.push_back({node.right, rb});
    }
  }
  return out.Finish();
}

std::vector<Neighbor> NnIndex::Knn(Unit query, std::size_t k,
                                   std::optional<double> caliper) const {
  if (k == 0) throw InvalidInput("k must be at least 1");
  if (k > size()) {
    if (!caliper) {
      throw Infeasible("requested " + std::to_string(k) +
                       " neighbors from a search set of " +
                       std::to_string(size()));
    }
    k = size();
  }
  return Search(query, k, caliper, nullptr);
}

std::vector<Neighbor> NnIndex::KnnExcluding(
    Unit query, std::size_t k, std::span<const Unit> excluded,
    std::optional<double> caliper) const {
  if (k == 0) throw InvalidInput("k must be at least 1");
  std::vector<Neighbor> result;
  if (excluded.size() <= kExclusionRewriteLimit) {
    // The k nearest non-excluded members are among the k + |excluded|
    // nearest members overall.
    const std::size_t fetch = std::min(size(), k + excluded.size());
    std::vector<Neighbor> all = Search(query, fetch, caliper, nullptr);
    for (const Neighbor& nb : all) {
      if (std::find(excluded.begin(), excluded.end(), nb.unit) !=
          excluded.end()) {
        continue;
      }
      result.push_back(nb);
      if (result.size() == k) break;
    }
  } else {
    std::vector<Unit> sorted(excluded.begin(), excluded.end());
    std::sort(sorted.begin(), sorted.end());
    const std::function<bool(Unit)> keep = [&sorted](Unit u) {
      return !std::binary_search(sorted.begin(), sorted.end(), u);
    };
    result = Search(query, k, caliper, &keep);
  }
  if (result.size() < k && !caliper) {
    throw Infeasible("only " + std::to_string(result.size()) +
                     " non-excluded neighbors available, " + std::to_string(k) +
                     " requested");
  }
  return result;
}

std::vector<Neighbor> NnIndex::KnnFiltered(
    Unit query, std::size_t k, const std::function<bool(Unit)>& keep,
    std::optional<double> caliper) const {
  return Search(query, std::min(k, size()), caliper, &keep);
}

}  // namespace genmatch
