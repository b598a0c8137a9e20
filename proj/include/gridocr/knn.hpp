#pragma once

// Exact k-nearest-neighbour search: a median-split kd-tree with branch-and-bound
// queries, an exhaustive scan with the same ordering, and the majority vote.
//
// Neighbours are ordered by (squared Euclidean distance, point id). Both search
// routes compute distances with the same accumulation order, so their results are
// bit-identical, ties included.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridocr {

class KnnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledPoint {
  std::vector<double> vector;
  int label = 0;
  std::size_t id = 0;  // insertion ordinal; breaks distance ties

  friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

struct Neighbor {
  std::size_t id = 0;
  int label = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Ascending by distance, then id; length min(k, N).
using NeighborSet = std::vector<Neighbor>;

struct QueryStats {
  std::size_t distance_evaluations = 0;
  std::size_t nodes_visited = 0;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

namespace detail {

struct Candidate {
  double sq_distance;
  std::size_t id;
  int label;

  bool operator<(const Candidate& o) const noexcept {
    return sq_distance < o.sq_distance || (sq_distance == o.sq_distance && id < o.id);
  }
};

// Max-heap of the k best candidates seen so far.
class BoundedHeap {
 public:
  explicit BoundedHeap(std::size_t k) : k_(k) {}

  bool full() const noexcept { return heap_.size() >= k_; }
  double worst_sq_distance() const noexcept { return heap_.top().sq_distance; }

  void offer(const Candidate& c) {
    if (!full()) {
      heap_.push(c);
    } else if (c < heap_.top()) {
      heap_.pop();
      heap_.push(c);
    }
  }

  NeighborSet drain() {
    std::vector<Candidate> sorted;
    sorted.reserve(heap_.size());
    while (!heap_.empty()) {
      sorted.push_back(heap_.top());
      heap_.pop();
    }
    std::reverse(sorted.begin(), sorted.end());
    NeighborSet out;
    out.reserve(sorted.size());
    for (const auto& c : sorted) out.push_back({c.id, c.label, std::sqrt(c.sq_distance)});
    return out;
  }

 private:
  std::size_t k_;
  std::priority_queue<Candidate> heap_;
};

inline void check_query(std::size_t dims, std::size_t query_dims, std::size_t k) {
  if (query_dims != dims)
    throw KnnError("query dimension mismatch: expected " + std::to_string(dims) + ", got " +
                   std::to_string(query_dims));
  if (k == 0) throw KnnError("k must be at least 1");
}

}  // namespace detail

// Exhaustive kNN over every point.
inline NeighborSet linear_scan(std::span<const LabeledPoint> points, std::span<const double> query, std::size_t k,
                               QueryStats* stats = nullptr) {
  if (points.empty()) throw KnnError("linear_scan: no points");
  detail::check_query(points.front().vector.size(), query.size(), k);
  detail::BoundedHeap best(k);
  for (const auto& p : points) {
    if (p.vector.size() != query.size()) throw KnnError("linear_scan: mixed dimensionality");
    best.offer({squared_distance(p.vector, query), p.id, p.label});
  }
  if (stats) stats->distance_evaluations += points.size();
  return best.drain();
}

// Balanced kd-tree: split dimension cycles with depth, pivot is the lower median
// under (coordinate, id). Left subtree coordinates <= split value <= right subtree.
class KdTree {
 public:
  struct Node {
    std::size_t point = 0;  // index into points()
    int split_dim = 0;
    double split_value = 0.0;
    int left = -1;
    int right = -1;
  };

  explicit KdTree(std::vector<LabeledPoint> points) : points_(std::move(points)) {
    if (points_.empty()) throw KnnError("kd-tree build: empty point set");
    dims_ = points_.front().vector.size();
    if (dims_ == 0) throw KnnError("kd-tree build: zero-dimensional points");
    std::vector<std::size_t> ids;
    ids.reserve(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (points_[i].vector.size() != dims_)
        throw KnnError("kd-tree build: point " + std::to_string(i) + " has dimension " +
                       std::to_string(points_[i].vector.size()) + ", expected " + std::to_string(dims_));
      ids.push_back(points_[i].id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw KnnError("kd-tree build: duplicate point id");

    std::vector<std::size_t> order(points_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    nodes_.reserve(points_.size());
    root_ = build(order, 0, order.size(), 0);
  }

  std::size_t dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return points_.size(); }
  std::span<const LabeledPoint> points() const noexcept { return points_; }
  std::span<const Node> nodes() const noexcept { return nodes_; }
  int root() const noexcept { return root_; }
  int depth() const noexcept { return depth_; }

  // Visits every resident point in left-root-right order.
  template <class Visitor>
  void in_order(Visitor&& visit) const {
    std::vector<int> stack;
    int cur = root_;
    while (cur >= 0 || !stack.empty()) {
      while (cur >= 0) {
        stack.push_back(cur);
        cur = nodes_[static_cast<std::size_t>(cur)].left;
      }
      cur = stack.back();
      stack.pop_back();
      visit(points_[nodes_[static_cast<std::size_t>(cur)].point]);
      cur = nodes_[static_cast<std::size_t>(cur)].right;
    }
  }

  NeighborSet query(std::span<const double> q, std::size_t k, QueryStats* stats = nullptr) const {
    detail::check_query(dims_, q.size(), k);
    detail::BoundedHeap best(k);
    QueryStats local;
    search(root_, q, best, local);
    if (stats) {
      stats->distance_evaluations += local.distance_evaluations;
      stats->nodes_visited += local.nodes_visited;
    }
    return best.drain();
  }

 private:
  int build(std::vector<std::size_t>& order, std::size_t lo, std::size_t hi, int level) {
    if (lo >= hi) return -1;
    depth_ = std::max(depth_, level + 1);
    const int dim = static_cast<int>(static_cast<std::size_t>(level) % dims_);
    const std::size_t mid = lo + (hi - lo - 1) / 2;
    auto before = [&](std::size_t a, std::size_t b) {
      const double ca = points_[a].vector[static_cast<std::size_t>(dim)];
      const double cb = points_[b].vector[static_cast<std::size_t>(dim)];
      return ca < cb || (ca == cb && points_[a].id < points_[b].id);
    };
    auto first = order.begin();
    std::nth_element(first + static_cast<std::ptrdiff_t>(lo), first + static_cast<std::ptrdiff_t>(mid),
                     first + static_cast<std::ptrdiff_t>(hi), before);
    const std::size_t pivot = order[mid];
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back({pivot, dim, points_[pivot].vector[static_cast<std::size_t>(dim)], -1, -1});
    const int left = build(order, lo, mid, level + 1);
    const int right = build(order, mid + 1, hi, level + 1);
    nodes_[static_cast<std::size_t>(self)].left = left;
    nodes_[static_cast<std::size_t>(self)].right = right;
    return self;
  }

  void search(int node_index, std::span<const double> q, detail::BoundedHeap& best, QueryStats& stats) const {
    if (node_index < 0) return;
    const Node& node = nodes_[static_cast<std::size_t>(node_index)];
    const LabeledPoint& p = points_[node.point];
    ++stats.nodes_visited;
    ++stats.distance_evaluations;
    best.offer({squared_distance(p.vector, q), p.id, p.label});

    const double diff = q[static_cast<std::size_t>(node.split_dim)] - node.split_value;
    const int near = diff <= 0.0 ? node.left : node.right;
    const int far = diff <= 0.0 ? node.right : node.left;
    search(near, q, best, stats);
    // <= keeps equal-distance points with smaller ids reachable across the plane.
    if (!best.full() || diff * diff <= best.worst_sq_distance()) search(far, q, best, stats);
  }

  std::vector<LabeledPoint> points_;
  std::vector<Node> nodes_;
  std::size_t dims_ = 0;
  int root_ = -1;
  int depth_ = 0;
};

// Most frequent label; ties go to the tied label whose member is nearest.
inline int majority_vote(const NeighborSet& neighbors) {
  if (neighbors.empty()) throw KnnError("majority_vote: empty neighbour set");
  std::vector<std::pair<int, int>> counts;  // (label, multiplicity)
  for (const auto& n : neighbors) {
    auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return c.first == n.label; });
    if (it == counts.end())
      counts.emplace_back(n.label, 1);
    else
      ++it->second;
  }
  int best = 0;
  for (const auto& c : counts) best = std::max(best, c.second);
  // counts is in first-appearance order, i.e. by nearest member.
  for (const auto& c : counts)
    if (c.second == best) return c.first;
  return neighbors.front().label;
}

}  // namespace gridocr
