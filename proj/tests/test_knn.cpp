#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include "gridocr/knn.hpp"
#include "oracles.hpp"

using namespace gridocr;

namespace {

std::vector<LabeledPoint> random_points(std::mt19937_64& rng, std::size_t n, std::size_t d, int grid = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<LabeledPoint> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      // grid > 0 snaps coordinates to a lattice so distance ties are common.
      pts[i].vector.push_back(grid ? std::floor(u(rng) * grid) / grid : u(rng));
    pts[i].label = static_cast<int>(rng() % 10);
    pts[i].id = i;
  }
  return pts;
}

std::vector<LabeledPoint> triangle() {
  return {{{0, 0}, 1, 0}, {{1, 0}, 2, 1}, {{0, 1}, 3, 2}};
}

}  // namespace

TEST(KdTreeBuild, SinglePoint) {
  const KdTree tree({{{0.5, 0.5}, 4, 0}});
  EXPECT_EQ(tree.size(), 1u);
  EXPECT_EQ(tree.depth(), 1);
}

TEST(KdTreeBuild, ThreePointsSplitOnFirstDimensionAtLowerMedian) {
  const KdTree tree(triangle());
  const auto& root = tree.nodes()[static_cast<std::size_t>(tree.root())];
  EXPECT_EQ(root.split_dim, 0);
  // x coordinates sorted by (x, id): (0,id0) (0,id2) (1,id1); lower median is id 2.
  EXPECT_EQ(tree.points()[root.point].id, 2u);
  EXPECT_EQ(root.split_value, 0.0);
  std::multiset<std::size_t> seen;
  tree.in_order([&](const LabeledPoint& p) { seen.insert(p.id); });
  EXPECT_EQ(seen, (std::multiset<std::size_t>{0, 1, 2}));
}

TEST(KdTreeBuild, CensusAndDepthBound) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {1u, 2u, 3u, 7u, 8u, 9u, 100u, 1000u}) {
    const auto pts = random_points(rng, n, 8);
    const KdTree tree(pts);
    std::vector<int> seen(n, 0);
    tree.in_order([&](const LabeledPoint& p) { ++seen[p.id]; });
    for (int s : seen) EXPECT_EQ(s, 1);
    EXPECT_EQ(tree.nodes().size(), n);
    EXPECT_LE(tree.depth(), static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))) + 1) << n;
  }
}

TEST(KdTreeBuild, SplitInvariant) {
  std::mt19937_64 rng(2);
  const auto pts = random_points(rng, 300, 3, 5);
  const KdTree tree(pts);
  const auto nodes = tree.nodes();
  // Collect every point of a subtree and check it against the node's plane.
  std::function<void(int, std::vector<const LabeledPoint*>&)> collect = [&](int i, std::vector<const LabeledPoint*>& out) {
    if (i < 0) return;
    out.push_back(&tree.points()[nodes[static_cast<std::size_t>(i)].point]);
    collect(nodes[static_cast<std::size_t>(i)].left, out);
    collect(nodes[static_cast<std::size_t>(i)].right, out);
  };
  for (const auto& node : nodes) {
    std::vector<const LabeledPoint*> left, right;
    collect(node.left, left);
    collect(node.right, right);
    const auto dim = static_cast<std::size_t>(node.split_dim);
    for (auto* p : left) EXPECT_LE(p->vector[dim], node.split_value);
    for (auto* p : right) EXPECT_GE(p->vector[dim], node.split_value);
  }
}

TEST(KdTreeBuild, Errors) {
  EXPECT_THROW(KdTree(std::vector<LabeledPoint>{}), KnnError);
  EXPECT_THROW(KdTree({{{0, 0}, 0, 0}, {{1}, 0, 1}}), KnnError);
  EXPECT_THROW(KdTree({{{0, 0}, 0, 0}, {{1, 1}, 0, 0}}), KnnError);
}

TEST(KdTreeBuild, Deterministic) {
  std::mt19937_64 rng(3);
  const auto pts = random_points(rng, 500, 4, 3);
  const KdTree a(pts), b(pts);
  ASSERT_EQ(a.nodes().size(), b.nodes().size());
  for (std::size_t i = 0; i < a.nodes().size(); ++i) {
    EXPECT_EQ(a.nodes()[i].point, b.nodes()[i].point);
    EXPECT_EQ(a.nodes()[i].left, b.nodes()[i].left);
  }
}

TEST(KnnQuery, UniqueNearest) {
  const KdTree tree(triangle());
  const std::vector<double> q{0.1, 0.0};
  const auto ns = tree.query(q, 1);
  ASSERT_EQ(ns.size(), 1u);
  EXPECT_EQ(ns[0].id, 0u);
  EXPECT_EQ(ns[0].label, 1);
  EXPECT_DOUBLE_EQ(ns[0].distance, 0.1);
}

TEST(KnnQuery, KAtLeastNReturnsEverythingSorted) {
  std::mt19937_64 rng(4);
  const auto pts = random_points(rng, 17, 3);
  const KdTree tree(pts);
  const std::vector<double> q{0.3, 0.6, 0.2};
  for (std::size_t k : {17u, 18u, 100u}) {
    const auto ns = tree.query(q, k);
    ASSERT_EQ(ns.size(), 17u);
    for (std::size_t i = 1; i < ns.size(); ++i) EXPECT_LE(ns[i - 1].distance, ns[i].distance);
  }
}

TEST(KnnQuery, AgreesWithScanAndBruteForce) {
  std::mt19937_64 rng(5);
  for (std::size_t d : {2u, 8u, 32u}) {
    const auto pts = random_points(rng, 500, d);
    const KdTree tree(pts);
    for (int qi = 0; qi < 100; ++qi) {
      std::vector<double> q(d);
      for (auto& v : q) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      for (std::size_t k : {1u, 3u, 5u}) {
        const auto fast = tree.query(q, k);
        ASSERT_EQ(fast, linear_scan(pts, q, k));
        ASSERT_EQ(fast, oracle::brute_knn(pts, q, k));
      }
    }
  }
}

TEST(KnnQuery, TiesResolvedByIdOnLattice) {
  std::mt19937_64 rng(6);
  const auto pts = random_points(rng, 400, 3, 4);  // many duplicates and equal distances
  const KdTree tree(pts);
  for (int qi = 0; qi < 200; ++qi) {
    std::vector<double> q{(rng() % 5) / 4.0, (rng() % 5) / 4.0, (rng() % 5) / 4.0};
    for (std::size_t k : {1u, 3u, 7u, 25u}) ASSERT_EQ(tree.query(q, k), oracle::brute_knn(pts, q, k));
  }
}

TEST(KnnQuery, DistancesRecomputeFromStoredVectors) {
  std::mt19937_64 rng(7);
  const auto pts = random_points(rng, 200, 6);
  const KdTree tree(pts);
  const std::vector<double> q(6, 0.5);
  std::set<std::size_t> ids;
  for (const auto& n : tree.query(q, 10)) {
    double s = 0;
    for (std::size_t i = 0; i < 6; ++i) s += (pts[n.id].vector[i] - 0.5) * (pts[n.id].vector[i] - 0.5);
    EXPECT_EQ(n.distance, std::sqrt(s));
    EXPECT_TRUE(ids.insert(n.id).second);
  }
}

TEST(KnnQuery, Errors) {
  const KdTree tree(triangle());
  const std::vector<double> q3{0, 0, 0}, q2{0, 0};
  EXPECT_THROW(tree.query(q3, 1), KnnError);
  EXPECT_THROW(tree.query(q2, 0), KnnError);
  EXPECT_THROW(linear_scan(triangle(), q3, 1), KnnError);
}

TEST(KnnQuery, PrunesAtLowDimension) {
  std::mt19937_64 rng(8);
  const auto pts = random_points(rng, 20000, 4);
  const KdTree tree(pts);
  QueryStats stats;
  for (int qi = 0; qi < 50; ++qi) {
    std::vector<double> q(4);
    for (auto& v : q) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    tree.query(q, 3, &stats);
  }
  EXPECT_LT(stats.distance_evaluations / 50, 20000u / 10);
}

TEST(LinearScan, Basics) {
  const std::vector<LabeledPoint> one{{{2.0, 3.0}, 6, 0}};
  const std::vector<double> q{-1.0, 7.0};
  const auto ns = linear_scan(one, q, 1);
  ASSERT_EQ(ns.size(), 1u);
  EXPECT_EQ(ns[0].distance, 5.0);

  const std::vector<double> self{1.0, 0.0};
  EXPECT_EQ(linear_scan(triangle(), self, 2).front(), (Neighbor{1, 2, 0.0}));
}

TEST(MajorityVote, Rules) {
  EXPECT_EQ(majority_vote({{0, 7, 0.1}, {1, 7, 0.2}, {2, 3, 0.3}}), 7);
  EXPECT_EQ(majority_vote({{0, 1, 0.1}, {1, 2, 0.2}, {2, 3, 0.3}}), 1);
  EXPECT_EQ(majority_vote({{0, 3, 0.1}, {1, 9, 0.2}, {2, 9, 0.3}}), 9);
  EXPECT_EQ(majority_vote({{0, 4, 0.1}, {1, 5, 0.2}, {2, 5, 0.3}, {3, 4, 0.4}}), 4);
  EXPECT_THROW(majority_vote({}), KnnError);
}

TEST(MajorityVote, MatchesCountingOracle) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10000; ++trial) {
    NeighborSet ns;
    double d = 0;
    for (std::size_t i = 0; i < 3; ++i) ns.push_back({i, static_cast<int>(rng() % 4), d += 0.1});
    ASSERT_EQ(majority_vote(ns), oracle::vote_by_counting(ns));
  }
}
