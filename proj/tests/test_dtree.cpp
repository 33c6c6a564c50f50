#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "kml/dtree.hpp"

using kml::Matrix;
using namespace kml::dtree;

namespace {

TreeNode leaf(std::uint16_t label) {
  TreeNode n;
  n.leaf = true;
  n.label = label;
  return n;
}

TreeNode split(std::uint16_t feature, float threshold, std::uint32_t right) {
  TreeNode n;
  n.leaf = false;
  n.feature = feature;
  n.threshold = threshold;
  n.right = right;
  return n;
}

// Recursive traversal written against the documented node layout only.
std::size_t oracle_predict(const std::vector<TreeNode>& nodes, std::size_t at, std::span<const float> x) {
  const TreeNode& n = nodes[at];
  if (n.leaf) return n.label;
  return x[n.feature] < n.threshold ? oracle_predict(nodes, at + 1, x) : oracle_predict(nodes, n.right, x);
}

double training_accuracy(const DecisionTree& tree, const Matrix& x, const std::vector<int>& y) {
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const std::span<const float> row(x.data() + i * x.cols(), static_cast<std::size_t>(x.cols()));
    hits += tree.predict(row) == static_cast<std::size_t>(y[static_cast<std::size_t>(i)]);
  }
  return static_cast<double>(hits) / static_cast<double>(x.rows());
}

std::vector<float> midpoints(const Matrix& x, Eigen::Index f, const std::vector<std::size_t>& rows) {
  std::set<float> values;
  for (auto r : rows) values.insert(x(static_cast<Eigen::Index>(r), f));
  std::vector<float> v(values.begin(), values.end()), out;
  for (std::size_t i = 1; i < v.size(); ++i) out.push_back((v[i - 1] + v[i]) / 2);
  return out;
}

std::size_t majority_hits(const std::vector<int>& y, const std::vector<std::size_t>& rows, int classes) {
  std::vector<std::size_t> c(static_cast<std::size_t>(classes), 0);
  for (auto r : rows) ++c[static_cast<std::size_t>(y[r])];
  return rows.empty() ? 0 : *std::max_element(c.begin(), c.end());
}

// Best correctly-classified count over a leaf or any single split.
std::size_t best_stump(const Matrix& x, const std::vector<int>& y, const std::vector<std::size_t>& rows,
                       int classes) {
  std::size_t best = majority_hits(y, rows, classes);
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    for (float t : midpoints(x, f, rows)) {
      std::vector<std::size_t> l, r;
      for (auto i : rows) (x(static_cast<Eigen::Index>(i), f) < t ? l : r).push_back(i);
      best = std::max(best, majority_hits(y, l, classes) + majority_hits(y, r, classes));
    }
  }
  return best;
}

// Exhaustive search over every axis-aligned tree of depth <= 2 (a leaf or
// one split over two leaves).
double exhaustive_depth2_accuracy(const Matrix& x, const std::vector<int>& y, int classes) {
  std::vector<std::size_t> all(y.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return static_cast<double>(best_stump(x, y, all, classes)) / static_cast<double>(y.size());
}

}  // namespace

TEST(Induce, PureDatasetIsSingleLeaf) {
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  const std::vector<int> y = {2, 2, 2};
  const auto tree = induce(x, y, 3);
  ASSERT_EQ(tree.node_count(), 1u);
  EXPECT_EQ(tree.nodes()[0].label, 2);
}

TEST(Induce, OneDimensionalSplitSitsBetweenClosestOppositePoints) {
  Matrix x(6, 1);
  x << -3, -2, -0.5f, 0.25f, 1, 4;
  const std::vector<int> y = {0, 0, 0, 1, 1, 1};
  const auto tree = induce(x, y, 2);
  ASSERT_EQ(tree.node_count(), 3u);
  EXPECT_FALSE(tree.nodes()[0].leaf);
  EXPECT_FLOAT_EQ(tree.nodes()[0].threshold, (-0.5f + 0.25f) / 2);
  const float neg[] = {-5.0f}, pos[] = {5.0f};
  EXPECT_EQ(tree.predict(neg), 0u);
  EXPECT_EQ(tree.predict(pos), 1u);
}

TEST(Induce, MatchesExhaustiveDepthTwoOracleInTrainingAccuracy) {
  for (std::uint32_t seed = 1; seed <= 20; ++seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> u(0, 1);
    Matrix x(30, 2);
    std::vector<int> y(30);
    for (int i = 0; i < 30; ++i) {
      x(i, 0) = u(rng);
      x(i, 1) = u(rng);
      y[static_cast<std::size_t>(i)] = (x(i, 0) + 0.3f * x(i, 1) < 0.6f ? 0 : 1) + (u(rng) < 0.1f ? 2 : 0);
    }
    InductionParams p;
    p.max_depth = 2;
    const auto tree = induce(x, y, 4, p);
    EXPECT_DOUBLE_EQ(training_accuracy(tree, x, y), exhaustive_depth2_accuracy(x, y, 4)) << "seed " << seed;
  }
}

TEST(Induce, UnlimitedDepthFitsConflictFreeData) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<float> u(-1, 1);
  Matrix x(200, 3);
  std::vector<int> y(200);
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = u(rng);
    y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 4);
  }
  InductionParams p;
  p.max_depth = InductionParams::unlimited;
  EXPECT_DOUBLE_EQ(training_accuracy(induce(x, y, 4, p), x, y), 1.0);
}

TEST(Induce, DepthNeverExceedsLimitAndIsDeterministic) {
  std::mt19937 rng(10);
  std::uniform_real_distribution<float> u(-1, 1);
  Matrix x(300, 4);
  std::vector<int> y(300);
  for (int i = 0; i < 300; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = u(rng);
    y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 4);
  }
  for (std::size_t depth : {1u, 2u, 5u, 9u}) {
    InductionParams p;
    p.max_depth = depth;
    const auto a = induce(x, y, 4, p);
    const auto b = induce(x, y, 4, p);
    EXPECT_LE(stats(a).depth, depth);
    ASSERT_EQ(a.node_count(), b.node_count());
    for (std::size_t i = 0; i < a.node_count(); ++i) {
      EXPECT_EQ(a.nodes()[i].feature, b.nodes()[i].feature);
      EXPECT_EQ(a.nodes()[i].threshold, b.nodes()[i].threshold);
      EXPECT_EQ(a.nodes()[i].label, b.nodes()[i].label);
    }
  }
  EXPECT_LE(stats(induce(x, y, 4)).depth, 9u);
}

TEST(Induce, TiesPreferLowerFeatureIndex) {
  Matrix x(4, 2);
  x << 0, 0, 0, 0, 1, 1, 1, 1;
  const std::vector<int> y = {0, 0, 1, 1};
  const auto tree = induce(x, y, 2);
  EXPECT_EQ(tree.nodes()[0].feature, 0);
}

TEST(Induce, MajorityLeafTakesLowestLabelOnTies) {
  Matrix x(2, 1);
  x << 1, 1;
  const std::vector<int> y = {3, 1};
  const auto tree = induce(x, y, 4);
  ASSERT_EQ(tree.node_count(), 1u);
  EXPECT_EQ(tree.nodes()[0].label, 1);
}

TEST(Induce, Errors) {
  EXPECT_THROW(induce(Matrix(0, 2), std::vector<int>{}, 2), kml::ArgumentError);
  Matrix x(2, 1);
  x << 0, 1;
  EXPECT_THROW(induce(x, std::vector<int>{0, 5}, 2), kml::ArgumentError);
  EXPECT_THROW(induce(x, std::vector<int>{0}, 2), kml::ShapeError);
}

TEST(Predict, SingleLeafAnswersItsClass) {
  const DecisionTree tree({leaf(3)}, 2, 4);
  std::mt19937 rng(1);
  std::normal_distribution<float> d(0, 100);
  for (int i = 0; i < 100; ++i) {
    const float x[] = {d(rng), d(rng)};
    EXPECT_EQ(tree.predict(x), 3u);
  }
}

TEST(Predict, AgreesWithIndependentTraversal) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<float> u(-1, 1);
  Matrix x(500, 3);
  std::vector<int> y(500);
  for (int i = 0; i < 500; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = u(rng);
    y[static_cast<std::size_t>(i)] = (x(i, 0) + x(i, 1) * x(i, 2) > 0) + 2 * (x(i, 2) > 0.3f);
  }
  const auto tree = induce(x, y, 4);
  for (int i = 0; i < 10000; ++i) {
    const float p[] = {u(rng), u(rng), u(rng)};
    ASSERT_EQ(tree.predict(p), oracle_predict(tree.nodes(), 0, p));
  }
}

TEST(Predict, WrongWidthIsShapeError) {
  const DecisionTree tree({split(0, 0.0f, 2), leaf(0), leaf(1)}, 2, 2);
  const float x[] = {1.0f};
  EXPECT_THROW(tree.predict(x), kml::ShapeError);
}

TEST(Stats, CountsNodesAndLevels) {
  const DecisionTree one({leaf(0)}, 1, 1);
  EXPECT_EQ(stats(one).node_count, 1u);
  EXPECT_EQ(stats(one).depth, 1u);

  const DecisionTree stump({split(0, 0.0f, 2), leaf(0), leaf(1)}, 1, 2);
  EXPECT_EQ(stats(stump).node_count, 3u);
  EXPECT_EQ(stats(stump).depth, 2u);

  const DecisionTree full({split(0, 0.0f, 4), split(0, -1.0f, 3), leaf(0), leaf(1), split(0, 1.0f, 6), leaf(2),
                           leaf(3)},
                          1, 4);
  EXPECT_EQ(stats(full).node_count, 7u);
  EXPECT_EQ(stats(full).depth, 3u);
  EXPECT_EQ(full.depth(), 3u);
}

TEST(Construct, RejectsMalformedNodeLists) {
  EXPECT_THROW(DecisionTree({}, 1, 1), kml::ArgumentError);
  EXPECT_THROW(DecisionTree({split(0, 0.0f, 2), leaf(0)}, 1, 1), kml::ArgumentError);
  EXPECT_THROW(DecisionTree({leaf(5)}, 1, 2), kml::ArgumentError);
  EXPECT_THROW(DecisionTree({split(3, 0.0f, 2), leaf(0), leaf(1)}, 1, 2), kml::ArgumentError);
  EXPECT_THROW(DecisionTree({leaf(0), leaf(1)}, 1, 2), kml::ArgumentError);
}
