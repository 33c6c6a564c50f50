#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "kml/matrix.hpp"

namespace kml::dtree {

/// One node of a tree stored in pre-order. Internal nodes send a sample left
/// when `features[feature] < threshold`; the left child always immediately
/// follows its parent, `right` indexes the right child.
struct TreeNode {
  bool leaf = true;
  std::uint16_t feature = 0;
  float threshold = 0.0f;
  std::uint16_t label = 0;
  std::uint32_t right = 0;
};

struct TreeStats {
  std::size_t node_count = 0;
  std::size_t depth = 0;
};

struct InductionParams {
  static constexpr std::size_t unlimited = std::numeric_limits<std::size_t>::max();
  std::size_t max_depth = 9;  // levels, a lone leaf has depth 1
  std::size_t min_samples_split = 2;
};

class DecisionTree {
 public:
  DecisionTree() = default;

  /// Takes a pre-order node list. Throws ArgumentError unless it forms a
  /// full binary tree over in-range features and classes.
  DecisionTree(std::vector<TreeNode> nodes, std::size_t feature_count, std::size_t class_count);

  std::size_t predict(std::span<const float> features) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t feature_count() const { return feature_count_; }
  std::size_t class_count() const { return class_count_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t depth() const { return depth_; }
  bool empty() const { return nodes_.empty(); }

  std::size_t dynamic_bytes() const { return nodes_.capacity() * sizeof(TreeNode); }

 private:
  std::vector<TreeNode> nodes_;
  std::size_t feature_count_ = 0;
  std::size_t class_count_ = 0;
  std::size_t depth_ = 0;
};

/// Greedy top-down CART induction. `features` holds one sample per row.
/// Each split minimises weighted Gini impurity over midpoints between
/// consecutive distinct values; ties prefer the lower feature index, then
/// the lower threshold. Leaves take the majority label (lowest on ties).
DecisionTree induce(const Matrix& features, std::span<const int> labels, std::size_t class_count,
                    const InductionParams& params = {});

/// Counts nodes and levels by walking the tree from the root.
TreeStats stats(const DecisionTree& tree);

}  // namespace kml::dtree
