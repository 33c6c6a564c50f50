#include "kml/dtree.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "kml/error.hpp"

namespace kml::dtree {
namespace {

struct Split {
  bool found = false;
  std::size_t feature = 0;
  float threshold = 0.0f;
  double impurity = 0.0;
};

// n * Gini for a class histogram with total n.
double scaled_gini(const std::vector<std::size_t>& counts, std::size_t n) {
  if (n == 0) return 0.0;
  double sum_sq = 0.0;
  for (std::size_t c : counts) sum_sq += static_cast<double>(c) * static_cast<double>(c);
  return static_cast<double>(n) - sum_sq / static_cast<double>(n);
}

class Builder {
 public:
  Builder(const Matrix& x, std::span<const int> y, std::size_t classes, const InductionParams& p)
      : x_(x), y_(y), classes_(classes), params_(p) {}

  std::vector<TreeNode> run() {
    std::vector<std::size_t> idx(y_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    grow(idx, 1);
    return std::move(nodes_);
  }

 private:
  std::uint16_t majority(const std::vector<std::size_t>& counts) const {
    std::size_t best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
      if (counts[c] > counts[best]) best = c;
    }
    return static_cast<std::uint16_t>(best);
  }

  Split best_split(const std::vector<std::size_t>& idx) const {
    Split best;
    const std::size_t n = idx.size();
    std::vector<std::size_t> order(idx);
    std::vector<std::size_t> left(classes_), right(classes_);
    for (std::size_t f = 0; f < static_cast<std::size_t>(x_.cols()); ++f) {
      const auto col = static_cast<Eigen::Index>(f);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x_(static_cast<Eigen::Index>(a), col) < x_(static_cast<Eigen::Index>(b), col);
      });
      std::fill(left.begin(), left.end(), 0);
      std::fill(right.begin(), right.end(), 0);
      for (std::size_t i : order) ++right[static_cast<std::size_t>(y_[i])];
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto label = static_cast<std::size_t>(y_[order[i]]);
        ++left[label];
        --right[label];
        const float lo = x_(static_cast<Eigen::Index>(order[i]), col);
        const float hi = x_(static_cast<Eigen::Index>(order[i + 1]), col);
        if (!(lo < hi)) continue;
        float threshold = static_cast<float>((static_cast<double>(lo) + static_cast<double>(hi)) / 2.0);
        // The midpoint can round down onto `lo`; `hi` then still separates.
        if (!(lo < threshold)) threshold = hi;
        const double impurity = scaled_gini(left, i + 1) + scaled_gini(right, n - i - 1);
        // Features and thresholds are visited in ascending order, so a strict
        // comparison keeps the lowest feature, then the lowest threshold.
        if (!best.found || impurity < best.impurity) {
          best = {true, f, threshold, impurity};
        }
      }
    }
    return best;
  }

  void grow(const std::vector<std::size_t>& idx, std::size_t level) {
    std::vector<std::size_t> counts(classes_);
    for (std::size_t i : idx) ++counts[static_cast<std::size_t>(y_[i])];
    const std::size_t self = nodes_.size();
    nodes_.push_back(TreeNode{true, 0, 0.0f, majority(counts), 0});

    const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
    if (pure || level >= params_.max_depth || idx.size() < params_.min_samples_split) return;
    const Split split = best_split(idx);
    if (!split.found) return;

    std::vector<std::size_t> left, right;
    const auto col = static_cast<Eigen::Index>(split.feature);
    for (std::size_t i : idx) {
      (x_(static_cast<Eigen::Index>(i), col) < split.threshold ? left : right).push_back(i);
    }
    nodes_[self].leaf = false;
    nodes_[self].feature = static_cast<std::uint16_t>(split.feature);
    nodes_[self].threshold = split.threshold;
    nodes_[self].label = 0;
    grow(left, level + 1);
    nodes_[self].right = static_cast<std::uint32_t>(nodes_.size());
    grow(right, level + 1);
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::size_t classes_;
  InductionParams params_;
  std::vector<TreeNode> nodes_;
};

// Returns the index one past the subtree rooted at `at`, and its depth.
std::size_t walk(const std::vector<TreeNode>& nodes, std::size_t at, std::size_t& depth) {
  if (at >= nodes.size()) throw ArgumentError("tree node " + std::to_string(at) + " missing");
  if (nodes[at].leaf) {
    depth = 1;
    return at + 1;
  }
  std::size_t left_depth = 0, right_depth = 0;
  const std::size_t left_end = walk(nodes, at + 1, left_depth);
  if (nodes[at].right != left_end) {
    throw ArgumentError("tree node " + std::to_string(at) + " right child is not in pre-order");
  }
  const std::size_t end = walk(nodes, left_end, right_depth);
  depth = 1 + std::max(left_depth, right_depth);
  return end;
}

}  // namespace

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t feature_count,
                           std::size_t class_count)
    : nodes_(std::move(nodes)), feature_count_(feature_count), class_count_(class_count) {
  if (nodes_.empty()) throw ArgumentError("decision tree needs at least one node");
  for (const auto& node : nodes_) {
    if (node.leaf && node.label >= class_count_) {
      throw ArgumentError("leaf label " + std::to_string(node.label) + " out of range");
    }
    if (!node.leaf && node.feature >= feature_count_) {
      throw ArgumentError("split feature " + std::to_string(node.feature) + " out of range");
    }
  }
  if (walk(nodes_, 0, depth_) != nodes_.size()) {
    throw ArgumentError("decision tree has unreachable nodes");
  }
}

std::size_t DecisionTree::predict(std::span<const float> features) const {
  if (features.size() != feature_count_) {
    throw ShapeError("tree expects " + std::to_string(feature_count_) + " features, got " +
                     std::to_string(features.size()));
  }
  std::size_t at = 0;
  while (!nodes_[at].leaf) {
    at = features[nodes_[at].feature] < nodes_[at].threshold ? at + 1 : nodes_[at].right;
  }
  return nodes_[at].label;
}

DecisionTree induce(const Matrix& features, std::span<const int> labels, std::size_t class_count,
                    const InductionParams& params) {
  if (labels.empty() || features.rows() == 0) throw ArgumentError("induce: empty dataset");
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ShapeError("induce: " + std::to_string(features.rows()) + " feature rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (params.max_depth == 0) throw ArgumentError("induce: max_depth must be at least 1");
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= class_count) {
      throw ArgumentError("induce: label " + std::to_string(label) + " out of range");
    }
  }
  Builder builder(features, labels, class_count, params);
  return DecisionTree(builder.run(), static_cast<std::size_t>(features.cols()), class_count);
}

TreeStats stats(const DecisionTree& tree) {
  if (tree.empty()) return {};
  std::size_t depth = 0;
  const std::size_t count = walk(tree.nodes(), 0, depth);
  return {count, depth};
}

}  // namespace kml::dtree
