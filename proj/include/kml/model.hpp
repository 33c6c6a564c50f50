#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "kml/dtree.hpp"
#include "kml/features.hpp"
#include "kml/nn.hpp"
#include "kml/pipeline.hpp"

namespace kml {

enum class ModelKind : std::uint8_t { nn = 0, dtree = 1 };

const char* to_string(ModelKind kind);

using Network = nn::Network<float>;

/// A deployable classifier: a network or tree plus the normaliser whose
/// statistics its inputs were scaled with during training.
class ModelBundle {
 public:
  ModelBundle() = default;
  ModelBundle(Network network, pipeline::NormalizerState normalizer, FeatureSchema schema);
  ModelBundle(dtree::DecisionTree tree, pipeline::NormalizerState normalizer, FeatureSchema schema);

  ModelKind kind() const { return std::holds_alternative<Network>(model_) ? ModelKind::nn : ModelKind::dtree; }
  FeatureSchema schema() const { return schema_; }
  std::size_t feature_count() const { return normalizer_.size(); }
  std::size_t class_count() const;

  Network& network() { return std::get<Network>(model_); }
  const Network& network() const { return std::get<Network>(model_); }
  const dtree::DecisionTree& tree() const { return std::get<dtree::DecisionTree>(model_); }
  const pipeline::NormalizerState& normalizer() const { return normalizer_; }
  pipeline::NormalizerState& normalizer() { return normalizer_; }

  /// Z-scores `raw` with the frozen normaliser and classifies it. Reuses
  /// internal buffers: no heap traffic after construction, not thread-safe.
  std::size_t classify(std::span<const float> raw);

  /// Read-only variant of classify with per-call scratch.
  std::size_t predict(std::span<const float> raw) const;

  /// Streaming-normalises `raw` (statistics updated first) and runs one
  /// SGD iteration. Network bundles only.
  float train(std::span<const float> raw, std::size_t label);

  /// Sizes every lazily-shaped buffer so later calls do not allocate.
  void prepare();

  std::size_t dynamic_bytes() const;

 private:
  std::variant<Network, dtree::DecisionTree> model_;
  pipeline::NormalizerState normalizer_;
  FeatureSchema schema_ = FeatureSchema::custom;
  std::vector<float> scaled_;
  Matrix input_;
};

}  // namespace kml
