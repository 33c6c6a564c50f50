#include "kml/model.hpp"

#include <string>

#include "kml/error.hpp"

namespace kml {

const char* to_string(ModelKind kind) { return kind == ModelKind::nn ? "nn" : "dtree"; }

ModelBundle::ModelBundle(Network network, pipeline::NormalizerState normalizer, FeatureSchema schema)
    : model_(std::move(network)), normalizer_(std::move(normalizer)), schema_(schema) {
  if (std::get<Network>(model_).empty()) throw ArgumentError("model bundle: empty network");
  if (std::get<Network>(model_).input_size() != normalizer_.size()) {
    throw ShapeError("model bundle: network takes " + std::to_string(std::get<Network>(model_).input_size()) +
                     " inputs but normalizer has " + std::to_string(normalizer_.size()));
  }
  prepare();
}

ModelBundle::ModelBundle(dtree::DecisionTree tree, pipeline::NormalizerState normalizer, FeatureSchema schema)
    : model_(std::move(tree)), normalizer_(std::move(normalizer)), schema_(schema) {
  if (std::get<dtree::DecisionTree>(model_).feature_count() != normalizer_.size()) {
    throw ShapeError("model bundle: tree takes " +
                     std::to_string(std::get<dtree::DecisionTree>(model_).feature_count()) +
                     " features but normalizer has " + std::to_string(normalizer_.size()));
  }
  prepare();
}

std::size_t ModelBundle::class_count() const {
  if (const auto* net = std::get_if<Network>(&model_)) return net->class_count();
  return std::get<dtree::DecisionTree>(model_).class_count();
}

void ModelBundle::prepare() {
  scaled_.assign(normalizer_.size(), 0.0f);
  input_.setZero(static_cast<Eigen::Index>(normalizer_.size()), 1);
  if (auto* net = std::get_if<Network>(&model_)) net->prepare();
}

std::size_t ModelBundle::classify(std::span<const float> raw) {
  normalizer_.apply(raw, scaled_);
  if (auto* net = std::get_if<Network>(&model_)) {
    for (std::size_t i = 0; i < scaled_.size(); ++i) input_(static_cast<Eigen::Index>(i), 0) = scaled_[i];
    return net->classify(input_);
  }
  return std::get<dtree::DecisionTree>(model_).predict(scaled_);
}

std::size_t ModelBundle::predict(std::span<const float> raw) const {
  std::vector<float> scaled(raw.size());
  normalizer_.apply(raw, scaled);
  if (const auto* net = std::get_if<Network>(&model_)) {
    return net->predict(nn::column<float>(scaled)).label;
  }
  return std::get<dtree::DecisionTree>(model_).predict(scaled);
}

float ModelBundle::train(std::span<const float> raw, std::size_t label) {
  auto* net = std::get_if<Network>(&model_);
  if (net == nullptr) throw ArgumentError("decision trees are induced offline, not trained per sample");
  if (label >= net->class_count()) {
    throw ArgumentError("label " + std::to_string(label) + " out of range");
  }
  normalizer_.normalize(raw, scaled_);
  for (std::size_t i = 0; i < scaled_.size(); ++i) input_(static_cast<Eigen::Index>(i), 0) = scaled_[i];
  return net->train_iteration(input_, label);
}

std::size_t ModelBundle::dynamic_bytes() const {
  std::size_t bytes = 2 * normalizer_.size() * sizeof(double) + scaled_.capacity() * sizeof(float) +
                      static_cast<std::size_t>(input_.size()) * sizeof(float);
  if (const auto* net = std::get_if<Network>(&model_)) return bytes + net->dynamic_bytes();
  return bytes + std::get<dtree::DecisionTree>(model_).dynamic_bytes();
}

}  // namespace kml
