#pragma once

#include <cstring>
#include <random>
#include <vector>

#include "kml/dtree.hpp"
#include "kml/model.hpp"
#include "kml/model_io.hpp"

namespace kml::testing {

inline pipeline::NormalizerState random_normalizer(std::mt19937_64& rng, std::size_t features) {
  std::normal_distribution<float> mean(0.0f, 50.0f);
  std::uniform_real_distribution<float> var(0.01f, 400.0f);
  std::vector<float> m(features), v(features);
  for (std::size_t i = 0; i < features; ++i) {
    m[i] = mean(rng);
    v[i] = var(rng);
  }
  return pipeline::NormalizerState::from_snapshot(m, v);
}

inline ModelBundle random_network_bundle(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> width(1, 16), depth(0, 3), classes(2, 8);
  std::bernoulli_distribution relu(0.5);
  nn::Architecture arch;
  arch.inputs = width(rng);
  for (std::size_t d = depth(rng); d > 0; --d) arch.hidden.push_back(width(rng));
  arch.classes = classes(rng);
  arch.activation = relu(rng) ? nn::LayerKind::relu : nn::LayerKind::sigmoid;
  auto net = Network::build(arch, rng());
  std::normal_distribution<float> b(0.0f, 0.5f);
  for (auto& layer : net.layers()) {
    if (auto* fc = std::get_if<nn::FullyConnectedLayer<float>>(&layer)) {
      for (Eigen::Index i = 0; i < fc->bias.size(); ++i) fc->bias(i) = b(rng);
    }
  }
  return ModelBundle(std::move(net), random_normalizer(rng, arch.inputs), FeatureSchema::custom);
}

inline ModelBundle random_tree_bundle(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> features(1, 8), classes(2, 6), rows(20, 300);
  const int f = features(rng), c = classes(rng), n = rows(rng);
  std::normal_distribution<float> d(0.0f, 1.0f);
  Matrix x(n, f);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) x(i, j) = d(rng);
    y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<std::uint64_t>(c));
  }
  dtree::InductionParams p;
  p.max_depth = 1 + rng() % 9;
  auto tree = dtree::induce(x, y, static_cast<std::size_t>(c), p);
  return ModelBundle(std::move(tree), random_normalizer(rng, static_cast<std::size_t>(f)), FeatureSchema::custom);
}

/// True when `copy` predicts bitwise identically to `model` on `samples`
/// random raw inputs (labels, and network probabilities).
inline bool predictions_identical(const ModelBundle& model, const ModelBundle& copy, std::size_t samples,
                                  std::mt19937_64& rng) {
  if (copy.kind() != model.kind() || copy.class_count() != model.class_count()) return false;
  if (copy.feature_count() != model.feature_count()) return false;
  std::normal_distribution<float> d(0.0f, 60.0f);
  std::vector<float> raw(model.feature_count()), a(raw.size()), b(raw.size());
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& v : raw) v = d(rng);
    if (model.predict(raw) != copy.predict(raw)) return false;
    if (model.kind() == ModelKind::nn) {
      model.normalizer().apply(raw, a);
      copy.normalizer().apply(raw, b);
      if (std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) != 0) return false;
      const auto pa = model.network().predict(nn::column<float>(a));
      const auto pb = copy.network().predict(nn::column<float>(b));
      if (pa.label != pb.label ||
          std::memcmp(pa.probabilities.data(), pb.probabilities.data(),
                      sizeof(float) * static_cast<std::size_t>(pa.probabilities.size())) != 0) {
        return false;
      }
    }
  }
  return true;
}

/// Decodes the encoded model, checks it re-encodes to the same bytes and
/// predicts identically.
inline bool roundtrip_identical(const ModelBundle& model, std::size_t samples, std::mt19937_64& rng) {
  const auto bytes = io::encode(model);
  const ModelBundle copy = io::decode(bytes);
  if (io::encode(copy) != bytes) return false;
  return predictions_identical(model, copy, samples, rng);
}

}  // namespace kml::testing
