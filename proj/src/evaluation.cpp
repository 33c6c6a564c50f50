#include "kml/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "kml/error.hpp"

namespace kml {
namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

pipeline::NormalizerState fit_normalizer(const Dataset& data) {
  pipeline::NormalizerState norm(data.feature_count());
  for (std::size_t i = 0; i < data.size(); ++i) norm.observe(data.row(i));
  return norm;
}

Matrix scaled_rows(const Dataset& data, const pipeline::NormalizerState& norm) {
  Matrix out(data.features.rows(), data.features.cols());
  for (std::size_t i = 0; i < data.size(); ++i) {
    norm.apply(data.row(i), {out.data() + i * data.feature_count(), data.feature_count()});
  }
  return out;
}

void check_trainable(const Dataset& data) {
  if (data.size() == 0) throw ArgumentError("training set is empty");
  if (data.class_count == 0) throw ArgumentError("training set has no classes");
}

template <typename Scorer>
KFoldResult run_folds(const Dataset& data, std::size_t k, const ModelTemplate& model, std::uint64_t seed,
                      Scorer score) {
  const auto folds = stratified_folds(data, k, seed);
  KFoldResult result;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> valid_rows;
    for (std::size_t i = 0; i < data.size(); ++i) (folds[i] == f ? valid_rows : train_rows).push_back(i);
    Dataset train = data.subset(train_rows);
    train.class_count = data.class_count;
    Dataset valid = data.subset(valid_rows);
    const ModelBundle fitted = train_model(train, model, mix(seed, f));
    result.fold_accuracy.push_back(score(fitted, valid, f));
  }
  result.mean_accuracy =
      std::accumulate(result.fold_accuracy.begin(), result.fold_accuracy.end(), 0.0) / static_cast<double>(k);
  return result;
}

}  // namespace

ModelBundle train_model(const Dataset& data, const ModelTemplate& model, std::uint64_t seed, TrainingLog* log) {
  check_trainable(data);
  pipeline::NormalizerState norm = fit_normalizer(data);
  const Matrix scaled = scaled_rows(data, norm);
  const std::size_t width = data.feature_count();

  if (const auto* tree = std::get_if<TreeTemplate>(&model)) {
    ModelBundle bundle(dtree::induce(scaled, data.labels, data.class_count, tree->params), std::move(norm),
                       data.schema);
    if (log != nullptr) log->training_accuracy = accuracy(bundle, data);
    return bundle;
  }

  const auto& tmpl = std::get<NnTemplate>(model);
  nn::Architecture arch = tmpl.architecture;
  arch.inputs = width;
  arch.classes = data.class_count;
  Network net = Network::build(arch, seed, nn::SgdOptimizer<float>(tmpl.learning_rate, tmpl.momentum));
  net.prepare();

  std::mt19937_64 rng(mix(seed, 0xfeed));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Matrix x(static_cast<Eigen::Index>(width), 1);
  for (std::size_t epoch = 0; epoch < tmpl.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss = 0.0;
    for (std::size_t i : order) {
      for (std::size_t j = 0; j < width; ++j) {
        x(static_cast<Eigen::Index>(j), 0) = scaled(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
      loss += net.train_iteration(x, static_cast<std::size_t>(data.labels[i]));
    }
    if (log != nullptr) log->epoch_loss.push_back(loss / static_cast<double>(data.size()));
  }
  ModelBundle bundle(std::move(net), std::move(norm), data.schema);
  if (log != nullptr) log->training_accuracy = accuracy(bundle, data);
  return bundle;
}

double accuracy(const ModelBundle& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  if (data.feature_count() != model.feature_count()) {
    throw ShapeError("model takes " + std::to_string(model.feature_count()) + " features, dataset has " +
                     std::to_string(data.feature_count()));
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (model.predict(data.row(i)) == static_cast<std::size_t>(data.labels[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("k-fold needs k >= 2, got " + std::to_string(k));
  if (data.size() < k) {
    throw ArgumentError("k-fold with k=" + std::to_string(k) + " needs at least k samples, got " +
                        std::to_string(data.size()));
  }
  std::vector<std::vector<std::size_t>> by_class(data.class_count);
  for (std::size_t i = 0; i < data.size(); ++i) by_class.at(static_cast<std::size_t>(data.labels[i])).push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> folds(data.size(), 0);
  std::size_t next = 0;
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t i : rows) folds[i] = next++ % k;
  }
  return folds;
}

KFoldResult kfold_evaluate(const Dataset& data, std::size_t k, const ModelTemplate& model, std::uint64_t seed) {
  return run_folds(data, k, model, seed,
                   [](const ModelBundle& fitted, const Dataset& valid, std::size_t) { return accuracy(fitted, valid); });
}

KFoldResult permutation_importance(const Dataset& data, std::size_t feature, std::size_t k,
                                   const ModelTemplate& model, std::uint64_t seed) {
  if (feature >= data.feature_count()) {
    throw ArgumentError("feature " + std::to_string(feature) + " out of range for " +
                        std::to_string(data.feature_count()) + " features");
  }
  return run_folds(data, k, model, seed, [&](const ModelBundle& fitted, const Dataset& valid, std::size_t fold) {
    Dataset shuffled = valid;
    std::mt19937_64 rng(mix(seed ^ 0x5eed, fold));
    auto column = shuffled.features.col(static_cast<Eigen::Index>(feature));
    std::vector<float> values(column.begin(), column.end());
    std::shuffle(values.begin(), values.end(), rng);
    for (std::size_t i = 0; i < values.size(); ++i) column(static_cast<Eigen::Index>(i)) = values[i];
    return accuracy(fitted, shuffled);
  });
}

}  // namespace kml
