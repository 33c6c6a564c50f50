#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "kml/dataset.hpp"
#include "kml/dtree.hpp"
#include "kml/model.hpp"
#include "kml/nn.hpp"

namespace kml {

struct NnTemplate {
  nn::Architecture architecture = nn::readahead_architecture();
  float learning_rate = 0.0005f;
  float momentum = 0.99f;
  std::size_t epochs = 200;
};

struct TreeTemplate {
  dtree::InductionParams params;
};

/// How to build a fresh classifier; the input width and class count come from
/// the training data.
using ModelTemplate = std::variant<NnTemplate, TreeTemplate>;

struct TrainingLog {
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch, networks only
  double training_accuracy = 0.0;
};

/// Fits the normaliser on `data`, then trains (shuffled per epoch) or
/// induces a classifier on the Z-scored rows.
ModelBundle train_model(const Dataset& data, const ModelTemplate& model, std::uint64_t seed,
                        TrainingLog* log = nullptr);

double accuracy(const ModelBundle& model, const Dataset& data);

/// Class-stratified fold assignment: fold index per row.
std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed);

struct KFoldResult {
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

/// Each fold is validated on a model trained (normaliser included) on the
/// remaining folds only.
KFoldResult kfold_evaluate(const Dataset& data, std::size_t k, const ModelTemplate& model, std::uint64_t seed);

/// Same folds and models as kfold_evaluate, but with `feature` shuffled
/// among the validation rows before scoring.
KFoldResult permutation_importance(const Dataset& data, std::size_t feature, std::size_t k,
                                   const ModelTemplate& model, std::uint64_t seed);

}  // namespace kml
