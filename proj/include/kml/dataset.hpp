#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kml/features.hpp"
#include "kml/matrix.hpp"

namespace kml {

/// Labeled feature rows (one sample per row of `features`).
struct Dataset {
  FeatureSchema schema = FeatureSchema::custom;
  std::vector<std::string> feature_names;
  Matrix features;
  std::vector<int> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return static_cast<std::size_t>(features.cols()); }
  std::span<const float> row(std::size_t i) const {
    return {features.data() + i * feature_count(), feature_count()};
  }

  Dataset subset(std::span<const std::size_t> rows) const;
  /// Per-class sample counts.
  std::vector<std::size_t> class_histogram() const;

  static Dataset from_vectors(std::span<const FeatureVector> rows, std::size_t class_count);
  /// Concatenates datasets with identical widths.
  static Dataset concat(std::span<const Dataset> parts);
};

/// CSV with a header `label,<feature names...>`; labels are class indices.
/// Throws ConfigError when the label column is absent.
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace kml
