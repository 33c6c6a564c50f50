#include "kml/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "kml/error.hpp"

namespace kml {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

FeatureSchema guess_schema(const std::vector<std::string>& names) {
  for (FeatureSchema s : {FeatureSchema::readahead, FeatureSchema::nfs}) {
    auto expected = feature_names(s);
    if (expected.size() == names.size() && std::equal(expected.begin(), expected.end(), names.begin())) return s;
  }
  return FeatureSchema::custom;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.schema = schema;
  out.feature_names = feature_names;
  out.class_count = class_count;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> counts(class_count, 0);
  for (int label : labels) ++counts.at(static_cast<std::size_t>(label));
  return counts;
}

Dataset Dataset::from_vectors(std::span<const FeatureVector> rows, std::size_t class_count) {
  Dataset out;
  out.class_count = class_count;
  if (rows.empty()) return out;
  out.schema = rows.front().schema;
  const std::size_t width = rows.front().size;
  for (auto name : kml::feature_names(out.schema)) out.feature_names.emplace_back(name);
  out.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size != width) throw ShapeError("dataset rows differ in width");
    if (rows[i].label < 0 || static_cast<std::size_t>(rows[i].label) >= class_count) {
      throw ArgumentError("dataset row " + std::to_string(i) + " has label " + std::to_string(rows[i].label));
    }
    for (std::size_t j = 0; j < width; ++j) {
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    out.labels.push_back(rows[i].label);
  }
  return out;
}

Dataset Dataset::concat(std::span<const Dataset> parts) {
  Dataset out;
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p.size() == 0) continue;
    if (out.feature_names.empty()) {
      out.schema = p.schema;
      out.feature_names = p.feature_names;
      out.features.resize(0, p.features.cols());
    }
    if (p.features.cols() != out.features.cols()) throw ShapeError("dataset widths differ");
    out.class_count = std::max(out.class_count, p.class_count);
    total += p.features.rows();
  }
  Matrix all(total, out.features.cols());
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    if (p.size() == 0) continue;
    all.middleRows(at, p.features.rows()) = p.features;
    at += p.features.rows();
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  out.features = std::move(all);
  return out;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "label";
  for (std::size_t j = 0; j < data.feature_count(); ++j) {
    out << ',' << (j < data.feature_names.size() ? data.feature_names[j] : "f" + std::to_string(j));
  }
  out << '\n';
  out.precision(9);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (float v : data.row(i)) out << ',' << v;
    out << '\n';
  }
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open dataset for writing: " + path.string());
  write_dataset_csv(out, data);
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv(line);
  const auto label_at = std::find(header.begin(), header.end(), "label");
  if (label_at == header.end()) throw ConfigError("dataset has no label column");
  const auto label_col = static_cast<std::size_t>(label_at - header.begin());

  Dataset data;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != label_col) data.feature_names.push_back(header[j]);
  }
  data.schema = guess_schema(data.feature_names);
  std::vector<float> values;
  std::size_t lineno = 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ConfigError("dataset line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                        " fields");
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j == label_col) {
        int label = -1;
        auto [p, ec] = std::from_chars(fields[j].data(), fields[j].data() + fields[j].size(), label);
        if (ec != std::errc() || p != fields[j].data() + fields[j].size() || label < 0) {
          throw ConfigError("dataset line " + std::to_string(lineno) + ": bad label '" + fields[j] + "'");
        }
        data.labels.push_back(label);
        max_label = std::max(max_label, label);
      } else {
        try {
          std::size_t used = 0;
          values.push_back(std::stof(fields[j], &used));
          if (used != fields[j].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
          throw ConfigError("dataset line " + std::to_string(lineno) + ": bad value '" + fields[j] + "'");
        }
      }
    }
  }
  const auto width = static_cast<Eigen::Index>(data.feature_names.size());
  data.features = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(data.labels.size()), width);
  data.class_count = static_cast<std::size_t>(max_label + 1);
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset: " + path.string());
  return read_dataset_csv(in);
}

}  // namespace kml
