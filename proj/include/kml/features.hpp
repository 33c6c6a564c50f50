#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace kml {

enum class FeatureSchema : std::uint8_t { readahead = 0, nfs = 1, custom = 255 };

inline constexpr std::size_t kMaxFeatures = 8;

constexpr std::size_t feature_count(FeatureSchema schema) {
  switch (schema) {
    case FeatureSchema::readahead:
      return 4;
    case FeatureSchema::nfs:
      return 8;
    case FeatureSchema::custom:
      return 0;
  }
  return 0;
}

std::string_view to_string(FeatureSchema schema);
std::span<const std::string_view> feature_names(FeatureSchema schema);

namespace readahead_feature {
inline constexpr std::size_t transactions_per_second = 0;
inline constexpr std::size_t cumulative_mean_offset = 1;
inline constexpr std::size_t mean_abs_offset_diff = 2;
inline constexpr std::size_t current_readahead = 3;
}  // namespace readahead_feature

namespace nfs_feature {
inline constexpr std::size_t transactions_per_second = 0;
inline constexpr std::size_t mean_read_to_done_latency = 1;
inline constexpr std::size_t mean_read_interarrival = 2;
inline constexpr std::size_t mean_done_interarrival = 3;
inline constexpr std::size_t mean_abs_requested_offset_diff = 4;
inline constexpr std::size_t mean_abs_page_offset_diff = 5;
inline constexpr std::size_t mean_reclaimed_pages = 6;
inline constexpr std::size_t current_rsize = 7;
}  // namespace nfs_feature

/// Fixed-capacity feature row. Trivially copyable so it can travel through
/// the ring buffer without touching the heap.
struct FeatureVector {
  FeatureSchema schema = FeatureSchema::readahead;
  std::uint8_t size = 0;
  std::int16_t label = -1;  // -1 when unlabeled
  std::uint64_t scope_key = 0;
  std::int64_t second = 0;
  std::array<float, kMaxFeatures> values{};

  std::span<float> data() { return {values.data(), size}; }
  std::span<const float> data() const { return {values.data(), size}; }
  float& operator[](std::size_t i) { return values[i]; }
  float operator[](std::size_t i) const { return values[i]; }
};

}  // namespace kml
