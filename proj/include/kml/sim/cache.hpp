#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kml::sim {

inline constexpr int kSectorsPerPage = 8;

/// Simulated costs in nanoseconds. A miss costs miss_base_ns plus
/// per_page_transfer_ns for every page read, prefetched pages included.
struct DeviceModel {
  std::string name;
  double hit_ns = 0.0;
  double miss_base_ns = 0.0;
  double per_page_transfer_ns = 0.0;

  static DeviceModel nvme();
  static DeviceModel sata();
};

std::optional<DeviceModel> device_by_name(std::string_view name);

struct CacheSim {
  std::size_t capacity_pages = 8192;
  DeviceModel device = DeviceModel::nvme();
};

/// Fixed-capacity LRU page cache keyed by (file slot, page). Nodes live in
/// one pool with intrusive links; each slot indexes its pages densely.
class PageCache {
 public:
  explicit PageCache(std::size_t capacity_pages);

  std::size_t add_file();
  std::size_t file_count() const { return index_.size(); }

  bool contains(std::size_t slot, std::int64_t page) const { return find(slot, page) >= 0; }
  /// Moves a resident page to the most-recently-used end.
  void touch(std::size_t slot, std::int64_t page);
  /// Inserts a non-resident page as most recently used, evicting the least
  /// recently used page when full. Returns the number of pages evicted.
  std::size_t insert(std::size_t slot, std::int64_t page);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  /// Resident pages, most recently used first.
  std::vector<std::pair<std::size_t, std::int64_t>> lru_order() const;

 private:
  struct Node {
    std::uint32_t slot = 0;
    std::int64_t page = 0;
    std::int32_t prev = -1;
    std::int32_t next = -1;
  };

  std::int32_t find(std::size_t slot, std::int64_t page) const;
  void unlink(std::int32_t n);
  void push_front(std::int32_t n);

  std::size_t capacity_;
  std::size_t size_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::int32_t> free_;
  std::int32_t head_ = -1;  // most recent
  std::int32_t tail_ = -1;  // least recent
  std::vector<std::vector<std::int32_t>> index_;
};

}  // namespace kml::sim
