#include "kml/sim/cache.hpp"

#include <algorithm>
#include <string>

#include "kml/error.hpp"

namespace kml::sim {

DeviceModel DeviceModel::nvme() { return {"nvme", 40'000.0, 400'000.0, 20'000.0}; }
DeviceModel DeviceModel::sata() { return {"sata", 40'000.0, 1'200'000.0, 60'000.0}; }

std::optional<DeviceModel> device_by_name(std::string_view name) {
  if (name == "nvme") return DeviceModel::nvme();
  if (name == "sata") return DeviceModel::sata();
  return std::nullopt;
}

PageCache::PageCache(std::size_t capacity_pages) : capacity_(capacity_pages) {
  if (capacity_pages == 0) throw ArgumentError("page cache capacity must be positive");
  nodes_.resize(capacity_pages);
  free_.reserve(capacity_pages);
  for (std::size_t i = capacity_pages; i-- > 0;) free_.push_back(static_cast<std::int32_t>(i));
}

std::size_t PageCache::add_file() {
  index_.emplace_back();
  return index_.size() - 1;
}

std::int32_t PageCache::find(std::size_t slot, std::int64_t page) const {
  const auto& idx = index_.at(slot);
  if (page < 0 || static_cast<std::size_t>(page) >= idx.size()) return -1;
  return idx[static_cast<std::size_t>(page)];
}

void PageCache::unlink(std::int32_t n) {
  Node& node = nodes_[static_cast<std::size_t>(n)];
  if (node.prev >= 0) nodes_[static_cast<std::size_t>(node.prev)].next = node.next;
  else head_ = node.next;
  if (node.next >= 0) nodes_[static_cast<std::size_t>(node.next)].prev = node.prev;
  else tail_ = node.prev;
  node.prev = node.next = -1;
}

void PageCache::push_front(std::int32_t n) {
  Node& node = nodes_[static_cast<std::size_t>(n)];
  node.prev = -1;
  node.next = head_;
  if (head_ >= 0) nodes_[static_cast<std::size_t>(head_)].prev = n;
  head_ = n;
  if (tail_ < 0) tail_ = n;
}

void PageCache::touch(std::size_t slot, std::int64_t page) {
  const std::int32_t n = find(slot, page);
  if (n < 0) throw StateError("touch of a page that is not resident");
  if (n == head_) return;
  unlink(n);
  push_front(n);
}

std::size_t PageCache::insert(std::size_t slot, std::int64_t page) {
  if (page < 0) throw ArgumentError("negative page offset");
  if (find(slot, page) >= 0) throw StateError("insert of a page that is already resident");
  std::size_t evicted = 0;
  if (size_ == capacity_) {
    const std::int32_t victim = tail_;
    unlink(victim);
    const Node& v = nodes_[static_cast<std::size_t>(victim)];
    index_[v.slot][static_cast<std::size_t>(v.page)] = -1;
    free_.push_back(victim);
    --size_;
    evicted = 1;
  }
  auto& idx = index_.at(slot);
  if (static_cast<std::size_t>(page) >= idx.size()) {
    idx.resize(std::max(static_cast<std::size_t>(page) + 1, idx.size() * 2), -1);
  }
  const std::int32_t n = free_.back();
  free_.pop_back();
  nodes_[static_cast<std::size_t>(n)].slot = static_cast<std::uint32_t>(slot);
  nodes_[static_cast<std::size_t>(n)].page = page;
  push_front(n);
  idx[static_cast<std::size_t>(page)] = n;
  ++size_;
  return evicted;
}

std::vector<std::pair<std::size_t, std::int64_t>> PageCache::lru_order() const {
  std::vector<std::pair<std::size_t, std::int64_t>> out;
  out.reserve(size_);
  for (std::int32_t n = head_; n >= 0; n = nodes_[static_cast<std::size_t>(n)].next) {
    out.emplace_back(nodes_[static_cast<std::size_t>(n)].slot, nodes_[static_cast<std::size_t>(n)].page);
  }
  return out;
}

}  // namespace kml::sim
