#include <gtest/gtest.h>

#include <algorithm>
#include <list>
#include <random>
#include <utility>

#include "kml/error.hpp"
#include "kml/sim/cache.hpp"

using namespace kml;
using namespace kml::sim;

namespace {

// Reference LRU: front is most recently used.
class ListLru {
 public:
  explicit ListLru(std::size_t capacity) : capacity_(capacity) {}

  bool contains(std::size_t slot, std::int64_t page) const {
    return std::find(order_.begin(), order_.end(), std::pair{slot, page}) != order_.end();
  }
  void touch(std::size_t slot, std::int64_t page) {
    order_.remove({slot, page});
    order_.emplace_front(slot, page);
  }
  std::size_t insert(std::size_t slot, std::int64_t page) {
    std::size_t evicted = 0;
    if (order_.size() == capacity_) {
      order_.pop_back();
      evicted = 1;
    }
    order_.emplace_front(slot, page);
    return evicted;
  }
  std::vector<std::pair<std::size_t, std::int64_t>> order() const { return {order_.begin(), order_.end()}; }

 private:
  std::size_t capacity_;
  std::list<std::pair<std::size_t, std::int64_t>> order_;
};

}  // namespace

TEST(PageCache, EvictsLeastRecentlyUsed) {
  PageCache cache(2);
  const auto f = cache.add_file();
  cache.insert(f, 1);
  cache.insert(f, 2);
  cache.touch(f, 1);
  EXPECT_EQ(cache.insert(f, 3), 1u);
  EXPECT_TRUE(cache.contains(f, 1));
  EXPECT_FALSE(cache.contains(f, 2));
  EXPECT_TRUE(cache.contains(f, 3));
}

TEST(PageCache, MatchesListOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t capacity = 1 + rng() % 12;
    PageCache cache(capacity);
    ListLru oracle(capacity);
    const std::size_t files = 1 + rng() % 3;
    for (std::size_t i = 0; i < files; ++i) cache.add_file();
    for (int op = 0; op < 3000; ++op) {
      const std::size_t slot = rng() % files;
      const auto page = static_cast<std::int64_t>(rng() % 24);
      ASSERT_EQ(cache.contains(slot, page), oracle.contains(slot, page));
      if (cache.contains(slot, page)) {
        cache.touch(slot, page);
        oracle.touch(slot, page);
      } else {
        ASSERT_EQ(cache.insert(slot, page), oracle.insert(slot, page));
      }
      ASSERT_LE(cache.size(), capacity);
      ASSERT_EQ(cache.lru_order(), oracle.order()) << "seed " << seed << " op " << op;
    }
  }
}

TEST(PageCache, SparseLargeOffsets) {
  PageCache cache(4);
  const auto f = cache.add_file();
  cache.insert(f, 1'000'000);
  EXPECT_TRUE(cache.contains(f, 1'000'000));
  EXPECT_FALSE(cache.contains(f, 999'999));
  EXPECT_FALSE(cache.contains(f, 5'000'000));
}

TEST(PageCache, FilesAreIndependent) {
  PageCache cache(8);
  const auto a = cache.add_file(), b = cache.add_file();
  cache.insert(a, 3);
  EXPECT_TRUE(cache.contains(a, 3));
  EXPECT_FALSE(cache.contains(b, 3));
}

TEST(PageCache, Errors) {
  EXPECT_THROW(PageCache(0), ArgumentError);
  PageCache cache(4);
  const auto f = cache.add_file();
  EXPECT_THROW(cache.touch(f, 1), StateError);
  cache.insert(f, 1);
  EXPECT_THROW(cache.insert(f, 1), StateError);
  EXPECT_THROW(cache.insert(f, -1), ArgumentError);
}

TEST(Device, PresetsAreOrdered) {
  const auto nvme = DeviceModel::nvme(), sata = DeviceModel::sata();
  EXPECT_LT(nvme.miss_base_ns, sata.miss_base_ns);
  EXPECT_GT(nvme.miss_base_ns, nvme.hit_ns);
  EXPECT_EQ(device_by_name("sata")->name, "sata");
  EXPECT_FALSE(device_by_name("floppy").has_value());
}
