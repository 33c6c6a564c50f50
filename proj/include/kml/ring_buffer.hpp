#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <new>
#include <optional>
#include <span>
#include <string>
#include <type_traits>

#include "kml/error.hpp"

namespace kml::async {

enum class PushResult : std::uint8_t { accepted, dropped };

/// Fixed-capacity single-producer/single-consumer queue. A push onto a full
/// ring discards the new item and bumps `dropped_count()`; neither side ever
/// waits on the other.
///
/// head_ counts pushes and is written only by the producer; tail_ counts
/// pops and is written only by the consumer. Each side publishes its index
/// with release and reads the other's with acquire, so a slot's contents are
/// visible before the index that exposes it.
template <typename T>
class SpscRing {
  static_assert(std::is_trivially_copyable_v<T>, "ring slots are copied bytewise");

 public:
  static constexpr std::size_t kDefaultCapacity = 4096;

  explicit SpscRing(std::size_t capacity = kDefaultCapacity)
      : owned_(std::make_unique<T[]>(checked(capacity))), slots_(owned_.get(), capacity), mask_(capacity - 1) {}

  /// Places the slots in caller-provided storage, e.g. a reserved pool grant.
  explicit SpscRing(std::span<std::byte> storage)
      : slots_(place(storage)), mask_(slots_.size() - 1) {}

  SpscRing(const SpscRing&) = delete;
  SpscRing& operator=(const SpscRing&) = delete;

  /// Producer side.
  PushResult push(const T& item) noexcept {
    const std::uint64_t head = head_.load(std::memory_order_relaxed);
    if (head - cached_tail_ >= slots_.size()) {
      cached_tail_ = tail_.load(std::memory_order_acquire);
      if (head - cached_tail_ >= slots_.size()) {
        dropped_.fetch_add(1, std::memory_order_relaxed);
        return PushResult::dropped;
      }
    }
    slots_[head & mask_] = item;
    head_.store(head + 1, std::memory_order_release);
    return PushResult::accepted;
  }

  /// Consumer side.
  bool pop(T& out) noexcept {
    const std::uint64_t tail = tail_.load(std::memory_order_relaxed);
    if (tail == cached_head_) {
      cached_head_ = head_.load(std::memory_order_acquire);
      if (tail == cached_head_) return false;
    }
    out = slots_[tail & mask_];
    tail_.store(tail + 1, std::memory_order_release);
    return true;
  }

  std::optional<T> pop() noexcept {
    T item;
    if (pop(item)) return item;
    return std::nullopt;
  }

  std::size_t capacity() const noexcept { return slots_.size(); }
  /// Approximate when read concurrently; exact when both sides are quiet.
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(head_.load(std::memory_order_acquire) - tail_.load(std::memory_order_acquire));
  }
  bool empty() const noexcept { return size() == 0; }
  std::uint64_t dropped_count() const noexcept { return dropped_.load(std::memory_order_relaxed); }
  std::uint64_t pushed_count() const noexcept { return head_.load(std::memory_order_acquire); }
  std::uint64_t popped_count() const noexcept { return tail_.load(std::memory_order_acquire); }

  static constexpr std::size_t bytes_for(std::size_t capacity) { return capacity * sizeof(T) + alignof(T); }

 private:
  static std::size_t checked(std::size_t capacity) {
    if (capacity == 0 || (capacity & (capacity - 1)) != 0) {
      throw ArgumentError("ring capacity must be a power of two, got " + std::to_string(capacity));
    }
    return capacity;
  }

  static std::span<T> place(std::span<std::byte> storage) {
    void* p = storage.data();
    std::size_t space = storage.size();
    if (std::align(alignof(T), sizeof(T), p, space) == nullptr) throw ArgumentError("ring storage too small");
    std::size_t n = space / sizeof(T);
    while (n & (n - 1)) n &= n - 1;  // round down to a power of two
    checked(n);
    T* first = static_cast<T*>(p);
    for (std::size_t i = 0; i < n; ++i) ::new (static_cast<void*>(first + i)) T();
    return {first, n};
  }

  std::unique_ptr<T[]> owned_;
  std::span<T> slots_;
  std::uint64_t mask_;

  alignas(64) std::atomic<std::uint64_t> head_{0};
  std::uint64_t cached_tail_ = 0;  // producer-local
  alignas(64) std::atomic<std::uint64_t> tail_{0};
  std::uint64_t cached_head_ = 0;  // consumer-local
  alignas(64) std::atomic<std::uint64_t> dropped_{0};
};

}  // namespace kml::async
