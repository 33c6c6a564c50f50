#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <thread>

#include "kml/features.hpp"
#include "kml/model.hpp"
#include "kml/ring_buffer.hpp"

namespace kml::async {

using FeatureRing = SpscRing<FeatureVector>;

/// Memory reserved once at setup. Grants are carved from a block allocated
/// up front; asking for more than remains fails immediately and leaves the
/// earlier grants untouched.
class ReservedPool {
 public:
  explicit ReservedPool(std::size_t reserved_bytes);

  /// Throws ArgumentError for 0 bytes, ReservationError when the remainder
  /// cannot cover `bytes`.
  std::span<std::byte> reserve(std::size_t bytes);

  std::size_t reserved_bytes() const { return reserved_; }
  std::size_t used_bytes() const { return used_; }
  std::size_t remaining_bytes() const { return reserved_ - used_; }

 private:
  std::unique_ptr<std::byte[]> block_;
  std::size_t reserved_;
  std::size_t used_ = 0;
};

/// Reserves the model's working set from `pool`; an undersized pool fails
/// here, at setup, rather than inside the loop.
void reserve_for(ReservedPool& pool, const ModelBundle& model);

enum class LoopMode : std::uint8_t { train, infer };

struct LoopResult {
  const FeatureVector* item = nullptr;
  std::size_t predicted = 0;  // infer mode
  float loss = 0.0f;          // train mode
};

using LoopCallback = std::function<void(const LoopResult&)>;
using LoopLogger = std::function<void(std::string_view)>;

struct LoopStats {
  std::uint64_t processed = 0;
  std::uint64_t skipped = 0;
};

/// Drains `ring` on the calling thread. Infer mode classifies each item and
/// hands the result to `callback`; train mode streams each labeled item
/// through the normaliser and one SGD iteration. Items whose width does not
/// match the model (or unlabeled items in train mode) are logged and
/// skipped. Returns once `stop` is set and the ring is empty.
LoopStats run_consumer_loop(FeatureRing& ring, LoopMode mode, ModelBundle& model, const LoopCallback& callback,
                            const std::atomic<bool>& stop, const LoopLogger& log = {});

/// Owns the single asynchronous training/inference thread for one ring.
class ConsumerThread {
 public:
  ConsumerThread(FeatureRing& ring, LoopMode mode, ModelBundle& model, LoopCallback callback,
                 LoopLogger log = {});
  ~ConsumerThread();

  ConsumerThread(const ConsumerThread&) = delete;
  ConsumerThread& operator=(const ConsumerThread&) = delete;

  /// Requests shutdown, waits for the queue to drain, and returns totals.
  LoopStats stop();

 private:
  std::atomic<bool> stop_{false};
  LoopStats stats_;
  std::thread thread_;
};

}  // namespace kml::async
