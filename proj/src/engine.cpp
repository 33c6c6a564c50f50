#include "kml/engine.hpp"

#include <iostream>
#include <string>

#include "kml/error.hpp"

namespace kml::async {

ReservedPool::ReservedPool(std::size_t reserved_bytes)
    : block_(reserved_bytes == 0 ? nullptr : new std::byte[reserved_bytes]), reserved_(reserved_bytes) {}

std::span<std::byte> ReservedPool::reserve(std::size_t bytes) {
  if (bytes == 0) throw ArgumentError("reserve: zero bytes requested");
  if (bytes > remaining_bytes()) {
    throw ReservationError("reserve: " + std::to_string(bytes) + " bytes requested, " +
                           std::to_string(remaining_bytes()) + " of " + std::to_string(reserved_) + " remain");
  }
  std::span<std::byte> grant(block_.get() + used_, bytes);
  used_ += bytes;
  return grant;
}

void reserve_for(ReservedPool& pool, const ModelBundle& model) { pool.reserve(model.dynamic_bytes()); }

namespace {

void report(const LoopLogger& log, const std::string& message) {
  if (log) {
    log(message);
  } else {
    std::cerr << "kml: " << message << '\n';
  }
}

bool process(const FeatureVector& item, LoopMode mode, ModelBundle& model, const LoopCallback& callback,
             const LoopLogger& log) {
  if (item.size != model.feature_count()) {
    report(log, "skipping item with " + std::to_string(item.size) + " features; model expects " +
                    std::to_string(model.feature_count()));
    return false;
  }
  LoopResult result;
  result.item = &item;
  if (mode == LoopMode::infer) {
    result.predicted = model.classify(item.data());
  } else {
    if (model.kind() != ModelKind::nn) {
      report(log, "skipping item: only networks train online");
      return false;
    }
    if (item.label < 0 || static_cast<std::size_t>(item.label) >= model.class_count()) {
      report(log, "skipping item with label " + std::to_string(item.label));
      return false;
    }
    result.loss = model.train(item.data(), static_cast<std::size_t>(item.label));
  }
  if (callback) callback(result);
  return true;
}

}  // namespace

LoopStats run_consumer_loop(FeatureRing& ring, LoopMode mode, ModelBundle& model, const LoopCallback& callback,
                            const std::atomic<bool>& stop, const LoopLogger& log) {
  LoopStats stats;
  FeatureVector item;
  for (;;) {
    if (ring.pop(item)) {
      if (process(item, mode, model, callback, log)) {
        ++stats.processed;
      } else {
        ++stats.skipped;
      }
      continue;
    }
    if (stop.load(std::memory_order_acquire)) {
      // The producer has finished; whatever is still queued gets processed.
      if (!ring.pop(item)) break;
      if (process(item, mode, model, callback, log)) {
        ++stats.processed;
      } else {
        ++stats.skipped;
      }
      continue;
    }
    std::this_thread::yield();
  }
  return stats;
}

ConsumerThread::ConsumerThread(FeatureRing& ring, LoopMode mode, ModelBundle& model, LoopCallback callback,
                               LoopLogger log)
    : thread_([this, &ring, mode, &model, cb = std::move(callback), lg = std::move(log)] {
        stats_ = run_consumer_loop(ring, mode, model, cb, stop_, lg);
      }) {}

ConsumerThread::~ConsumerThread() { stop(); }

LoopStats ConsumerThread::stop() {
  stop_.store(true, std::memory_order_release);
  if (thread_.joinable()) thread_.join();
  return stats_;
}

}  // namespace kml::async
