#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <unordered_set>
#include <vector>

#include "kml/features.hpp"
#include "kml/trace.hpp"

namespace kml::pipeline {

enum class Scope : std::uint8_t { per_disk, per_file };

inline constexpr std::int64_t kNanosPerSecond = 1'000'000'000;

/// Per-second, per-scope accumulators. Offset statistics over page cache
/// events are cumulative across the run; every other field covers only the
/// window's own second. Times are nanoseconds.
struct WindowState {
  std::uint64_t scope_key = 0;
  std::int64_t second = 0;
  std::uint64_t count = 0;

  // Cumulative moving statistics of page offsets (Welford).
  std::uint64_t offsets_seen = 0;
  double offset_mean = 0.0;
  double offset_m2 = 0.0;

  // |offset - previous offset| over consecutive page cache events.
  double abs_diff_sum = 0.0;
  std::uint64_t abs_diff_count = 0;
  // Mean absolute difference of the latest window that had any.
  double carried_abs_diff = 0.0;

  double latency_sum = 0.0;
  std::uint64_t latency_count = 0;
  double read_gap_sum = 0.0;
  std::uint64_t read_gap_count = 0;
  double done_gap_sum = 0.0;
  std::uint64_t done_gap_count = 0;
  double request_diff_sum = 0.0;
  std::uint64_t request_diff_count = 0;
  double reclaimed_sum = 0.0;
  std::uint64_t shrink_count = 0;

  double cumulative_std() const {
    return offsets_seen == 0 ? 0.0 : std::sqrt(offset_m2 / static_cast<double>(offsets_seen));
  }
  /// Window-local mean absolute offset difference, falling back to the last
  /// window that observed one.
  double mean_abs_offset_diff() const {
    return abs_diff_count == 0 ? carried_abs_diff : abs_diff_sum / static_cast<double>(abs_diff_count);
  }
};

/// Streams trace events into one WindowState per elapsed second per scope
/// key. Per-disk scope uses key 0, per-file scope keys on file_id. A key's
/// first window is the second its first event falls in.
class WindowAggregator {
 public:
  explicit WindowAggregator(Scope scope, std::vector<std::uint64_t> file_filter = {});

  /// Finalises every window before `second` into `out`. Idle keys produce
  /// windows with count 0.
  void advance_to(std::int64_t second, std::vector<WindowState>& out);

  /// Adds one event; windows closed by the time advance go to `out`.
  /// Throws IngestError when timestamps go backwards.
  void ingest(const TraceEvent& event, std::vector<WindowState>& out);

  /// Closes the current second.
  void flush(std::vector<WindowState>& out);

  std::int64_t current_second() const { return current_second_; }
  std::size_t key_count() const { return keys_.size(); }
  Scope scope() const { return scope_; }

 private:
  struct PendingRead {
    std::int64_t timestamp_ns;
    std::int64_t second;
  };
  struct Accumulator {
    WindowState state;
    bool has_page = false;
    std::int64_t last_page = 0;
    bool has_request = false;
    std::int64_t last_request = 0;
    bool has_read_ts = false;
    std::int64_t last_read_ts = 0;
    bool has_done_ts = false;
    std::int64_t last_done_ts = 0;
    std::map<std::pair<std::uint64_t, std::int64_t>, std::deque<PendingRead>> pending;
  };

  void close_current(std::vector<WindowState>& out);
  static void reset_window(WindowState& s);

  Scope scope_;
  std::unordered_set<std::uint64_t> filter_;
  std::map<std::uint64_t, Accumulator> keys_;
  std::int64_t current_second_ = 0;
  std::int64_t last_timestamp_ = 0;
  std::uint64_t ingested_ = 0;
  bool started_ = false;
};

/// Batch form of WindowAggregator over an ordered event list; windows come
/// back ordered by second, then key.
std::vector<WindowState> window_aggregate(std::span<const TraceEvent> events, Scope scope,
                                          std::vector<std::uint64_t> file_filter = {});

/// [transactions/s, cumulative mean offset, mean |offset diff|, readahead].
FeatureVector extract_readahead_features(const WindowState& state, double current_readahead_sectors);

/// The eight NFS features; times in microseconds, offsets in pages, rsize in
/// bytes. Windows without events yield zeros apart from the rsize.
FeatureVector extract_nfs_features(const WindowState& state, double current_rsize_bytes);

/// Streaming per-feature mean/variance (Welford) with Z-score output.
/// Z-scores are computed from the single-precision snapshot of the
/// statistics, so a normaliser restored from a model file behaves
/// identically to the one that was saved.
class NormalizerState {
 public:
  static constexpr double kStdFloor = 1e-6;

  explicit NormalizerState(std::size_t features = 0);

  /// Restores a frozen snapshot (as stored in model files).
  static NormalizerState from_snapshot(std::span<const float> mean, std::span<const float> variance);

  void observe(std::span<const float> raw);
  /// Z-scores `raw` into `out` without updating the statistics.
  void apply(std::span<const float> raw, std::span<float> out) const;
  /// Updates the statistics with `raw`, then Z-scores it.
  void normalize(std::span<const float> raw, std::span<float> out);
  FeatureVector normalize(const FeatureVector& raw);

  std::size_t size() const { return mean_.size(); }
  std::uint64_t count() const { return count_; }
  float snapshot_mean(std::size_t i) const { return static_cast<float>(mean_[i]); }
  float snapshot_variance(std::size_t i) const;
  double mean(std::size_t i) const { return mean_[i]; }
  double variance(std::size_t i) const;

 private:
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::uint64_t count_ = 0;
};

}  // namespace kml::pipeline
