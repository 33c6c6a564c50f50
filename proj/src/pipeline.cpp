#include "kml/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "kml/error.hpp"

namespace kml::pipeline {

WindowAggregator::WindowAggregator(Scope scope, std::vector<std::uint64_t> file_filter)
    : scope_(scope), filter_(file_filter.begin(), file_filter.end()) {}

void WindowAggregator::reset_window(WindowState& s) {
  if (s.abs_diff_count > 0) s.carried_abs_diff = s.abs_diff_sum / static_cast<double>(s.abs_diff_count);
  s.count = 0;
  s.abs_diff_sum = 0.0;
  s.abs_diff_count = 0;
  s.latency_sum = 0.0;
  s.latency_count = 0;
  s.read_gap_sum = 0.0;
  s.read_gap_count = 0;
  s.done_gap_sum = 0.0;
  s.done_gap_count = 0;
  s.request_diff_sum = 0.0;
  s.request_diff_count = 0;
  s.reclaimed_sum = 0.0;
  s.shrink_count = 0;
}

void WindowAggregator::close_current(std::vector<WindowState>& out) {
  for (auto& [key, acc] : keys_) {
    acc.state.second = current_second_;
    out.push_back(acc.state);
    reset_window(acc.state);
  }
}

void WindowAggregator::advance_to(std::int64_t second, std::vector<WindowState>& out) {
  if (!started_) {
    current_second_ = second;
    started_ = true;
    return;
  }
  while (current_second_ < second) {
    close_current(out);
    ++current_second_;
  }
}

void WindowAggregator::flush(std::vector<WindowState>& out) {
  if (!started_) return;
  close_current(out);
  ++current_second_;
}

void WindowAggregator::ingest(const TraceEvent& e, std::vector<WindowState>& out) {
  const std::uint64_t index = ingested_++;
  if (e.timestamp_ns < 0) {
    throw IngestError("event " + std::to_string(index) + ": negative timestamp");
  }
  if (index > 0 && e.timestamp_ns < last_timestamp_) {
    throw IngestError("event " + std::to_string(index) + ": timestamp " + std::to_string(e.timestamp_ns) +
                      " precedes " + std::to_string(last_timestamp_));
  }
  last_timestamp_ = e.timestamp_ns;
  const std::int64_t second = e.timestamp_ns / kNanosPerSecond;
  if (started_ && second < current_second_) {
    throw IngestError("event " + std::to_string(index) + ": falls in closed second " + std::to_string(second));
  }
  advance_to(second, out);
  if (!filter_.empty() && filter_.count(e.file_id) == 0) return;

  const std::uint64_t key = scope_ == Scope::per_file ? e.file_id : 0;
  auto [it, inserted] = keys_.try_emplace(key);
  Accumulator& acc = it->second;
  if (inserted) {
    acc.state.scope_key = key;
    acc.state.second = second;
  }
  WindowState& s = acc.state;
  ++s.count;

  switch (e.kind) {
    case EventKind::page_cache_add: {
      const auto x = static_cast<double>(e.offset);
      ++s.offsets_seen;
      const double delta = x - s.offset_mean;
      s.offset_mean += delta / static_cast<double>(s.offsets_seen);
      s.offset_m2 += delta * (x - s.offset_mean);
      if (acc.has_page) {
        s.abs_diff_sum += static_cast<double>(std::llabs(e.offset - acc.last_page));
        ++s.abs_diff_count;
      }
      acc.has_page = true;
      acc.last_page = e.offset;
      break;
    }
    case EventKind::nfs_read: {
      if (acc.has_read_ts) {
        s.read_gap_sum += static_cast<double>(e.timestamp_ns - acc.last_read_ts);
        ++s.read_gap_count;
      }
      acc.has_read_ts = true;
      acc.last_read_ts = e.timestamp_ns;
      if (acc.has_request) {
        s.request_diff_sum += static_cast<double>(std::llabs(e.offset - acc.last_request));
        ++s.request_diff_count;
      }
      acc.has_request = true;
      acc.last_request = e.offset;
      acc.pending[{e.file_id, e.offset}].push_back({e.timestamp_ns, second});
      break;
    }
    case EventKind::nfs_readpage_done: {
      if (acc.has_done_ts) {
        s.done_gap_sum += static_cast<double>(e.timestamp_ns - acc.last_done_ts);
        ++s.done_gap_count;
      }
      acc.has_done_ts = true;
      acc.last_done_ts = e.timestamp_ns;
      auto p = acc.pending.find({e.file_id, e.offset});
      if (p != acc.pending.end() && !p->second.empty()) {
        const PendingRead read = p->second.front();
        p->second.pop_front();
        if (p->second.empty()) acc.pending.erase(p);
        // Pairs straddling a window edge are left out of the latency mean.
        if (read.second == second) {
          s.latency_sum += static_cast<double>(e.timestamp_ns - read.timestamp_ns);
          ++s.latency_count;
        }
      }
      break;
    }
    case EventKind::lru_shrink:
      s.reclaimed_sum += static_cast<double>(e.reclaimed_pages);
      ++s.shrink_count;
      break;
  }
}

std::vector<WindowState> window_aggregate(std::span<const TraceEvent> events, Scope scope,
                                          std::vector<std::uint64_t> file_filter) {
  WindowAggregator agg(scope, std::move(file_filter));
  std::vector<WindowState> out;
  for (const auto& e : events) agg.ingest(e, out);
  agg.flush(out);
  return out;
}

namespace {
double mean_or_zero(double sum, std::uint64_t n) { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
}  // namespace

FeatureVector extract_readahead_features(const WindowState& s, double current_readahead_sectors) {
  FeatureVector fv;
  fv.schema = FeatureSchema::readahead;
  fv.size = 4;
  fv.scope_key = s.scope_key;
  fv.second = s.second;
  fv[readahead_feature::transactions_per_second] = static_cast<float>(s.count);
  fv[readahead_feature::cumulative_mean_offset] = static_cast<float>(s.offset_mean);
  fv[readahead_feature::mean_abs_offset_diff] = static_cast<float>(s.mean_abs_offset_diff());
  fv[readahead_feature::current_readahead] = static_cast<float>(current_readahead_sectors);
  return fv;
}

FeatureVector extract_nfs_features(const WindowState& s, double current_rsize_bytes) {
  constexpr double kMicros = 1e-3;
  FeatureVector fv;
  fv.schema = FeatureSchema::nfs;
  fv.size = 8;
  fv.scope_key = s.scope_key;
  fv.second = s.second;
  fv[nfs_feature::transactions_per_second] = static_cast<float>(s.count);
  fv[nfs_feature::mean_read_to_done_latency] = static_cast<float>(mean_or_zero(s.latency_sum, s.latency_count) * kMicros);
  fv[nfs_feature::mean_read_interarrival] = static_cast<float>(mean_or_zero(s.read_gap_sum, s.read_gap_count) * kMicros);
  fv[nfs_feature::mean_done_interarrival] = static_cast<float>(mean_or_zero(s.done_gap_sum, s.done_gap_count) * kMicros);
  fv[nfs_feature::mean_abs_requested_offset_diff] = static_cast<float>(mean_or_zero(s.request_diff_sum, s.request_diff_count));
  fv[nfs_feature::mean_abs_page_offset_diff] = static_cast<float>(mean_or_zero(s.abs_diff_sum, s.abs_diff_count));
  fv[nfs_feature::mean_reclaimed_pages] = static_cast<float>(mean_or_zero(s.reclaimed_sum, s.shrink_count));
  fv[nfs_feature::current_rsize] = static_cast<float>(current_rsize_bytes);
  return fv;
}

NormalizerState::NormalizerState(std::size_t features) : mean_(features, 0.0), m2_(features, 0.0) {}

NormalizerState NormalizerState::from_snapshot(std::span<const float> mean, std::span<const float> variance) {
  if (mean.size() != variance.size()) throw ShapeError("normalizer snapshot: mean/variance length differ");
  NormalizerState n(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (!std::isfinite(mean[i]) || !std::isfinite(variance[i]) || variance[i] < 0.0f) {
      throw NumericError("normalizer snapshot: invalid statistics for feature " + std::to_string(i));
    }
    n.mean_[i] = mean[i];
    n.m2_[i] = variance[i];
  }
  n.count_ = 1;
  return n;
}

double NormalizerState::variance(std::size_t i) const {
  return count_ == 0 ? 0.0 : m2_[i] / static_cast<double>(count_);
}

float NormalizerState::snapshot_variance(std::size_t i) const { return static_cast<float>(variance(i)); }

void NormalizerState::observe(std::span<const float> raw) {
  if (raw.size() != mean_.size()) {
    throw ShapeError("normalizer expects " + std::to_string(mean_.size()) + " features, got " +
                     std::to_string(raw.size()));
  }
  for (float v : raw) {
    if (!std::isfinite(v)) throw NumericError("normalizer: non-finite feature value");
  }
  ++count_;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double x = raw[i];
    const double delta = x - mean_[i];
    mean_[i] += delta / static_cast<double>(count_);
    m2_[i] += delta * (x - mean_[i]);
  }
}

void NormalizerState::apply(std::span<const float> raw, std::span<float> out) const {
  if (raw.size() != mean_.size() || out.size() != raw.size()) {
    throw ShapeError("normalizer expects " + std::to_string(mean_.size()) + " features, got " +
                     std::to_string(raw.size()));
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) throw NumericError("normalizer: non-finite feature value");
    const double mean = snapshot_mean(i);
    const double sd = std::max(std::sqrt(static_cast<double>(snapshot_variance(i))), kStdFloor);
    out[i] = static_cast<float>((static_cast<double>(raw[i]) - mean) / sd);
  }
}

void NormalizerState::normalize(std::span<const float> raw, std::span<float> out) {
  observe(raw);
  apply(raw, out);
}

FeatureVector NormalizerState::normalize(const FeatureVector& raw) {
  FeatureVector out = raw;
  normalize(raw.data(), out.data());
  return out;
}

}  // namespace kml::pipeline
