#include "kml/sim/workload.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "kml/error.hpp"

namespace kml::sim {
namespace {

constexpr std::array<std::string_view, kWorkloadKindCount> kNames = {
    "readrandom", "readseq", "readrandomwriterandom", "readreverse", "updaterandom", "mixgraph"};

class Emitter {
 public:
  Emitter(Trace& trace, double ops_per_second) : trace_(trace), step_ns_(1e9 / ops_per_second) {}

  void access(std::uint64_t file_id, std::int64_t page) {
    TraceEvent e;
    e.timestamp_ns = static_cast<std::int64_t>(std::llround(static_cast<double>(index_++) * step_ns_));
    e.kind = EventKind::page_cache_add;
    e.file_id = file_id;
    e.offset = page;
    trace_.events.push_back(e);
  }

 private:
  Trace& trace_;
  double step_ns_;
  std::uint64_t index_ = 0;
};

// Region popularity ranks drawn from a truncated power law, mapped onto
// regions through a fixed permutation so hot spots are scattered.
class HotSpots {
 public:
  HotSpots(std::int64_t regions, double exponent, std::mt19937_64& rng) : cdf_(regions), region_of_rank_(regions) {
    double total = 0.0;
    for (std::int64_t r = 0; r < regions; ++r) {
      total += std::pow(static_cast<double>(r + 1), -exponent);
      cdf_[r] = total;
    }
    for (auto& c : cdf_) c /= total;
    std::iota(region_of_rank_.begin(), region_of_rank_.end(), 0);
    std::shuffle(region_of_rank_.begin(), region_of_rank_.end(), rng);
  }

  std::int64_t draw(std::mt19937_64& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return region_of_rank_[static_cast<std::size_t>(it - cdf_.begin())];
  }

 private:
  std::vector<double> cdf_;
  std::vector<std::int64_t> region_of_rank_;
};

}  // namespace

std::string_view to_string(WorkloadKind kind) { return kNames.at(static_cast<std::size_t>(kind)); }

std::optional<WorkloadKind> parse_workload(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<WorkloadKind>(i);
  }
  return std::nullopt;
}

int workload_class(WorkloadKind kind) {
  const auto v = static_cast<int>(kind);
  return v < static_cast<int>(kClassCount) ? v : -1;
}

std::string_view class_name(std::size_t cls) {
  if (cls >= kClassCount) throw ArgumentError("class index " + std::to_string(cls) + " out of range");
  return kNames[cls];
}

void validate(const WorkloadSpec& spec) {
  if (spec.file_count == 0) throw ArgumentError("workload needs at least one file");
  if (spec.file_size_pages <= 0) throw ArgumentError("file size must be positive");
  if (!(spec.duration_seconds > 0.0)) throw ArgumentError("duration must be positive");
  if (!(spec.ops_per_second > 0.0)) throw ArgumentError("ops per second must be positive");
  if (spec.writes_per_page <= 0) throw ArgumentError("writes per page must be positive");
  if (spec.kind == WorkloadKind::mixgraph) {
    const auto& m = spec.mixgraph;
    if (!(m.pareto_shape > 0.0) || !(m.power_law_exponent > 0.0) || m.region_pages <= 0 || m.max_run_pages <= 0) {
      throw ArgumentError("mixgraph parameters must be positive");
    }
    if (m.get_ratio < 0.0 || m.put_ratio < 0.0 || m.seek_ratio < 0.0 ||
        !(m.get_ratio + m.put_ratio + m.seek_ratio > 0.0)) {
      throw ArgumentError("mixgraph operation ratios must be non-negative and not all zero");
    }
  }
}

Trace generate_trace(const WorkloadSpec& spec) {
  validate(spec);
  Trace trace;
  for (std::size_t f = 0; f < spec.file_count; ++f) {
    trace.files.push_back({spec.first_file_id + f, spec.file_size_pages});
  }
  const std::uint64_t log_id = spec.first_file_id + spec.file_count;
  const bool has_log = spec.kind == WorkloadKind::readrandomwriterandom || spec.kind == WorkloadKind::mixgraph;
  if (has_log) trace.files.push_back({log_id, 0, true});

  const auto n = static_cast<std::uint64_t>(std::llround(spec.duration_seconds * spec.ops_per_second));
  trace.events.reserve(n);
  Emitter emit(trace, spec.ops_per_second);
  std::mt19937_64 rng(spec.seed);
  const auto files = static_cast<std::int64_t>(spec.file_count);
  const std::int64_t size = spec.file_size_pages;
  const std::int64_t total_pages = files * size;
  std::uniform_int_distribution<std::int64_t> any_page(0, total_pages - 1);
  auto file_of = [&](std::int64_t global) { return spec.first_file_id + static_cast<std::uint64_t>(global / size); };

  switch (spec.kind) {
    case WorkloadKind::readrandom:
      for (std::uint64_t i = 0; i < n; ++i) {
        const auto g = any_page(rng);
        emit.access(file_of(g), g % size);
      }
      break;
    case WorkloadKind::readseq:
      for (std::uint64_t i = 0; i < n; ++i) {
        const auto g = static_cast<std::int64_t>(i % static_cast<std::uint64_t>(total_pages));
        emit.access(file_of(g), g % size);
      }
      break;
    case WorkloadKind::readreverse:
      for (std::uint64_t i = 0; i < n; ++i) {
        const auto g = total_pages - 1 - static_cast<std::int64_t>(i % static_cast<std::uint64_t>(total_pages));
        emit.access(file_of(g), g % size);
      }
      break;
    case WorkloadKind::readrandomwriterandom: {
      std::int64_t writes = 0;
      for (std::uint64_t i = 0; i < n; ++i) {
        if (i % 2 == 0) {
          const auto g = any_page(rng);
          emit.access(file_of(g), g % size);
        } else {
          emit.access(log_id, writes++ / spec.writes_per_page);
        }
      }
      break;
    }
    case WorkloadKind::updaterandom: {
      std::int64_t g = 0;
      for (std::uint64_t i = 0; i < n; ++i) {
        if (i % 2 == 0) g = any_page(rng);
        emit.access(file_of(g), g % size);
      }
      break;
    }
    case WorkloadKind::mixgraph: {
      const auto& m = spec.mixgraph;
      const std::int64_t region = std::min(m.region_pages, total_pages);
      const std::int64_t regions = std::max<std::int64_t>(1, total_pages / region);
      HotSpots hot(regions, m.power_law_exponent, rng);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double total_ratio = m.get_ratio + m.put_ratio + m.seek_ratio;
      std::int64_t writes = 0;
      std::uint64_t i = 0;
      while (i < n) {
        const double op = unit(rng) * total_ratio;
        if (op >= m.get_ratio && op < m.get_ratio + m.put_ratio) {
          emit.access(log_id, writes++ / spec.writes_per_page);
          ++i;
          continue;
        }
        const std::int64_t base = hot.draw(rng) * region;
        std::int64_t start = base + std::uniform_int_distribution<std::int64_t>(0, region - 1)(rng);
        std::int64_t run = 1;
        if (op >= m.get_ratio + m.put_ratio) {
          const double u = 1.0 - unit(rng);  // (0, 1]
          const double length = std::floor(std::pow(u, -1.0 / m.pareto_shape));
          run = static_cast<std::int64_t>(std::min(length, static_cast<double>(m.max_run_pages)));
        }
        run = std::min(run, total_pages - start);
        for (std::int64_t k = 0; k < run && i < n; ++k, ++i) {
          const auto g = start + k;
          emit.access(file_of(g), g % size);
        }
      }
      break;
    }
  }
  return trace;
}

Trace trace_from_events(std::vector<TraceEvent> events) {
  Trace trace;
  std::map<std::uint64_t, std::int64_t> extent;
  for (const auto& e : events) {
    auto& pages = extent[e.file_id];
    pages = std::max(pages, e.offset + 1);
  }
  for (const auto& [id, pages] : extent) trace.files.push_back({id, pages});
  trace.events = std::move(events);
  return trace;
}

}  // namespace kml::sim
