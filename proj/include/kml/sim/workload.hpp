#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kml/trace.hpp"

namespace kml::sim {

enum class WorkloadKind : std::uint8_t {
  readrandom = 0,
  readseq = 1,
  readrandomwriterandom = 2,
  readreverse = 3,
  updaterandom = 4,
  mixgraph = 5,
};

inline constexpr std::size_t kClassCount = 4;
inline constexpr std::size_t kWorkloadKindCount = 6;

std::string_view to_string(WorkloadKind kind);
std::optional<WorkloadKind> parse_workload(std::string_view name);
/// Class index of a trained workload kind, -1 for the unseen ones.
int workload_class(WorkloadKind kind);
std::string_view class_name(std::size_t cls);

/// Operation mix of gets (one page), puts (log appends) and seeks (a
/// sequential scan); every get and seek lands in a power-law-popular region.
struct MixgraphParams {
  double get_ratio = 0.85;
  double put_ratio = 0.14;
  double seek_ratio = 0.01;
  double pareto_shape = 1.5;        // scan lengths: Pareto(x_min = 1 page)
  double power_law_exponent = 1.2;  // region popularity ~ rank^-exponent
  std::int64_t region_pages = 64;
  std::int64_t max_run_pages = 256;
};

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::readrandom;
  std::size_t file_count = 1;
  std::int64_t file_size_pages = 32768;
  double duration_seconds = 30.0;
  double ops_per_second = 30000.0;  // nominal rate used for event timestamps
  std::uint64_t seed = 1;
  MixgraphParams mixgraph;
  std::uint64_t first_file_id = 1;
  std::int64_t writes_per_page = 1;  // log appends per page
};

/// Throws ArgumentError when a count is not positive.
void validate(const WorkloadSpec& spec);

struct FileExtent {
  std::uint64_t file_id = 0;
  std::int64_t pages = 0;  // existing pages; accesses at or past the end append
  /// Written-only files (logs): a non-resident page is overwritten in
  /// memory, never read from the device.
  bool write_only = false;
};

/// An application access stream: one page_cache_add event per page
/// operation, plus the files it touches.
struct Trace {
  std::vector<TraceEvent> events;
  std::vector<FileExtent> files;
};

/// duration_seconds * ops_per_second accesses. Workloads with writes
/// (readrandomwriterandom, mixgraph puts) append to a log file with id
/// first_file_id + file_count that starts empty.
Trace generate_trace(const WorkloadSpec& spec);

/// Wraps events read from a trace file; every file is assumed to exist up
/// to the largest offset accessed.
Trace trace_from_events(std::vector<TraceEvent> events);

}  // namespace kml::sim
