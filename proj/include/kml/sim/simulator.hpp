#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kml/features.hpp"
#include "kml/model.hpp"
#include "kml/sim/cache.hpp"
#include "kml/sim/workload.hpp"

namespace kml::sim {

enum class TuningMode : std::uint8_t { vanilla_fixed, per_disk, per_file };

std::string_view to_string(TuningMode mode);

inline constexpr int kDefaultReadahead = 256;
inline constexpr int kMinReadahead = 8;
inline constexpr int kMaxReadahead = 1024;
inline constexpr std::array<int, 7> kRsizeValues = {4096, 8192, 16384, 32768, 65536, 131072, 262144};
inline constexpr int kDefaultRsize = 262144;

/// Parameter value per workload class, indexed by class.
using ClassMap = std::array<int, kClassCount>;

struct TunerPolicy {
  TuningMode mode = TuningMode::vanilla_fixed;
  ModelKind model_kind = ModelKind::nn;
  ClassMap readahead_map = {kDefaultReadahead, kDefaultReadahead, kDefaultReadahead, kDefaultReadahead};
  ClassMap rsize_map = {kDefaultRsize, kDefaultRsize, kDefaultRsize, kDefaultRsize};
  /// Readahead (sectors) of every file at start; the fixed value in vanilla mode.
  int initial_readahead = kDefaultReadahead;
};

/// Throws ConfigError when a mapped value is outside 8..1024 sectors or not
/// one of the supported rsize values.
void validate(const TunerPolicy& policy);

struct Phase {
  Trace trace;
  double duration_seconds = 0.0;
  int label = -1;  // class of the phase, -1 when it has none
  std::string name;
};

/// One application stream; its phases run back to back on its own clock.
struct Job {
  std::string name;
  std::vector<Phase> phases;
};

Phase make_phase(const WorkloadSpec& spec);
Job single_job(const WorkloadSpec& spec);

struct SimOptions {
  /// Keep each second's raw feature vectors, labeled with the active phase.
  bool record_features = false;
  std::size_t ring_capacity = 4096;
};

struct StreamReport {
  std::string name;
  std::uint64_t ops = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t appends = 0;
  std::uint64_t pages_read = 0;
  double seconds = 0.0;
  double throughput = 0.0;  // ops per simulated second
};

/// One row per (second, file).
struct TimelineRow {
  std::int64_t second = 0;
  std::uint64_t file_id = 0;
  std::size_t job = 0;
  std::uint64_t ops = 0;   // operations completed on the file in this second
  int readahead = 0;       // sectors in effect during the second
  int predicted = -1;      // class predicted at the end of the second
  int truth = -1;          // class of the job's active phase
};

struct RunReport {
  std::vector<StreamReport> streams;
  double aggregate_throughput = 0.0;
  std::vector<TimelineRow> timeline;
  std::vector<FeatureVector> features;
  std::uint64_t decisions = 0;
  std::uint64_t dropped_features = 0;
  std::size_t max_resident_pages = 0;
};

/// Replays the jobs concurrently against one page cache. Each access is
/// charged by the device model; misses fetch the page plus readahead / 8
/// neighbouring pages in the stream's direction. Every page inserted into the
/// cache is observed as a page_cache_add event. At each simulated second the
/// closed windows go through the feature pipeline to the consumer thread,
/// and the decisions it posts back set readahead at the policy's scope.
/// `model` may be null in vanilla mode. Throws IngestError for events other
/// than page_cache_add and ConfigError for an unusable model or policy.
RunReport simulate(std::span<const Job> jobs, const CacheSim& cache, const TunerPolicy& policy, ModelBundle* model,
                   const SimOptions& options = {});

}  // namespace kml::sim
