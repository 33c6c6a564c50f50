#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kml/dataset.hpp"
#include "kml/sim/cache.hpp"
#include "kml/sim/simulator.hpp"
#include "kml/sim/workload.hpp"

namespace kml::sim {

/// Twenty readahead sizes spanning 8..1024 sectors.
std::span<const int> default_readahead_candidates();

struct SweepPoint {
  int value = 0;
  double throughput = 0.0;
};

struct Calibration {
  ClassMap map{};
  std::array<std::vector<SweepPoint>, kClassCount> sweeps;
};

/// Throughput of `spec` under each fixed readahead value (vanilla policy).
std::vector<SweepPoint> sweep_readahead(const WorkloadSpec& spec, const CacheSim& cache,
                                        std::span<const int> candidates);

/// Value with the highest throughput; the earliest candidate wins ties.
int best_value(std::span<const SweepPoint> sweep);

/// Sweeps every candidate for each spec and maps the spec's class to the
/// argmax value. Classes without a spec keep the default readahead. Throws
/// ConfigError for an empty candidate list.
Calibration calibrate_mapping(std::span<const WorkloadSpec> specs, const CacheSim& cache,
                              std::span<const int> candidates);

/// The four trained workload kinds with `base`'s other parameters.
std::vector<WorkloadSpec> class_specs(const WorkloadSpec& base);

struct CollectionPlan {
  WorkloadSpec base;                      // kind is overridden per run
  std::vector<int> readahead_values;      // fixed readahead per run
  std::vector<DeviceModel> devices = {DeviceModel::nvme()};
  double seconds_per_run = 20.0;
  /// Extra runs of all four classes back to back in random order, so the
  /// cumulative statistics also cover workloads that follow other ones.
  std::size_t sequence_runs = 0;
  double sequence_phase_seconds = 8.0;
  std::uint64_t seed = 1;
};

/// Runs every (device, class, readahead) combination with a fixed readahead
/// and returns the per-second per-disk feature vectors labeled by class.
Dataset collect_readahead_dataset(const CollectionPlan& plan, const CacheSim& cache);

}  // namespace kml::sim
