#pragma once

#include <cstdint>

#include "kml/sim/calibrate.hpp"
#include "kml/sim/nfs.hpp"
#include "kml/sim/workload.hpp"

namespace kml::sim {

/// Readahead experiments: one 32768-page file, 30 simulated seconds.
inline WorkloadSpec readahead_base_spec() { return WorkloadSpec{}; }

/// NFS experiments: one 16384-page file, 40000 accesses per iteration.
inline WorkloadSpec nfs_base_spec() {
  WorkloadSpec spec;
  spec.file_size_pages = 16384;
  spec.duration_seconds = 2.0;
  spec.ops_per_second = 20000.0;
  return spec;
}

/// Training data for the readahead classifier: all four classes at every
/// default candidate on both devices, plus 40 back-to-back sequences.
inline CollectionPlan default_readahead_plan(std::uint64_t seed) {
  CollectionPlan plan;
  plan.base = readahead_base_spec();
  const auto candidates = default_readahead_candidates();
  plan.readahead_values.assign(candidates.begin(), candidates.end());
  plan.devices = {DeviceModel::nvme(), DeviceModel::sata()};
  plan.seconds_per_run = 20.0;
  plan.sequence_runs = 40;
  plan.seed = seed;
  return plan;
}

/// Training data for the rsize classifier: all four classes at every rsize
/// on both network presets, 20 simulated seconds each.
inline NfsCollectionPlan default_nfs_plan(std::uint64_t seed) {
  NfsCollectionPlan plan;
  plan.base = nfs_base_spec();
  plan.base.seed = seed;
  plan.networks = {NetworkModel::lan(), NetworkModel::slow()};
  plan.seconds_per_run = 20.0;
  return plan;
}

}  // namespace kml::sim
