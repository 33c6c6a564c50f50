#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kml/dataset.hpp"
#include "kml/features.hpp"
#include "kml/model.hpp"
#include "kml/sim/simulator.hpp"
#include "kml/sim/workload.hpp"

namespace kml::sim {

/// Cost of one NFS READ: rtt_ns + bytes / bytes_per_ns + server_ns.
struct NetworkModel {
  std::string name;
  double rtt_ns = 0.0;
  double bytes_per_ns = 0.0;
  double server_ns = 0.0;
  double hit_ns = 0.0;

  static NetworkModel lan();
  static NetworkModel slow();
};

std::optional<NetworkModel> network_by_name(std::string_view name);

struct NfsSim {
  std::size_t cache_pages = 4096;
  NetworkModel network = NetworkModel::lan();
};

/// Mapped rsize for a predicted class. Throws ArgumentError when
/// `prediction` is not a class index.
int tune_rsize(std::size_t prediction, const TunerPolicy& policy);

struct NfsOptions {
  std::size_t iterations = 4;
  /// Stop once this much simulated time has passed (0: run every iteration).
  double max_seconds = 0.0;
  int fixed_rsize = kDefaultRsize;  // vanilla mode, and the first tuned iteration
  bool record_features = false;
  std::size_t ring_capacity = 4096;
};

struct NfsIteration {
  int rsize = 0;
  int latched_class = -1;  // class the rsize was mapped from, -1 when fixed
  std::uint64_t ops = 0;
  double seconds = 0.0;
  double throughput = 0.0;
};

struct NfsTimelineRow {
  std::int64_t second = 0;
  std::size_t iteration = 0;
  std::uint64_t events = 0;
  int rsize = 0;
  int predicted = -1;
};

struct NfsRunReport {
  std::vector<NfsIteration> iterations;
  double throughput = 0.0;         // all iterations
  double steady_throughput = 0.0;  // iterations after the first
  std::vector<NfsTimelineRow> timeline;
  std::vector<FeatureVector> features;
  std::vector<TraceEvent> events;  // observed client events, when recorded
  std::uint64_t decisions = 0;
};

/// Replays `trace` `iterations` times through an NFS client cache. A miss
/// issues one READ for the rsize-aligned chunk holding the page; the client
/// observes nfs_read, nfs_readpage_done, page_cache_add and lru_shrink
/// events. In per-disk mode a prediction is made every simulated second and
/// the rsize is latched at the start of each iteration from the most
/// frequent class predicted during the previous one. `label` tags recorded
/// features. Throws ConfigError for per-file mode or an unusable model.
NfsRunReport simulate_nfs(const Trace& trace, int label, const NfsSim& sim, const TunerPolicy& policy,
                          ModelBundle* model, const NfsOptions& options = {}, bool record_events = false);

struct RsizeCalibration {
  ClassMap map{};
  std::array<std::vector<std::pair<int, double>>, kClassCount> sweeps;
};

/// Fixed-rsize throughput over the supported values for one workload.
std::vector<std::pair<int, double>> sweep_rsize(const WorkloadSpec& spec, const NfsSim& sim,
                                                std::size_t iterations);

RsizeCalibration calibrate_rsize(std::span<const WorkloadSpec> specs, const NfsSim& sim, std::size_t iterations);

struct NfsCollectionPlan {
  WorkloadSpec base;
  std::vector<NetworkModel> networks = {NetworkModel::lan()};
  double seconds_per_run = 20.0;
};

/// Per-second NFS feature vectors for every (network, class, rsize) run.
Dataset collect_nfs_dataset(const NfsCollectionPlan& plan, const NfsSim& sim);

}  // namespace kml::sim
