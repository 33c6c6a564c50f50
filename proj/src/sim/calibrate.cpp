#include "kml/sim/calibrate.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "kml/error.hpp"

namespace kml::sim {
namespace {

constexpr std::array<int, 20> kCandidates = {8,   16,  24,  32,  48,  64,  80,  96,  128, 160,
                                             192, 256, 320, 384, 448, 512, 640, 768, 896, 1024};

void keep_labeled(const RunReport& run, std::vector<FeatureVector>& out) {
  for (const auto& fv : run.features) {
    if (fv.label >= 0) out.push_back(fv);
  }
}

}  // namespace

std::span<const int> default_readahead_candidates() { return kCandidates; }

std::vector<SweepPoint> sweep_readahead(const WorkloadSpec& spec, const CacheSim& cache,
                                        std::span<const int> candidates) {
  if (candidates.empty()) throw ConfigError("readahead candidate list is empty");
  const Job job = single_job(spec);
  std::vector<SweepPoint> out;
  for (int value : candidates) {
    TunerPolicy policy;
    policy.initial_readahead = value;
    const RunReport run = simulate(std::span<const Job>(&job, 1), cache, policy, nullptr);
    out.push_back({value, run.aggregate_throughput});
  }
  return out;
}

int best_value(std::span<const SweepPoint> sweep) {
  if (sweep.empty()) throw ArgumentError("empty sweep");
  const SweepPoint* best = &sweep.front();
  for (const auto& p : sweep) {
    if (p.throughput > best->throughput) best = &p;
  }
  return best->value;
}

Calibration calibrate_mapping(std::span<const WorkloadSpec> specs, const CacheSim& cache,
                              std::span<const int> candidates) {
  if (candidates.empty()) throw ConfigError("readahead candidate list is empty");
  Calibration cal;
  cal.map.fill(kDefaultReadahead);
  for (const auto& spec : specs) {
    const int cls = workload_class(spec.kind);
    if (cls < 0) continue;
    auto& sweep = cal.sweeps[static_cast<std::size_t>(cls)];
    sweep = sweep_readahead(spec, cache, candidates);
    cal.map[static_cast<std::size_t>(cls)] = best_value(sweep);
  }
  return cal;
}

std::vector<WorkloadSpec> class_specs(const WorkloadSpec& base) {
  std::vector<WorkloadSpec> out;
  for (std::size_t c = 0; c < kClassCount; ++c) {
    WorkloadSpec s = base;
    s.kind = static_cast<WorkloadKind>(c);
    out.push_back(s);
  }
  return out;
}

Dataset collect_readahead_dataset(const CollectionPlan& plan, const CacheSim& cache) {
  if (plan.readahead_values.empty()) throw ConfigError("collection needs at least one readahead value");
  std::vector<FeatureVector> rows;
  std::mt19937_64 rng(plan.seed);
  std::uint64_t run_seed = plan.seed;
  for (const auto& device : plan.devices) {
    CacheSim sim_cache = cache;
    sim_cache.device = device;
    for (std::size_t c = 0; c < kClassCount; ++c) {
      for (int ra : plan.readahead_values) {
        WorkloadSpec spec = plan.base;
        spec.kind = static_cast<WorkloadKind>(c);
        spec.duration_seconds = plan.seconds_per_run;
        spec.seed = ++run_seed;
        const Job job = single_job(spec);
        TunerPolicy policy;
        policy.initial_readahead = ra;
        SimOptions options;
        options.record_features = true;
        keep_labeled(simulate(std::span<const Job>(&job, 1), sim_cache, policy, nullptr, options), rows);
      }
    }
    for (std::size_t r = 0; r < plan.sequence_runs; ++r) {
      std::array<std::size_t, kClassCount> order{};
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      Job job;
      job.name = "sequence";
      for (std::size_t c : order) {
        WorkloadSpec spec = plan.base;
        spec.kind = static_cast<WorkloadKind>(c);
        spec.duration_seconds = plan.sequence_phase_seconds;
        spec.seed = ++run_seed;
        job.phases.push_back(make_phase(spec));
      }
      TunerPolicy policy;
      policy.initial_readahead =
          plan.readahead_values[std::uniform_int_distribution<std::size_t>(0, plan.readahead_values.size() - 1)(rng)];
      SimOptions options;
      options.record_features = true;
      keep_labeled(simulate(std::span<const Job>(&job, 1), sim_cache, policy, nullptr, options), rows);
    }
  }
  return Dataset::from_vectors(rows, kClassCount);
}

}  // namespace kml::sim
