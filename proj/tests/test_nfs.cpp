#include <gtest/gtest.h>

#include <algorithm>

#include "kml/error.hpp"
#include "kml/sim/nfs.hpp"
#include "kml/sim/presets.hpp"
#include "support/sim_models.hpp"

using namespace kml;
using namespace kml::sim;

namespace {

bool legal(int rsize) { return std::find(kRsizeValues.begin(), kRsizeValues.end(), rsize) != kRsizeValues.end(); }

const ModelBundle& shared_tree() {
  static const ModelBundle model = kml::testing::small_nfs_tree(5);
  return model;
}

TunerPolicy rsize_policy() {
  TunerPolicy policy;
  policy.mode = TuningMode::per_disk;
  policy.model_kind = ModelKind::dtree;
  policy.rsize_map = {4096, 262144, 16384, 262144};
  return policy;
}

Trace trace_of(WorkloadKind kind) {
  auto spec = nfs_base_spec();
  spec.kind = kind;
  return generate_trace(spec);
}

}  // namespace

TEST(Nfs, TuneRsizeFollowsTheMap) {
  const auto policy = rsize_policy();
  EXPECT_EQ(tune_rsize(1, policy), 262144);
  EXPECT_EQ(tune_rsize(0, policy), 4096);
  for (std::size_t c = 0; c < kClassCount; ++c) EXPECT_TRUE(legal(tune_rsize(c, policy)));
  EXPECT_THROW(tune_rsize(4, policy), ArgumentError);
}

TEST(Nfs, SequentialPrefersLargestRsize) {
  auto spec = nfs_base_spec();
  spec.kind = WorkloadKind::readseq;
  const auto sweep = sweep_rsize(spec, NfsSim{}, 2);
  ASSERT_EQ(sweep.size(), kRsizeValues.size());
  const auto best = std::max_element(sweep.begin(), sweep.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  EXPECT_EQ(best->first, 262144);
}

TEST(Nfs, RandomPrefersSmallRsize) {
  auto spec = nfs_base_spec();
  spec.kind = WorkloadKind::readrandom;
  const auto sweep = sweep_rsize(spec, NfsSim{}, 2);
  const auto best = std::max_element(sweep.begin(), sweep.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  EXPECT_LE(best->first, 8192);
}

TEST(Nfs, FixedRunUsesTheFixedRsize) {
  NfsOptions options;
  options.fixed_rsize = 32768;
  const auto run = simulate_nfs(trace_of(WorkloadKind::readrandom), 0, NfsSim{}, TunerPolicy{}, nullptr, options);
  ASSERT_EQ(run.iterations.size(), 4u);
  for (const auto& it : run.iterations) {
    EXPECT_EQ(it.rsize, 32768);
    EXPECT_EQ(it.latched_class, -1);
  }
}

TEST(Nfs, RsizeChangesOnlyAtIterationBoundaries) {
  auto model = shared_tree();
  NfsOptions options;
  options.iterations = 5;
  for (auto kind : {WorkloadKind::readrandom, WorkloadKind::readseq, WorkloadKind::readrandomwriterandom}) {
    const auto run = simulate_nfs(trace_of(kind), workload_class(kind), NfsSim{}, rsize_policy(), &model, options);
    ASSERT_FALSE(run.timeline.empty());
    for (std::size_t i = 1; i < run.timeline.size(); ++i) {
      const auto& a = run.timeline[i - 1];
      const auto& b = run.timeline[i];
      EXPECT_TRUE(legal(b.rsize));
      if (a.iteration == b.iteration) {
        EXPECT_EQ(a.rsize, b.rsize) << "second " << b.second;
      }
    }
    for (const auto& it : run.iterations) EXPECT_TRUE(legal(it.rsize));
    for (const auto& row : run.timeline) EXPECT_EQ(row.rsize, run.iterations.at(row.iteration).rsize);
    EXPECT_EQ(run.iterations[0].rsize, options.fixed_rsize);
  }
}

TEST(Nfs, TunedRandomSettlesOnSmallRsize) {
  auto model = shared_tree();
  const auto run =
      simulate_nfs(trace_of(WorkloadKind::readrandom), 0, NfsSim{}, rsize_policy(), &model, NfsOptions{});
  EXPECT_EQ(run.iterations.back().rsize, 4096);
  EXPECT_GT(run.decisions, 0u);
}

TEST(Nfs, PerFileModeIsConfigError) {
  auto model = shared_tree();
  auto policy = rsize_policy();
  policy.mode = TuningMode::per_file;
  EXPECT_THROW(simulate_nfs(trace_of(WorkloadKind::readseq), 1, NfsSim{}, policy, &model), ConfigError);
}

TEST(Nfs, TuningWithoutModelIsConfigError) {
  EXPECT_THROW(simulate_nfs(trace_of(WorkloadKind::readseq), 1, NfsSim{}, rsize_policy(), nullptr), ConfigError);
}

TEST(Nfs, IllegalFixedRsizeIsConfigError) {
  NfsOptions options;
  options.fixed_rsize = 5000;
  EXPECT_THROW(simulate_nfs(trace_of(WorkloadKind::readseq), 1, NfsSim{}, TunerPolicy{}, nullptr, options),
               ConfigError);
}

TEST(Nfs, RecordedEventsAreClientEvents) {
  NfsSim sim;
  sim.cache_pages = 256;
  NfsOptions options;
  options.iterations = 1;
  const auto run = simulate_nfs(trace_of(WorkloadKind::readrandom), 0, sim, TunerPolicy{}, nullptr, options, true);
  bool read = false, done = false, add = false, shrink = false;
  for (const auto& e : run.events) {
    read |= e.kind == EventKind::nfs_read;
    done |= e.kind == EventKind::nfs_readpage_done;
    add |= e.kind == EventKind::page_cache_add;
    shrink |= e.kind == EventKind::lru_shrink;
  }
  EXPECT_TRUE(read && done && add && shrink);
}

TEST(Nfs, NetworkPresets) {
  EXPECT_GT(NetworkModel::slow().rtt_ns, NetworkModel::lan().rtt_ns);
  EXPECT_EQ(network_by_name("lan")->name, "lan");
  EXPECT_FALSE(network_by_name("wan").has_value());
}
