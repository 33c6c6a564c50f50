#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "kml/error.hpp"
#include "kml/features.hpp"
#include "kml/pipeline.hpp"
#include "kml/trace.hpp"

using namespace kml;
using namespace kml::pipeline;

namespace {

constexpr std::int64_t kMs = 1'000'000;

TraceEvent page(std::int64_t t, std::int64_t offset, std::uint64_t file = 1) {
  return {t, EventKind::page_cache_add, file, offset, 0};
}

TraceEvent ev(std::int64_t t, EventKind kind, std::int64_t offset, std::int64_t reclaimed = 0) {
  return {t, kind, 1, offset, reclaimed};
}

}  // namespace

TEST(TraceCsv, RoundTrip) {
  const std::vector<TraceEvent> events = {page(0, 5), ev(10, EventKind::nfs_read, 64),
                                          ev(20, EventKind::nfs_readpage_done, 64),
                                          ev(30, EventKind::lru_shrink, 0, 17)};
  std::stringstream ss;
  write_trace_csv(ss, events);
  EXPECT_EQ(ss.str().substr(0, kTraceCsvHeader.size()), kTraceCsvHeader);
  EXPECT_EQ(read_trace_csv(ss), events);
}

TEST(TraceCsv, MalformedInputIsIngestError) {
  const std::string header = std::string(kTraceCsvHeader) + "\n";
  for (const std::string body : {"0,page_cache_add,1,5\n", "0,page_cache_evict,1,5,0\n", "x,page_cache_add,1,5,0\n",
                                 "0,page_cache_add,1,-3,0\n", "0,page_cache_add,1,5,0,9\n"}) {
    std::stringstream ss(header + body);
    EXPECT_THROW(read_trace_csv(ss), IngestError) << body;
  }
  std::stringstream wrong_header("time,kind\n");
  EXPECT_THROW(read_trace_csv(wrong_header), IngestError);
  std::stringstream empty;
  EXPECT_THROW(read_trace_csv(empty), IngestError);
  EXPECT_THROW(read_trace_csv(std::filesystem::path("/nonexistent/trace.csv")), IoError);
}

TEST(TraceCsv, ErrorNamesTheLine) {
  std::stringstream ss(std::string(kTraceCsvHeader) + "\n0,page_cache_add,1,5,0\n1,bogus,1,5,0\n");
  try {
    read_trace_csv(ss);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Windows, EmptySecondHasZeroCount) {
  const std::vector<TraceEvent> events = {page(100, 1), page(2 * kNanosPerSecond + 5, 2)};
  const auto w = window_aggregate(events, Scope::per_disk);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0].count, 1u);
  EXPECT_EQ(w[1].count, 0u);
  EXPECT_EQ(w[1].second, 1);
  EXPECT_EQ(w[2].count, 1u);
}

TEST(Windows, HandAccumulatedThreeEvents) {
  const std::vector<TraceEvent> events = {page(1, 10), page(2, 20), page(3, 40)};
  const auto w = window_aggregate(events, Scope::per_disk);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].count, 3u);
  EXPECT_NEAR(w[0].offset_mean, 70.0 / 3, 1e-12);
  EXPECT_DOUBLE_EQ(w[0].mean_abs_offset_diff(), 15.0);
  const auto f = extract_readahead_features(w[0], 256);
  EXPECT_EQ(f.size, 4);
  EXPECT_FLOAT_EQ(f[0], 3.0f);
  EXPECT_NEAR(f[1], 23.3333f, 1e-4f);
  EXPECT_FLOAT_EQ(f[2], 15.0f);
  EXPECT_FLOAT_EQ(f[3], 256.0f);
}

TEST(Windows, PerFileScopesAreIndependent) {
  const std::vector<TraceEvent> mixed = {page(1, 0, 1), page(2, 1000, 2), page(3, 1, 1), page(4, 900, 2),
                                         page(5, 2, 1)};
  const std::vector<TraceEvent> only_a = {page(1, 0, 1), page(3, 1, 1), page(5, 2, 1)};
  const auto w = window_aggregate(mixed, Scope::per_file);
  ASSERT_EQ(w.size(), 2u);
  const auto a = window_aggregate(only_a, Scope::per_file);
  ASSERT_EQ(a.size(), 1u);
  const auto fa = extract_readahead_features(w[0], 8), fa_alone = extract_readahead_features(a[0], 8);
  EXPECT_EQ(w[0].scope_key, 1u);
  EXPECT_EQ(fa.values, fa_alone.values);
  EXPECT_FLOAT_EQ(extract_readahead_features(w[1], 8)[2], 100.0f);
}

TEST(Windows, FileFilterExcludesOtherFiles) {
  const std::vector<TraceEvent> events = {page(1, 0, 1), page(2, 500, 2), page(3, 1, 1)};
  const auto w = window_aggregate(events, Scope::per_disk, {1});
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].count, 2u);
  EXPECT_DOUBLE_EQ(w[0].mean_abs_offset_diff(), 1.0);
}

TEST(Windows, OutOfOrderTimestampNamesTheIndex) {
  const std::vector<TraceEvent> events = {page(5, 0), page(9, 1), page(7, 2)};
  try {
    window_aggregate(events, Scope::per_disk);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_NE(std::string(e.what()).find("event 2"), std::string::npos) << e.what();
  }
}

TEST(Windows, CumulativeMeanSpansWindows) {
  const std::vector<TraceEvent> events = {page(0, 0), page(kNanosPerSecond, 100)};
  const auto w = window_aggregate(events, Scope::per_disk);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_DOUBLE_EQ(w[1].offset_mean, 50.0);
  EXPECT_DOUBLE_EQ(w[1].cumulative_std(), 50.0);
}

TEST(Windows, WelfordMatchesTwoPassOnManySamples) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> d(0, 1'000'000);
  std::vector<TraceEvent> events;
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) {
    const auto x = d(rng);
    events.push_back(page(i, x));
    xs.push_back(static_cast<double>(x));
  }
  const auto w = window_aggregate(events, Scope::per_disk);
  ASSERT_EQ(w.size(), 1u);
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size()));
  EXPECT_NEAR(w[0].offset_mean / mean, 1.0, 1e-5);
  EXPECT_NEAR(w[0].cumulative_std() / sd, 1.0, 1e-5);
}

TEST(ReadaheadFeatures, EmptyWindowCarriesOffsetStatistics) {
  const std::vector<TraceEvent> events = {page(0, 10), page(1, 30), page(2 * kNanosPerSecond, 31)};
  const auto w = window_aggregate(events, Scope::per_disk);
  ASSERT_EQ(w.size(), 3u);
  const auto idle = extract_readahead_features(w[1], 256);
  EXPECT_FLOAT_EQ(idle[0], 0.0f);
  EXPECT_FLOAT_EQ(idle[1], 20.0f);
  EXPECT_FLOAT_EQ(idle[2], 20.0f);
  EXPECT_FLOAT_EQ(idle[3], 256.0f);
}

TEST(ReadaheadFeatures, UnitStrideGivesDiffOne) {
  std::vector<TraceEvent> events;
  for (int i = 0; i < 50; ++i) events.push_back(page(i, i));
  EXPECT_FLOAT_EQ(extract_readahead_features(window_aggregate(events, Scope::per_disk)[0], 8)[2], 1.0f);
}

TEST(ReadaheadFeatures, PureFunctionOfWindow) {
  const std::vector<TraceEvent> events = {page(1, 10), page(2, 20)};
  const auto w = window_aggregate(events, Scope::per_disk)[0];
  EXPECT_EQ(extract_readahead_features(w, 64).values, extract_readahead_features(w, 64).values);
}

TEST(NfsFeatures, NoEventsGivesZerosExceptRsize) {
  WindowState s;
  const auto f = extract_nfs_features(s, 65536);
  EXPECT_EQ(f.size, 8);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(f[i], 0.0f);
  EXPECT_EQ(f[nfs_feature::current_rsize], 65536.0f);
}

TEST(NfsFeatures, HandPairedLatencyAndInterarrival) {
  const std::vector<TraceEvent> events = {
      ev(0, EventKind::nfs_read, 0), ev(2 * kMs, EventKind::nfs_readpage_done, 0),
      ev(10 * kMs, EventKind::nfs_read, 64), ev(13 * kMs, EventKind::nfs_readpage_done, 64)};
  const auto w = window_aggregate(events, Scope::per_disk);
  ASSERT_EQ(w.size(), 1u);
  const auto f = extract_nfs_features(w[0], 4096);
  EXPECT_FLOAT_EQ(f[nfs_feature::mean_read_to_done_latency], 2500.0f);
  EXPECT_FLOAT_EQ(f[nfs_feature::mean_read_interarrival], 10000.0f);
  EXPECT_FLOAT_EQ(f[nfs_feature::mean_done_interarrival], 11000.0f);
  EXPECT_FLOAT_EQ(f[nfs_feature::mean_abs_requested_offset_diff], 64.0f);
  EXPECT_FLOAT_EQ(f[nfs_feature::transactions_per_second], 4.0f);
}

TEST(NfsFeatures, MeanReclaimedPages) {
  const std::vector<TraceEvent> events = {ev(1, EventKind::lru_shrink, 0, 100), ev(2, EventKind::lru_shrink, 0, 300)};
  EXPECT_FLOAT_EQ(extract_nfs_features(window_aggregate(events, Scope::per_disk)[0], 0)[nfs_feature::mean_reclaimed_pages],
                  200.0f);
}

TEST(NfsFeatures, PairsAcrossWindowEdgeAreExcluded) {
  const std::vector<TraceEvent> events = {ev(kNanosPerSecond - 1, EventKind::nfs_read, 0),
                                          ev(kNanosPerSecond + 1, EventKind::nfs_readpage_done, 0)};
  const auto w = window_aggregate(events, Scope::per_disk);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].latency_count + w[1].latency_count, 0u);
}

TEST(NfsFeatures, DuplicateRequestsPairFifo) {
  const std::vector<TraceEvent> events = {
      ev(0, EventKind::nfs_read, 8), ev(1 * kMs, EventKind::nfs_read, 8),
      ev(3 * kMs, EventKind::nfs_readpage_done, 8), ev(5 * kMs, EventKind::nfs_readpage_done, 8)};
  const auto w = window_aggregate(events, Scope::per_disk);
  EXPECT_FLOAT_EQ(extract_nfs_features(w[0], 0)[nfs_feature::mean_read_to_done_latency], 3500.0f);
}

TEST(Normalizer, FirstSampleIsAllZeros) {
  NormalizerState n(3);
  const float raw[] = {5, -2, 1e6f};
  float out[3];
  n.normalize(raw, out);
  for (float v : out) EXPECT_EQ(v, 0.0f);
}

TEST(Normalizer, ConstantStreamStaysZero) {
  NormalizerState n(1);
  for (int i = 0; i < 1000; ++i) {
    const float raw[] = {42.0f};
    float out[1];
    n.normalize(raw, out);
    ASSERT_EQ(out[0], 0.0f);
  }
}

TEST(Normalizer, MatchesOfflineZScoreOverPrefix) {
  NormalizerState n(1);
  for (int k = 1; k <= 2000; ++k) {
    const float raw[] = {static_cast<float>(k)};
    float out[1];
    n.normalize(raw, out);
    double mean = 0;
    for (int i = 1; i <= k; ++i) mean += i;
    mean /= k;
    double ss = 0;
    for (int i = 1; i <= k; ++i) ss += (i - mean) * (i - mean);
    const double sd = std::max(std::sqrt(ss / k), NormalizerState::kStdFloor);
    ASSERT_NEAR(out[0], (k - mean) / sd, 1e-5) << "k=" << k;
  }
}

TEST(Normalizer, NonFiniteInputIsNumericError) {
  NormalizerState n(2);
  const float bad[] = {1.0f, std::nanf("")};
  float out[2];
  EXPECT_THROW(n.normalize(bad, out), NumericError);
  EXPECT_EQ(n.count(), 0u);
  const float wrong[] = {1.0f};
  EXPECT_THROW(n.normalize(wrong, out), ShapeError);
}

TEST(Normalizer, SnapshotRestoresIdenticalOutput) {
  NormalizerState n(4);
  std::mt19937 rng(8);
  std::normal_distribution<float> d(10, 3);
  for (int i = 0; i < 500; ++i) {
    const float raw[] = {d(rng), d(rng), d(rng), d(rng)};
    n.observe(raw);
  }
  std::vector<float> mean, var;
  for (std::size_t i = 0; i < 4; ++i) {
    mean.push_back(n.snapshot_mean(i));
    var.push_back(n.snapshot_variance(i));
  }
  const auto restored = NormalizerState::from_snapshot(mean, var);
  for (int i = 0; i < 100; ++i) {
    const float raw[] = {d(rng), d(rng), d(rng), d(rng)};
    float a[4], b[4];
    n.apply(raw, a);
    restored.apply(raw, b);
    for (int j = 0; j < 4; ++j) ASSERT_EQ(a[j], b[j]);
  }
  const float bad_var[] = {-1.0f};
  const float one[] = {0.0f};
  EXPECT_THROW(NormalizerState::from_snapshot(one, bad_var), NumericError);
}

TEST(Normalizer, VarianceNeverNegative) {
  NormalizerState n(1);
  std::mt19937 rng(2);
  std::uniform_real_distribution<float> d(1e6f, 1e6f + 1);
  for (int i = 0; i < 10000; ++i) {
    const float raw[] = {d(rng)};
    n.observe(raw);
    ASSERT_GE(n.variance(0), 0.0);
  }
}
