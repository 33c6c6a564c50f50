#include "kml/sim/nfs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "kml/engine.hpp"
#include "kml/error.hpp"
#include "kml/pipeline.hpp"
#include "kml/sim/cache.hpp"

namespace kml::sim {

NetworkModel NetworkModel::lan() { return {"lan", 200'000.0, 1.25, 20'000.0, 5'000.0}; }
NetworkModel NetworkModel::slow() { return {"slow", 2'000'000.0, 0.0125, 20'000.0, 5'000.0}; }

std::optional<NetworkModel> network_by_name(std::string_view name) {
  if (name == "lan") return NetworkModel::lan();
  if (name == "slow") return NetworkModel::slow();
  return std::nullopt;
}

int tune_rsize(std::size_t prediction, const TunerPolicy& policy) {
  if (prediction >= kClassCount) {
    throw ArgumentError("prediction " + std::to_string(prediction) + " is not one of " +
                        std::to_string(kClassCount) + " classes");
  }
  return policy.rsize_map[prediction];
}

namespace {

constexpr std::int64_t kPageBytes = 4096;

struct Decision {
  std::uint64_t scope_key;
  std::int64_t second;
  std::uint32_t predicted;
};

class NfsClient {
 public:
  NfsClient(const Trace& trace, int label, const NfsSim& sim, const TunerPolicy& policy, ModelBundle* model,
            const NfsOptions& options, bool record_events)
      : trace_(trace),
        label_(label),
        net_(sim.network),
        cache_(sim.cache_pages),
        policy_(policy),
        model_(model),
        options_(options),
        record_events_(record_events),
        aggregator_(pipeline::Scope::per_disk),
        features_(options.ring_capacity),
        mailbox_(std::max<std::size_t>(64, options.ring_capacity)) {
    if (policy_.mode == TuningMode::per_file) throw ConfigError("rsize is a mount-wide parameter; per-file mode is not supported");
    if (options_.iterations == 0) throw ArgumentError("NFS run needs at least one iteration");
    if (std::find(kRsizeValues.begin(), kRsizeValues.end(), options_.fixed_rsize) == kRsizeValues.end()) {
      throw ConfigError("rsize " + std::to_string(options_.fixed_rsize) + " is not a supported value");
    }
    if (policy_.mode == TuningMode::per_disk) {
      validate(policy_);
      if (model_ == nullptr) throw ConfigError("rsize tuning needs a model");
    }
    if (model_ != nullptr && model_->feature_count() != feature_count(FeatureSchema::nfs)) {
      throw ConfigError("model takes " + std::to_string(model_->feature_count()) +
                        " features; the NFS pipeline produces 8");
    }
    for (const auto& f : trace_.files) {
      slot_of_.emplace(f.file_id, cache_.add_file());
      extent_.push_back(f.pages);
      write_only_.push_back(f.write_only);
    }
  }

  NfsRunReport run() {
    std::optional<async::ConsumerThread> consumer;
    if (model_ != nullptr) {
      consumer.emplace(features_, async::LoopMode::infer, *model_, [this](const async::LoopResult& r) {
        mailbox_.push(Decision{r.item->scope_key, r.item->second, static_cast<std::uint32_t>(r.predicted)});
      });
    }
    int rsize = options_.fixed_rsize;
    const double limit = options_.max_seconds > 0.0 ? options_.max_seconds * 1e9 : 0.0;
    for (std::size_t it = 0; it < options_.iterations && (limit == 0.0 || clock_ < limit); ++it) {
      NfsIteration iter;
      if (policy_.mode == TuningMode::per_disk && it > 0) {
        const auto best = std::max_element(votes_.begin(), votes_.end());
        if (*best > 0) {
          iter.latched_class = static_cast<int>(best - votes_.begin());
          rsize = tune_rsize(static_cast<std::size_t>(iter.latched_class), policy_);
        }
      }
      votes_.fill(0);
      iteration_ = it;
      rsize_ = rsize;
      iter.rsize = rsize;
      const double start = clock_;
      for (const auto& e : trace_.events) {
        const auto second = static_cast<std::int64_t>(std::floor(clock_ / 1e9));
        if (second > open_second_) close_until(second);
        access(e);
        ++iter.ops;
        if (limit > 0.0 && clock_ >= limit) break;
      }
      iter.seconds = (clock_ - start) / 1e9;
      iter.throughput = iter.seconds > 0.0 ? static_cast<double>(iter.ops) / iter.seconds : 0.0;
      report_.iterations.push_back(iter);
    }
    close_until(static_cast<std::int64_t>(std::floor(clock_ / 1e9)));
    if (consumer) consumer->stop();

    std::uint64_t ops = 0;
    std::uint64_t steady_ops = 0;
    double seconds = 0.0;
    double steady_seconds = 0.0;
    for (std::size_t i = 0; i < report_.iterations.size(); ++i) {
      ops += report_.iterations[i].ops;
      seconds += report_.iterations[i].seconds;
      if (i > 0) {
        steady_ops += report_.iterations[i].ops;
        steady_seconds += report_.iterations[i].seconds;
      }
    }
    report_.throughput = seconds > 0.0 ? static_cast<double>(ops) / seconds : 0.0;
    report_.steady_throughput = steady_seconds > 0.0 ? static_cast<double>(steady_ops) / steady_seconds
                                                     : report_.throughput;
    return std::move(report_);
  }

 private:
  void emit(EventKind kind, std::uint64_t file, std::int64_t offset, double t, std::uint64_t reclaimed = 0) {
    TraceEvent e;
    e.timestamp_ns = static_cast<std::int64_t>(t);
    e.kind = kind;
    e.file_id = file;
    e.offset = offset;
    e.reclaimed_pages = reclaimed;
    aggregator_.ingest(e, scratch_);
    ++events_this_second_;
    if (record_events_) report_.events.push_back(e);
  }

  void access(const TraceEvent& e) {
    if (e.kind != EventKind::page_cache_add) {
      throw IngestError("NFS replay expects page_cache_add accesses; got " + std::string(kml::to_string(e.kind)));
    }
    const auto it = slot_of_.find(e.file_id);
    if (it == slot_of_.end()) throw IngestError("access to unknown file " + std::to_string(e.file_id));
    const std::size_t slot = it->second;
    const double t = clock_;
    std::int64_t& extent = extent_[slot];
    if (e.offset >= extent || (write_only_[slot] && !cache_.contains(slot, e.offset))) {
      extent = std::max(extent, e.offset + 1);
      const std::size_t evicted = cache_.insert(slot, e.offset);
      emit(EventKind::page_cache_add, e.file_id, e.offset, t);
      if (evicted > 0) emit(EventKind::lru_shrink, e.file_id, e.offset, t, evicted);
      clock_ = t + net_.hit_ns;
      return;
    }
    if (cache_.contains(slot, e.offset)) {
      cache_.touch(slot, e.offset);
      clock_ = t + net_.hit_ns;
      return;
    }
    const std::int64_t chunk = rsize_ / kPageBytes;
    const std::int64_t lo = e.offset - e.offset % chunk;
    const std::int64_t hi = std::min(extent, lo + chunk);
    const double bytes = static_cast<double>((hi - lo) * kPageBytes);
    const double done = t + net_.rtt_ns + bytes / net_.bytes_per_ns + net_.server_ns;
    emit(EventKind::nfs_read, e.file_id, lo, t);
    emit(EventKind::nfs_readpage_done, e.file_id, lo, done);
    std::uint64_t evicted = 0;
    for (std::int64_t p = lo; p < hi; ++p) {
      if (cache_.contains(slot, p)) continue;
      evicted += cache_.insert(slot, p);
      emit(EventKind::page_cache_add, e.file_id, p, done);
    }
    cache_.touch(slot, e.offset);
    if (evicted > 0) emit(EventKind::lru_shrink, e.file_id, lo, done, evicted);
    clock_ = done + net_.hit_ns;
  }

  void close_until(std::int64_t second) {
    if (second <= open_second_) return;
    windows_.clear();
    windows_.swap(scratch_);
    aggregator_.advance_to(second, windows_);
    std::size_t pending = 0;
    for (const auto& w : windows_) {
      FeatureVector fv = pipeline::extract_nfs_features(w, static_cast<double>(rsize_));
      if (options_.record_features) {
        FeatureVector labeled = fv;
        labeled.label = static_cast<std::int16_t>(label_);
        report_.features.push_back(labeled);
      }
      if (model_ != nullptr && features_.push(fv) == async::PushResult::accepted) ++pending;
    }
    std::map<std::int64_t, int> predicted;
    Decision d{};
    while (pending > 0) {
      if (!mailbox_.pop(d)) {
        std::this_thread::yield();
        continue;
      }
      --pending;
      ++report_.decisions;
      predicted[d.second] = static_cast<int>(d.predicted);
      if (d.predicted < kClassCount) ++votes_[d.predicted];
    }
    for (std::int64_t s = open_second_; s < second; ++s) {
      NfsTimelineRow row;
      row.second = s;
      row.iteration = iteration_;
      row.rsize = rsize_;
      row.events = s == open_second_ ? events_this_second_ : 0;
      const auto p = predicted.find(s);
      row.predicted = p == predicted.end() ? -1 : p->second;
      report_.timeline.push_back(row);
    }
    events_this_second_ = 0;
    open_second_ = second;
  }

  const Trace& trace_;
  int label_;
  NetworkModel net_;
  PageCache cache_;
  TunerPolicy policy_;
  ModelBundle* model_;
  NfsOptions options_;
  bool record_events_;
  pipeline::WindowAggregator aggregator_;
  async::FeatureRing features_;
  async::SpscRing<Decision> mailbox_;
  std::map<std::uint64_t, std::size_t> slot_of_;
  std::vector<std::int64_t> extent_;
  std::vector<bool> write_only_;
  std::vector<pipeline::WindowState> windows_;
  std::vector<pipeline::WindowState> scratch_;
  std::array<std::uint64_t, kClassCount> votes_{};
  double clock_ = 0.0;
  std::int64_t open_second_ = 0;
  std::uint64_t events_this_second_ = 0;
  std::size_t iteration_ = 0;
  int rsize_ = kDefaultRsize;
  NfsRunReport report_;
};

}  // namespace

NfsRunReport simulate_nfs(const Trace& trace, int label, const NfsSim& sim, const TunerPolicy& policy,
                          ModelBundle* model, const NfsOptions& options, bool record_events) {
  NfsClient client(trace, label, sim, policy, model, options, record_events);
  return client.run();
}

std::vector<std::pair<int, double>> sweep_rsize(const WorkloadSpec& spec, const NfsSim& sim, std::size_t iterations) {
  const Trace trace = generate_trace(spec);
  std::vector<std::pair<int, double>> out;
  for (int rsize : kRsizeValues) {
    NfsOptions options;
    options.iterations = iterations;
    options.fixed_rsize = rsize;
    const auto run = simulate_nfs(trace, workload_class(spec.kind), sim, TunerPolicy{}, nullptr, options);
    out.emplace_back(rsize, run.steady_throughput);
  }
  return out;
}

RsizeCalibration calibrate_rsize(std::span<const WorkloadSpec> specs, const NfsSim& sim, std::size_t iterations) {
  RsizeCalibration cal;
  cal.map.fill(kDefaultRsize);
  for (const auto& spec : specs) {
    const int cls = workload_class(spec.kind);
    if (cls < 0) continue;
    auto& sweep = cal.sweeps[static_cast<std::size_t>(cls)];
    sweep = sweep_rsize(spec, sim, iterations);
    const auto* best = &sweep.front();
    for (const auto& p : sweep) {
      if (p.second > best->second) best = &p;
    }
    cal.map[static_cast<std::size_t>(cls)] = best->first;
  }
  return cal;
}

Dataset collect_nfs_dataset(const NfsCollectionPlan& plan, const NfsSim& sim) {
  std::vector<FeatureVector> rows;
  std::uint64_t seed = plan.base.seed;
  for (const auto& net : plan.networks) {
    NfsSim s = sim;
    s.network = net;
    for (std::size_t c = 0; c < kClassCount; ++c) {
      WorkloadSpec spec = plan.base;
      spec.kind = static_cast<WorkloadKind>(c);
      spec.seed = ++seed;
      const Trace trace = generate_trace(spec);
      for (int rsize : kRsizeValues) {
        NfsOptions options;
        options.iterations = std::numeric_limits<std::size_t>::max();
        options.max_seconds = plan.seconds_per_run;
        options.fixed_rsize = rsize;
        options.record_features = true;
        auto run = simulate_nfs(trace, static_cast<int>(c), s, TunerPolicy{}, nullptr, options);
        rows.insert(rows.end(), run.features.begin(), run.features.end());
      }
    }
  }
  return Dataset::from_vectors(rows, kClassCount);
}

}  // namespace kml::sim
