#include "kml/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <thread>

#include "kml/engine.hpp"
#include "kml/error.hpp"
#include "kml/pipeline.hpp"

namespace kml::sim {

std::string_view to_string(TuningMode mode) {
  switch (mode) {
    case TuningMode::vanilla_fixed:
      return "vanilla";
    case TuningMode::per_disk:
      return "per-disk";
    case TuningMode::per_file:
      return "per-file";
  }
  return "?";
}

void validate(const TunerPolicy& policy) {
  for (std::size_t c = 0; c < kClassCount; ++c) {
    const int ra = policy.readahead_map[c];
    if (ra < kMinReadahead || ra > kMaxReadahead) {
      throw ConfigError("readahead for " + std::string(class_name(c)) + " is " + std::to_string(ra) +
                        ", outside 8..1024 sectors");
    }
    if (std::find(kRsizeValues.begin(), kRsizeValues.end(), policy.rsize_map[c]) == kRsizeValues.end()) {
      throw ConfigError("rsize for " + std::string(class_name(c)) + " is " + std::to_string(policy.rsize_map[c]) +
                        ", not a supported value");
    }
  }
  if (policy.initial_readahead < 0) throw ConfigError("initial readahead must not be negative");
}

Phase make_phase(const WorkloadSpec& spec) {
  return {generate_trace(spec), spec.duration_seconds, workload_class(spec.kind), std::string(to_string(spec.kind))};
}

Job single_job(const WorkloadSpec& spec) {
  Job job;
  job.name = std::string(to_string(spec.kind));
  job.phases.push_back(make_phase(spec));
  return job;
}

namespace {

struct Decision {
  std::uint64_t scope_key;
  std::int64_t second;
  std::uint32_t predicted;
};

struct FileState {
  std::uint64_t id = 0;
  std::size_t job = 0;
  std::int64_t extent = 0;
  bool write_only = false;
  std::int64_t last_page = -2;
  int readahead = 0;
  std::uint64_t ops_this_second = 0;
  int last_prediction = -1;
};

struct Stream {
  const Job* job = nullptr;
  std::size_t index = 0;
  std::size_t phase = 0;
  std::size_t cursor = 0;
  double clock = 0.0;
  double phase_end = 0.0;
  bool done = false;
  StreamReport report;
};

class Simulator {
 public:
  Simulator(std::span<const Job> jobs, const CacheSim& cache, const TunerPolicy& policy, ModelBundle* model,
            const SimOptions& options)
      : jobs_(jobs),
        device_(cache.device),
        cache_(cache.capacity_pages),
        policy_(policy),
        model_(model),
        options_(options),
        aggregator_(policy.mode == TuningMode::per_file ? pipeline::Scope::per_file : pipeline::Scope::per_disk),
        features_(options.ring_capacity),
        mailbox_(std::max<std::size_t>(64, options.ring_capacity)) {
    if (policy_.mode != TuningMode::vanilla_fixed) {
      validate(policy_);
      if (model_ == nullptr) throw ConfigError("tuning mode " + std::string(to_string(policy_.mode)) + " needs a model");
    }
    if (model_ != nullptr) {
      if (model_->feature_count() != feature_count(FeatureSchema::readahead)) {
        throw ConfigError("model takes " + std::to_string(model_->feature_count()) +
                          " features; the readahead pipeline produces 4");
      }
      if (model_->schema() != FeatureSchema::readahead && model_->schema() != FeatureSchema::custom) {
        throw ConfigError("model was trained on " + std::string(kml::to_string(model_->schema())) + " features");
      }
    }
    for (std::size_t j = 0; j < jobs_.size(); ++j) {
      for (const auto& phase : jobs_[j].phases) {
        for (const auto& f : phase.trace.files) register_file(f, j);
      }
    }
    global_readahead_ = policy_.initial_readahead;
  }

  RunReport run() {
    std::optional<async::ConsumerThread> consumer;
    if (model_ != nullptr) {
      consumer.emplace(features_, async::LoopMode::infer, *model_, [this](const async::LoopResult& r) {
        mailbox_.push(Decision{r.item->scope_key, r.item->second, static_cast<std::uint32_t>(r.predicted)});
      });
    }

    streams_.resize(jobs_.size());
    for (std::size_t j = 0; j < jobs_.size(); ++j) {
      Stream& s = streams_[j];
      s.job = &jobs_[j];
      s.index = j;
      s.report.name = jobs_[j].name;
      s.done = jobs_[j].phases.empty();
      if (!s.done) s.phase_end = jobs_[j].phases[0].duration_seconds * 1e9;
    }

    for (;;) {
      Stream* next = nullptr;
      for (auto& s : streams_) {
        if (s.done) continue;
        settle_phase(s);
        if (s.done) continue;
        if (next == nullptr || s.clock < next->clock) next = &s;
      }
      if (next == nullptr) break;
      const auto second = static_cast<std::int64_t>(std::floor(next->clock / 1e9));
      if (second > open_second_) close_until(second);
      step(*next);
    }

    double end = 0.0;
    for (const auto& s : streams_) end = std::max(end, s.clock);
    close_until(static_cast<std::int64_t>(std::floor(end / 1e9)));

    if (consumer) consumer->stop();
    report_.dropped_features = features_.dropped_count();
    for (auto& s : streams_) {
      s.report.seconds = s.clock / 1e9;
      s.report.throughput = s.clock > 0.0 ? static_cast<double>(s.report.ops) / s.report.seconds : 0.0;
      report_.aggregate_throughput += s.report.throughput;
      report_.streams.push_back(s.report);
    }
    return std::move(report_);
  }

 private:
  void register_file(const FileExtent& f, std::size_t job) {
    auto it = slot_of_.find(f.file_id);
    if (it != slot_of_.end()) {
      files_[it->second].extent = std::max(files_[it->second].extent, f.pages);
      files_[it->second].write_only = files_[it->second].write_only && f.write_only;
      return;
    }
    const std::size_t slot = cache_.add_file();
    slot_of_.emplace(f.file_id, slot);
    FileState state;
    state.id = f.file_id;
    state.job = job;
    state.extent = f.pages;
    state.write_only = f.write_only;
    state.readahead = policy_.initial_readahead;
    files_.push_back(state);
  }

  void settle_phase(Stream& s) {
    while (!s.done && s.clock >= s.phase_end) {
      if (++s.phase >= s.job->phases.size()) {
        s.done = true;
        return;
      }
      s.cursor = 0;
      s.phase_end += s.job->phases[s.phase].duration_seconds * 1e9;
    }
  }

  int phase_label_at(std::size_t job, double t) const {
    double end = 0.0;
    for (const auto& p : jobs_[job].phases) {
      end += p.duration_seconds * 1e9;
      if (t < end) return p.label;
    }
    return -1;
  }

  void observe(std::uint64_t file_id, std::int64_t page, double t) {
    TraceEvent e;
    e.timestamp_ns = static_cast<std::int64_t>(t);
    e.kind = EventKind::page_cache_add;
    e.file_id = file_id;
    e.offset = page;
    aggregator_.ingest(e, scratch_windows_);
  }

  void step(Stream& s) {
    const auto& events = s.job->phases[s.phase].trace.events;
    if (events.empty()) {
      s.clock = s.phase_end;
      return;
    }
    if (s.cursor >= events.size()) s.cursor = 0;  // replay a trace shorter than its phase
    const TraceEvent& e = events[s.cursor++];
    if (e.kind != EventKind::page_cache_add) {
      throw IngestError("simulate replays page_cache_add accesses; got " + std::string(kml::to_string(e.kind)));
    }
    const auto it = slot_of_.find(e.file_id);
    if (it == slot_of_.end()) {
      throw IngestError("access to unknown file " + std::to_string(e.file_id));
    }
    const std::size_t slot = it->second;
    FileState& file = files_[slot];
    const double t = s.clock;
    const std::int64_t page = e.offset;
    double cost = 0.0;

    if (page >= file.extent || (file.write_only && !cache_.contains(slot, page))) {
      file.extent = std::max(file.extent, page + 1);
      cache_.insert(slot, page);
      observe(file.id, page, t);
      cost = device_.hit_ns;
      ++s.report.appends;
    } else if (cache_.contains(slot, page)) {
      cache_.touch(slot, page);
      cost = device_.hit_ns;
      ++s.report.hits;
    } else {
      const std::int64_t window = file.readahead / kSectorsPerPage;
      const bool backward = file.last_page == page + 1;
      const std::int64_t lo = backward ? std::max<std::int64_t>(0, page - window) : page;
      const std::int64_t hi = backward ? page : std::min(file.extent - 1, page + window);
      std::uint64_t read = 0;
      for (std::int64_t p = lo; p <= hi; ++p) {
        if (cache_.contains(slot, p)) continue;
        cache_.insert(slot, p);
        observe(file.id, p, t);
        ++read;
      }
      cache_.touch(slot, page);
      cost = device_.miss_base_ns + device_.per_page_transfer_ns * static_cast<double>(read);
      ++s.report.misses;
      s.report.pages_read += read;
    }
    file.last_page = page;
    ++file.ops_this_second;
    ++s.report.ops;
    s.clock = t + cost;
    report_.max_resident_pages = std::max(report_.max_resident_pages, cache_.size());
  }

  // Closes every second before `second`: windows -> features -> decisions.
  void close_until(std::int64_t second) {
    if (second <= open_second_) return;
    windows_.clear();
    windows_.swap(scratch_windows_);
    aggregator_.advance_to(second, windows_);
    std::size_t w = 0;
    for (std::int64_t sec = open_second_; sec < second; ++sec) {
      const std::size_t first = w;
      while (w < windows_.size() && windows_[w].second == sec) ++w;
      close_second(sec, std::span<const pipeline::WindowState>(windows_.data() + first, w - first));
    }
    open_second_ = second;
  }

  int readahead_of_scope(std::uint64_t key) const {
    if (policy_.mode != TuningMode::per_file) return global_readahead_;
    return files_[slot_of_.at(key)].readahead;
  }

  void close_second(std::int64_t sec, std::span<const pipeline::WindowState> windows) {
    std::vector<int> readahead_during(files_.size());
    for (std::size_t i = 0; i < files_.size(); ++i) readahead_during[i] = files_[i].readahead;

    std::size_t pending = 0;
    for (const auto& window : windows) {
      FeatureVector fv =
          pipeline::extract_readahead_features(window, static_cast<double>(readahead_of_scope(window.scope_key)));
      if (options_.record_features) {
        FeatureVector labeled = fv;
        const std::size_t job =
            policy_.mode == TuningMode::per_file ? files_[slot_of_.at(window.scope_key)].job : 0;
        labeled.label = static_cast<std::int16_t>(phase_label_at(job, (static_cast<double>(sec) + 0.5) * 1e9));
        report_.features.push_back(labeled);
      }
      if (model_ != nullptr && features_.push(fv) == async::PushResult::accepted) ++pending;
    }

    Decision d{};
    while (pending > 0) {
      if (!mailbox_.pop(d)) {
        std::this_thread::yield();
        continue;
      }
      --pending;
      ++report_.decisions;
      apply(d);
    }

    for (std::size_t i = 0; i < files_.size(); ++i) {
      FileState& f = files_[i];
      TimelineRow row;
      row.second = sec;
      row.file_id = f.id;
      row.job = f.job;
      row.ops = f.ops_this_second;
      row.readahead = readahead_during[i];
      row.predicted = f.last_prediction;
      row.truth = phase_label_at(f.job, (static_cast<double>(sec) + 0.5) * 1e9);
      report_.timeline.push_back(row);
      f.ops_this_second = 0;
      f.last_prediction = -1;
    }
  }

  void apply(const Decision& d) {
    const int cls = static_cast<int>(d.predicted);
    const bool known = d.predicted < kClassCount;
    if (policy_.mode == TuningMode::per_file) {
      FileState& f = files_[slot_of_.at(d.scope_key)];
      f.last_prediction = cls;
      if (known) f.readahead = policy_.readahead_map[d.predicted];
      return;
    }
    for (auto& f : files_) f.last_prediction = cls;
    if (policy_.mode == TuningMode::per_disk && known) {
      global_readahead_ = policy_.readahead_map[d.predicted];
      for (auto& f : files_) f.readahead = global_readahead_;
    }
  }

  std::span<const Job> jobs_;
  DeviceModel device_;
  PageCache cache_;
  TunerPolicy policy_;
  ModelBundle* model_;
  SimOptions options_;
  pipeline::WindowAggregator aggregator_;
  async::FeatureRing features_;
  async::SpscRing<Decision> mailbox_;
  std::map<std::uint64_t, std::size_t> slot_of_;
  std::vector<FileState> files_;
  std::vector<Stream> streams_;
  std::vector<pipeline::WindowState> windows_;
  std::vector<pipeline::WindowState> scratch_windows_;
  std::int64_t open_second_ = 0;
  int global_readahead_ = kDefaultReadahead;
  RunReport report_;
};

}  // namespace

RunReport simulate(std::span<const Job> jobs, const CacheSim& cache, const TunerPolicy& policy, ModelBundle* model,
                   const SimOptions& options) {
  if (jobs.empty()) throw ArgumentError("simulate needs at least one job");
  Simulator sim(jobs, cache, policy, model, options);
  return sim.run();
}

}  // namespace kml::sim
