// kmlctl: train, cross-validate, analyse and run the readahead / rsize
// tuners against the simulator.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kml/dataset.hpp"
#include "kml/error.hpp"
#include "kml/evaluation.hpp"
#include "kml/model_io.hpp"
#include "kml/sim/calibrate.hpp"
#include "kml/sim/nfs.hpp"
#include "kml/sim/presets.hpp"
#include "kml/sim/report.hpp"
#include "kml/sim/simulator.hpp"
#include "kml/trace.hpp"

namespace fs = std::filesystem;
using namespace kml;
using namespace kml::sim;

namespace {

struct Options {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string model_path;
  std::vector<std::string> traces;
  std::vector<std::string> labels;
  std::string workload;
  std::vector<std::string> sequence;
  std::vector<std::string> mix;
  std::string dataset;
  std::string mapping;
  std::string device = "nvme";
  std::string network = "lan";
  std::string mode = "vanilla";
  std::string model_kind = "nn";
  int readahead = kDefaultReadahead;
  int rsize = kDefaultRsize;
  std::size_t k = 10;
  bool nfs = false;
  std::optional<double> duration;
  std::size_t iterations = 4;
  std::size_t epochs = NnTemplate{}.epochs;
  float learning_rate = NnTemplate{}.learning_rate;
  std::size_t max_depth = dtree::InductionParams{}.max_depth;
  std::string candidates;
  bool candidates_given = false;
  std::int64_t file_pages = 0;
  std::size_t cache_pages = 0;
};

WorkloadKind workload_kind(const std::string& name) {
  const auto kind = parse_workload(name);
  if (!kind) throw ConfigError("unknown workload '" + name + "'");
  return *kind;
}

WorkloadSpec base_spec(const Options& opt) {
  WorkloadSpec spec = opt.nfs ? nfs_base_spec() : readahead_base_spec();
  if (opt.duration) spec.duration_seconds = *opt.duration;
  if (opt.file_pages > 0) spec.file_size_pages = opt.file_pages;
  spec.seed = opt.seed;
  return spec;
}

CacheSim cache_sim(const Options& opt) {
  CacheSim cache;
  const auto device = device_by_name(opt.device);
  if (!device) throw ConfigError("unknown device '" + opt.device + "'");
  cache.device = *device;
  if (opt.cache_pages > 0) cache.capacity_pages = opt.cache_pages;
  return cache;
}

NfsSim nfs_sim(const Options& opt) {
  NfsSim sim;
  const auto network = network_by_name(opt.network);
  if (!network) throw ConfigError("unknown network '" + opt.network + "'");
  sim.network = *network;
  if (opt.cache_pages > 0) sim.cache_pages = opt.cache_pages;
  return sim;
}

TuningMode tuning_mode(const std::string& name) {
  if (name == "vanilla") return TuningMode::vanilla_fixed;
  if (name == "per-disk") return TuningMode::per_disk;
  if (name == "per-file") return TuningMode::per_file;
  throw ConfigError("unknown mode '" + name + "'");
}

ModelTemplate model_template(const Options& opt) {
  if (opt.model_kind == "dtree") {
    TreeTemplate t;
    t.params.max_depth = opt.max_depth;
    return t;
  }
  if (opt.model_kind != "nn") throw ConfigError("unknown model kind '" + opt.model_kind + "'");
  NnTemplate t;
  t.architecture = opt.nfs ? nn::nfs_architecture() : nn::readahead_architecture();
  t.epochs = opt.epochs;
  t.learning_rate = opt.learning_rate;
  return t;
}

fs::path out_path(const Options& opt, const std::string& name) {
  fs::create_directories(opt.out_dir);
  return fs::path(opt.out_dir) / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

// Labeled features from readahead traces: each trace is replayed once per
// candidate readahead value with the tuner off.
Dataset dataset_from_traces(const Options& opt) {
  if (opt.nfs) throw ConfigError("trace-based training is only supported for the readahead schema");
  if (opt.labels.size() != opt.traces.size()) {
    throw ConfigError("every --trace needs a matching --label (" + std::to_string(opt.traces.size()) + " traces, " +
                      std::to_string(opt.labels.size()) + " labels)");
  }
  const CacheSim cache = cache_sim(opt);
  std::vector<FeatureVector> rows;
  for (std::size_t i = 0; i < opt.traces.size(); ++i) {
    const int cls = workload_class(workload_kind(opt.labels[i]));
    if (cls < 0) throw ConfigError("label '" + opt.labels[i] + "' is not a trained class");
    Job job;
    job.name = opt.traces[i];
    Phase phase;
    phase.trace = trace_from_events(read_trace_csv(fs::path(opt.traces[i])));
    phase.duration_seconds = opt.duration.value_or(20.0);
    phase.label = cls;
    job.phases.push_back(std::move(phase));
    for (int ra : default_readahead_candidates()) {
      TunerPolicy policy;
      policy.initial_readahead = ra;
      SimOptions so;
      so.record_features = true;
      const auto run = simulate(std::span<const Job>(&job, 1), cache, policy, nullptr, so);
      rows.insert(rows.end(), run.features.begin(), run.features.end());
    }
  }
  return Dataset::from_vectors(rows, kClassCount);
}

Dataset load_or_collect(const Options& opt) {
  Dataset data;
  if (!opt.dataset.empty()) {
    data = read_dataset_csv(fs::path(opt.dataset));
  } else if (!opt.traces.empty()) {
    data = dataset_from_traces(opt);
  } else if (opt.nfs) {
    NfsCollectionPlan plan = default_nfs_plan(opt.seed);
    if (opt.duration) plan.seconds_per_run = *opt.duration;
    if (opt.file_pages > 0) plan.base.file_size_pages = opt.file_pages;
    data = collect_nfs_dataset(plan, nfs_sim(opt));
  } else {
    CollectionPlan plan = default_readahead_plan(opt.seed);
    if (opt.duration) plan.seconds_per_run = *opt.duration;
    if (opt.file_pages > 0) plan.base.file_size_pages = opt.file_pages;
    data = collect_readahead_dataset(plan, cache_sim(opt));
  }
  const std::size_t expected = feature_count(opt.nfs ? FeatureSchema::nfs : FeatureSchema::readahead);
  if (data.feature_count() != expected) {
    throw ConfigError("dataset has " + std::to_string(data.feature_count()) + " features; the " +
                      (opt.nfs ? "nfs" : "readahead") + " schema needs " + std::to_string(expected));
  }
  if (data.schema == FeatureSchema::custom) data.schema = opt.nfs ? FeatureSchema::nfs : FeatureSchema::readahead;
  if (data.size() == 0) throw ConfigError("dataset is empty");
  return data;
}

void print_class_table(const Dataset& data) {
  const auto counts = data.class_histogram();
  std::cout << "class frequencies:\n";
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const std::string name = c < kClassCount ? std::string(class_name(c)) : "class" + std::to_string(c);
    std::cout << "  " << std::left << std::setw(24) << name << std::right << std::setw(7) << counts[c] << "  "
              << std::fixed << std::setprecision(1) << 100.0 * static_cast<double>(counts[c]) / data.size() << "%\n";
  }
  std::cout.unsetf(std::ios::floatfield);
}

int cmd_train(const Options& opt) {
  const Dataset data = load_or_collect(opt);
  if (opt.dataset.empty()) write_dataset_csv(out_path(opt, "dataset.csv"), data);
  TrainingLog log;
  const ModelBundle model = train_model(data, model_template(opt), opt.seed, &log);
  const fs::path path = opt.model_path.empty() ? out_path(opt, "model.kml") : fs::path(opt.model_path);
  io::save_model(model, path);

  nlohmann::json summary;
  summary["model"] = path.string();
  summary["model_kind"] = to_string(model.kind());
  summary["samples"] = data.size();
  summary["training_accuracy"] = log.training_accuracy;
  std::cout << "samples=" << data.size() << '\n';
  std::cout << "model_kind=" << to_string(model.kind()) << '\n';
  if (!log.epoch_loss.empty()) {
    const auto [lo, hi] = std::minmax_element(log.epoch_loss.begin(), log.epoch_loss.end());
    std::cout << "loss_first=" << log.epoch_loss.front() << '\n';
    std::cout << "loss_last=" << log.epoch_loss.back() << '\n';
    std::cout << "loss_min=" << *lo << '\n';
    std::cout << "loss_max=" << *hi << '\n';
    summary["epoch_loss"] = log.epoch_loss;
  } else {
    const auto s = dtree::stats(model.tree());
    std::cout << "tree_nodes=" << s.node_count << '\n';
    std::cout << "tree_depth=" << s.depth << '\n';
    summary["tree_nodes"] = s.node_count;
    summary["tree_depth"] = s.depth;
  }
  std::cout << "training_accuracy=" << log.training_accuracy << '\n';
  std::cout << "model=" << path.string() << '\n';
  write_text(out_path(opt, "train.json"), summary.dump(2));
  return 0;
}

int cmd_xval(const Options& opt) {
  const Dataset data = load_or_collect(opt);
  print_class_table(data);
  const KFoldResult r = kfold_evaluate(data, opt.k, model_template(opt), opt.seed);
  for (std::size_t f = 0; f < r.fold_accuracy.size(); ++f) {
    std::cout << "fold." << f << ".accuracy=" << r.fold_accuracy[f] << '\n';
  }
  std::cout << "k=" << opt.k << '\n';
  std::cout << "mean_accuracy=" << r.mean_accuracy << '\n';
  nlohmann::json summary;
  summary["k"] = opt.k;
  summary["model_kind"] = opt.model_kind;
  summary["fold_accuracy"] = r.fold_accuracy;
  summary["mean_accuracy"] = r.mean_accuracy;
  summary["class_counts"] = data.class_histogram();
  write_text(out_path(opt, "xval.json"), summary.dump(2));
  return 0;
}

int cmd_importance(const Options& opt) {
  const Dataset data = load_or_collect(opt);
  const ModelTemplate tmpl = model_template(opt);
  const double baseline = kfold_evaluate(data, opt.k, tmpl, opt.seed).mean_accuracy;
  std::vector<std::pair<std::size_t, double>> rows;
  for (std::size_t f = 0; f < data.feature_count(); ++f) {
    rows.emplace_back(f, permutation_importance(data, f, opt.k, tmpl, opt.seed).mean_accuracy);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  std::cout << "baseline_accuracy=" << baseline << '\n';
  std::cout << "rank  feature                           permuted_accuracy\n";
  nlohmann::json summary;
  summary["baseline_accuracy"] = baseline;
  summary["features"] = nlohmann::json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& name = data.feature_names[rows[i].first];
    std::cout << std::setw(4) << i + 1 << "  " << std::left << std::setw(34) << name << std::right << rows[i].second
              << '\n';
    summary["features"].push_back({{"rank", i + 1}, {"feature", name}, {"permuted_accuracy", rows[i].second}});
  }
  write_text(out_path(opt, "importance.json"), summary.dump(2));
  return 0;
}

std::optional<ModelBundle> load_model_if_any(const Options& opt, bool required) {
  if (opt.model_path.empty()) {
    if (required) throw ConfigError("mode " + opt.mode + " needs --model");
    return std::nullopt;
  }
  const auto kind = opt.model_kind == "dtree" ? ModelKind::dtree : ModelKind::nn;
  return io::load_model(fs::path(opt.model_path), kind);
}

std::vector<Job> readahead_jobs(const Options& opt) {
  const WorkloadSpec base = base_spec(opt);
  std::vector<Job> jobs;
  if (!opt.traces.empty()) {
    if (opt.traces.size() != 1) throw ConfigError("simulate replays exactly one --trace");
    Job job;
    job.name = opt.traces.front();
    Phase phase;
    phase.trace = trace_from_events(read_trace_csv(fs::path(opt.traces.front())));
    phase.duration_seconds = base.duration_seconds;
    phase.name = job.name;
    job.phases.push_back(std::move(phase));
    jobs.push_back(std::move(job));
  } else if (!opt.sequence.empty()) {
    Job job;
    job.name = "sequence";
    std::uint64_t seed = opt.seed;
    for (const auto& name : opt.sequence) {
      WorkloadSpec spec = base;
      spec.kind = workload_kind(name);
      spec.seed = seed++;
      job.phases.push_back(make_phase(spec));
    }
    jobs.push_back(std::move(job));
  } else if (!opt.mix.empty()) {
    if (opt.mix.size() != 2) throw ConfigError("--mix takes exactly two workloads");
    for (std::size_t j = 0; j < opt.mix.size(); ++j) {
      WorkloadSpec spec = base;
      spec.kind = workload_kind(opt.mix[j]);
      spec.seed = opt.seed + j;
      spec.first_file_id = 1 + 100 * j;
      jobs.push_back(single_job(spec));
    }
  } else {
    WorkloadSpec spec = base;
    spec.kind = workload_kind(opt.workload.empty() ? "readrandom" : opt.workload);
    jobs.push_back(single_job(spec));
  }
  return jobs;
}

ClassMap readahead_map(const Options& opt, const CacheSim& cache) {
  if (!opt.mapping.empty()) return read_class_map(fs::path(opt.mapping));
  WorkloadSpec spec = base_spec(opt);
  spec.duration_seconds = 20.0;
  const auto specs = class_specs(spec);
  return calibrate_mapping(specs, cache, default_readahead_candidates()).map;
}

ClassMap rsize_map(const Options& opt, const NfsSim& sim) {
  if (!opt.mapping.empty()) return read_class_map(fs::path(opt.mapping));
  const auto specs = class_specs(base_spec(opt));
  return calibrate_rsize(specs, sim, 2).map;
}

int simulate_nfs_cmd(const Options& opt) {
  const NfsSim sim = nfs_sim(opt);
  TunerPolicy policy;
  policy.mode = tuning_mode(opt.mode);
  if (policy.mode == TuningMode::per_disk) policy.rsize_map = rsize_map(opt, sim);
  auto model = load_model_if_any(opt, policy.mode != TuningMode::vanilla_fixed);

  Trace trace;
  int label = -1;
  if (!opt.traces.empty()) {
    trace = trace_from_events(read_trace_csv(fs::path(opt.traces.front())));
  } else {
    WorkloadSpec spec = base_spec(opt);
    spec.kind = workload_kind(opt.workload.empty() ? "readrandom" : opt.workload);
    label = workload_class(spec.kind);
    trace = generate_trace(spec);
  }
  NfsOptions no;
  no.iterations = opt.iterations;
  no.fixed_rsize = opt.rsize;
  const auto report = simulate_nfs(trace, label, sim, policy, model ? &*model : nullptr, no);

  write_report_text(std::cout, report);
  std::ofstream text(out_path(opt, "report.txt"));
  write_report_text(text, report);
  write_text(out_path(opt, "summary.json"), report_json(report));
  std::ofstream timeline(out_path(opt, "timeline.csv"));
  write_timeline_csv(timeline, report);
  return 0;
}

int cmd_simulate(const Options& opt) {
  if (opt.nfs) return simulate_nfs_cmd(opt);
  const CacheSim cache = cache_sim(opt);
  TunerPolicy policy;
  policy.mode = tuning_mode(opt.mode);
  policy.initial_readahead = opt.readahead;
  policy.model_kind = opt.model_kind == "dtree" ? ModelKind::dtree : ModelKind::nn;
  if (policy.mode != TuningMode::vanilla_fixed) policy.readahead_map = readahead_map(opt, cache);
  auto model = load_model_if_any(opt, policy.mode != TuningMode::vanilla_fixed);
  const auto jobs = readahead_jobs(opt);
  const auto report = simulate(jobs, cache, policy, model ? &*model : nullptr);

  write_report_text(std::cout, report);
  std::ofstream text(out_path(opt, "report.txt"));
  write_report_text(text, report);
  write_text(out_path(opt, "summary.json"), report_json(report));
  std::ofstream timeline(out_path(opt, "timeline.csv"));
  write_timeline_csv(timeline, report);
  return 0;
}

std::vector<int> parse_candidates(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    int v = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size() || v < 0) {
      throw ConfigError("bad readahead candidate '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("readahead candidate list is empty");
  return out;
}

int cmd_calibrate(const Options& opt) {
  const WorkloadSpec base = base_spec(opt);
  const auto specs = class_specs(base);
  ClassMap map{};
  nlohmann::json summary;
  if (opt.nfs) {
    if (opt.candidates_given) throw ConfigError("rsize calibration always sweeps the seven supported values");
    const auto cal = calibrate_rsize(specs, nfs_sim(opt), 2);
    map = cal.map;
    for (std::size_t c = 0; c < kClassCount; ++c) {
      for (const auto& [v, t] : cal.sweeps[c]) summary["sweeps"][class_name(c)].push_back({{"rsize", v}, {"throughput", t}});
    }
  } else {
    std::vector<int> candidates;
    if (opt.candidates_given) {
      candidates = parse_candidates(opt.candidates);
    } else {
      const auto d = default_readahead_candidates();
      candidates.assign(d.begin(), d.end());
    }
    const auto cal = calibrate_mapping(specs, cache_sim(opt), candidates);
    map = cal.map;
    for (std::size_t c = 0; c < kClassCount; ++c) {
      for (const auto& p : cal.sweeps[c]) {
        summary["sweeps"][class_name(c)].push_back({{"readahead", p.value}, {"throughput", p.throughput}});
      }
    }
  }
  const fs::path path = opt.mapping.empty() ? out_path(opt, "mapping.txt") : fs::path(opt.mapping);
  write_class_map(path, map);
  write_class_map(std::cout, map);
  write_text(out_path(opt, "calibration.json"), summary.dump(2));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kmlctl: storage parameter tuning with small ML models"};
  app.set_config("--config", "", "key=value file mirroring the long flags; flags win");
  app.require_subcommand(1, 1);
  app.fallthrough();

  Options opt;
  app.add_option("--seed", opt.seed, "seed for every random draw");
  app.add_option("--out-dir", opt.out_dir, "directory for reports and generated files");
  app.add_option("--model", opt.model_path, "model file to write (train) or load (simulate)");
  auto* trace = app.add_option("--trace", opt.traces, "trace CSV (repeat with --label when training)");
  app.add_option("--label", opt.labels, "class of the preceding --trace when training");
  auto* workload = app.add_option("--workload", opt.workload, "workload kind to generate");
  auto* sequence = app.add_option("--sequence", opt.sequence, "workloads run back to back")->delimiter(',');
  auto* mix = app.add_option("--mix", opt.mix, "two workloads run concurrently")->delimiter(',');
  trace->excludes(workload)->excludes(sequence)->excludes(mix);
  workload->excludes(sequence)->excludes(mix);
  sequence->excludes(mix);
  app.add_option("--dataset", opt.dataset, "labeled feature CSV (header label,<features>)");
  app.add_option("--mapping", opt.mapping, "class=value map to read (simulate) or write (calibrate)");
  app.add_option("--device", opt.device, "device preset")->check(CLI::IsMember({"nvme", "sata"}));
  app.add_option("--network", opt.network, "NFS network preset")->check(CLI::IsMember({"lan", "slow"}));
  app.add_option("--mode", opt.mode, "tuning mode")->check(CLI::IsMember({"vanilla", "per-disk", "per-file"}));
  app.add_option("--model-kind", opt.model_kind, "classifier kind")->check(CLI::IsMember({"nn", "dtree"}));
  app.add_option("--readahead", opt.readahead, "initial / fixed readahead in sectors")->check(CLI::Range(0, 1 << 20));
  app.add_option("--rsize", opt.rsize, "fixed NFS rsize in bytes")
      ->check(CLI::IsMember(std::vector<int>(kRsizeValues.begin(), kRsizeValues.end())));
  app.add_option("--k", opt.k, "cross-validation folds")->check(CLI::PositiveNumber);
  app.add_flag("--nfs", opt.nfs, "use the NFS rsize schema and simulator");
  app.add_option("--duration", opt.duration, "simulated seconds per workload (trace length for --nfs)")
      ->check(CLI::PositiveNumber);
  app.add_option("--iterations", opt.iterations, "NFS trace iterations")->check(CLI::PositiveNumber);
  app.add_option("--epochs", opt.epochs, "training epochs")->check(CLI::PositiveNumber);
  app.add_option("--learning-rate", opt.learning_rate, "SGD learning rate")->check(CLI::PositiveNumber);
  app.add_option("--max-depth", opt.max_depth, "decision tree depth limit")->check(CLI::PositiveNumber);
  auto* candidates = app.add_option("--candidates", opt.candidates, "comma-separated readahead values to sweep");
  candidates->expected(0, 1);
  app.add_option("--file-pages", opt.file_pages, "pages per data file")->check(CLI::PositiveNumber);
  app.add_option("--cache-pages", opt.cache_pages, "page cache capacity")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "train a classifier and write a model file");
  auto* xval = app.add_subcommand("xval", "k-fold cross-validation");
  auto* importance = app.add_subcommand("importance", "permutation feature importance");
  auto* simulate_cmd = app.add_subcommand("simulate", "closed-loop simulation run");
  auto* calibrate = app.add_subcommand("calibrate", "sweep fixed values and write the class map");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }
  opt.candidates_given = candidates->count() > 0;

  try {
    if (train->parsed()) return cmd_train(opt);
    if (xval->parsed()) return cmd_xval(opt);
    if (importance->parsed()) return cmd_importance(opt);
    if (simulate_cmd->parsed()) return cmd_simulate(opt);
    if (calibrate->parsed()) return cmd_calibrate(opt);
  } catch (const kml::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
