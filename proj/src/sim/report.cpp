#include "kml/sim/report.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "kml/error.hpp"

namespace kml::sim {

void write_report_text(std::ostream& out, const RunReport& report) {
  out << "aggregate_throughput=" << report.aggregate_throughput << '\n';
  out << "streams=" << report.streams.size() << '\n';
  out << "decisions=" << report.decisions << '\n';
  out << "dropped_features=" << report.dropped_features << '\n';
  out << "max_resident_pages=" << report.max_resident_pages << '\n';
  for (std::size_t i = 0; i < report.streams.size(); ++i) {
    const auto& s = report.streams[i];
    const std::string p = "stream." + std::to_string(i) + ".";
    out << p << "name=" << s.name << '\n';
    out << p << "ops=" << s.ops << '\n';
    out << p << "hits=" << s.hits << '\n';
    out << p << "misses=" << s.misses << '\n';
    out << p << "appends=" << s.appends << '\n';
    out << p << "pages_read=" << s.pages_read << '\n';
    out << p << "seconds=" << s.seconds << '\n';
    out << p << "throughput=" << s.throughput << '\n';
  }
}

void write_report_text(std::ostream& out, const NfsRunReport& report) {
  out << "throughput=" << report.throughput << '\n';
  out << "steady_throughput=" << report.steady_throughput << '\n';
  out << "iterations=" << report.iterations.size() << '\n';
  out << "decisions=" << report.decisions << '\n';
  for (std::size_t i = 0; i < report.iterations.size(); ++i) {
    const auto& it = report.iterations[i];
    const std::string p = "iteration." + std::to_string(i) + ".";
    out << p << "rsize=" << it.rsize << '\n';
    out << p << "latched_class=" << it.latched_class << '\n';
    out << p << "ops=" << it.ops << '\n';
    out << p << "seconds=" << it.seconds << '\n';
    out << p << "throughput=" << it.throughput << '\n';
  }
}

std::string report_json(const RunReport& report) {
  nlohmann::json j;
  j["aggregate_throughput"] = report.aggregate_throughput;
  j["decisions"] = report.decisions;
  j["dropped_features"] = report.dropped_features;
  j["max_resident_pages"] = report.max_resident_pages;
  j["streams"] = nlohmann::json::array();
  for (const auto& s : report.streams) {
    j["streams"].push_back({{"name", s.name},
                            {"ops", s.ops},
                            {"hits", s.hits},
                            {"misses", s.misses},
                            {"appends", s.appends},
                            {"pages_read", s.pages_read},
                            {"seconds", s.seconds},
                            {"throughput", s.throughput}});
  }
  return j.dump(2);
}

std::string report_json(const NfsRunReport& report) {
  nlohmann::json j;
  j["throughput"] = report.throughput;
  j["steady_throughput"] = report.steady_throughput;
  j["decisions"] = report.decisions;
  j["iterations"] = nlohmann::json::array();
  for (const auto& it : report.iterations) {
    j["iterations"].push_back({{"rsize", it.rsize},
                               {"latched_class", it.latched_class},
                               {"ops", it.ops},
                               {"seconds", it.seconds},
                               {"throughput", it.throughput}});
  }
  return j.dump(2);
}

void write_timeline_csv(std::ostream& out, const RunReport& report) {
  out << "second,file_id,job,ops,readahead,predicted,truth\n";
  for (const auto& r : report.timeline) {
    out << r.second << ',' << r.file_id << ',' << r.job << ',' << r.ops << ',' << r.readahead << ',' << r.predicted
        << ',' << r.truth << '\n';
  }
}

void write_timeline_csv(std::ostream& out, const NfsRunReport& report) {
  out << "second,iteration,events,rsize,predicted\n";
  for (const auto& r : report.timeline) {
    out << r.second << ',' << r.iteration << ',' << r.events << ',' << r.rsize << ',' << r.predicted << '\n';
  }
}

void write_class_map(std::ostream& out, const ClassMap& map) {
  for (std::size_t c = 0; c < kClassCount; ++c) out << class_name(c) << '=' << map[c] << '\n';
}

void write_class_map(const std::filesystem::path& path, const ClassMap& map) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mapping file: " + path.string());
  write_class_map(out, map);
}

ClassMap read_class_map(std::istream& in) {
  ClassMap map{};
  std::array<bool, kClassCount> seen{};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("mapping line " + std::to_string(lineno) + ": expected class=value");
    }
    const std::string name = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    const auto kind = parse_workload(name);
    if (!kind || workload_class(*kind) < 0) {
      throw ConfigError("mapping line " + std::to_string(lineno) + ": unknown class '" + name + "'");
    }
    int v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size()) {
      throw ConfigError("mapping line " + std::to_string(lineno) + ": bad value '" + value + "'");
    }
    const auto cls = static_cast<std::size_t>(workload_class(*kind));
    map[cls] = v;
    seen[cls] = true;
  }
  for (std::size_t c = 0; c < kClassCount; ++c) {
    if (!seen[c]) throw ConfigError("mapping has no value for " + std::string(class_name(c)));
  }
  return map;
}

ClassMap read_class_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read mapping file: " + path.string());
  return read_class_map(in);
}

}  // namespace kml::sim
