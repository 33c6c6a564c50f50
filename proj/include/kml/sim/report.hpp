#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "kml/sim/nfs.hpp"
#include "kml/sim/simulator.hpp"

namespace kml::sim {

/// Line-oriented `key=value` summary; per-stream keys are prefixed with
/// `stream.<index>.`.
void write_report_text(std::ostream& out, const RunReport& report);
void write_report_text(std::ostream& out, const NfsRunReport& report);

/// The same summary as a JSON document.
std::string report_json(const RunReport& report);
std::string report_json(const NfsRunReport& report);

/// CSV with header `second,file_id,job,ops,readahead,predicted,truth`.
void write_timeline_csv(std::ostream& out, const RunReport& report);
/// CSV with header `second,iteration,events,rsize,predicted`.
void write_timeline_csv(std::ostream& out, const NfsRunReport& report);

/// One `class=value` line per class, in class order.
void write_class_map(std::ostream& out, const ClassMap& map);
void write_class_map(const std::filesystem::path& path, const ClassMap& map);
/// Throws ConfigError for unknown classes, bad values, or missing classes.
ClassMap read_class_map(std::istream& in);
ClassMap read_class_map(const std::filesystem::path& path);

}  // namespace kml::sim
