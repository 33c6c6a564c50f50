#include "kml/trace.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "kml/error.hpp"
#include "kml/features.hpp"

namespace kml {
namespace {

constexpr std::array<std::string_view, 4> kEventNames = {"page_cache_add", "nfs_read",
                                                         "nfs_readpage_done", "lru_shrink"};

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char* name) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw IngestError("trace line " + std::to_string(line) + ": bad " + name + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(EventKind kind) { return kEventNames.at(static_cast<std::size_t>(kind)); }

std::optional<EventKind> parse_event_kind(std::string_view name) {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == name) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

void write_trace_csv(std::ostream& out, std::span<const TraceEvent> events) {
  out << kTraceCsvHeader << '\n';
  for (const auto& e : events) {
    out << e.timestamp_ns << ',' << to_string(e.kind) << ',' << e.file_id << ',' << e.offset << ','
        << e.reclaimed_pages << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceEvent> events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open trace for writing: " + path.string());
  write_trace_csv(out, events);
  if (!out) throw IoError("failed writing trace: " + path.string());
}

std::vector<TraceEvent> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError("trace is empty; expected header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader) throw IngestError("trace header mismatch: '" + line + "'");

  std::vector<TraceEvent> events;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string_view, 5> fields;
    std::string_view rest(line);
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (f + 1 == fields.size())) {
        throw IngestError("trace line " + std::to_string(lineno) + ": expected 5 fields");
      }
      fields[f] = rest.substr(0, comma);
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
    TraceEvent e;
    e.timestamp_ns = parse_field<std::int64_t>(fields[0], lineno, "timestamp_ns");
    const auto kind = parse_event_kind(fields[1]);
    if (!kind) {
      throw IngestError("trace line " + std::to_string(lineno) + ": unknown event kind '" +
                        std::string(fields[1]) + "'");
    }
    e.kind = *kind;
    e.file_id = parse_field<std::uint64_t>(fields[2], lineno, "file_id");
    e.offset = parse_field<std::int64_t>(fields[3], lineno, "offset");
    e.reclaimed_pages = parse_field<std::int64_t>(fields[4], lineno, "reclaimed_pages");
    if (e.offset < 0) throw IngestError("trace line " + std::to_string(lineno) + ": negative offset");
    events.push_back(e);
  }
  return events;
}

std::vector<TraceEvent> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read trace: " + path.string());
  return read_trace_csv(in);
}

std::string_view to_string(FeatureSchema schema) {
  switch (schema) {
    case FeatureSchema::readahead:
      return "readahead";
    case FeatureSchema::nfs:
      return "nfs";
    case FeatureSchema::custom:
      return "custom";
  }
  return "unknown";
}

std::span<const std::string_view> feature_names(FeatureSchema schema) {
  static constexpr std::array<std::string_view, 4> readahead = {
      "transactions_per_second", "cumulative_moving_mean_offset", "mean_abs_offset_diff",
      "current_readahead_sectors"};
  static constexpr std::array<std::string_view, 8> nfs = {
      "transactions_per_second", "mean_read_to_done_latency", "mean_read_interarrival",
      "mean_done_interarrival",  "mean_abs_requested_offset_diff", "mean_abs_page_offset_diff",
      "mean_reclaimed_pages",    "current_rsize"};
  switch (schema) {
    case FeatureSchema::readahead:
      return readahead;
    case FeatureSchema::nfs:
      return nfs;
    case FeatureSchema::custom:
      break;
  }
  return {};
}

}  // namespace kml
