#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace kml {

enum class EventKind : std::uint8_t { page_cache_add, nfs_read, nfs_readpage_done, lru_shrink };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view name);

/// One timestamped tracepoint record. Offsets are page indices for page
/// cache events and request offsets (in pages) for NFS reads.
struct TraceEvent {
  std::int64_t timestamp_ns = 0;
  EventKind kind = EventKind::page_cache_add;
  std::uint64_t file_id = 0;
  std::int64_t offset = 0;
  std::int64_t reclaimed_pages = 0;  // lru_shrink only

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

inline constexpr std::string_view kTraceCsvHeader = "timestamp_ns,event_kind,file_id,offset,reclaimed_pages";

void write_trace_csv(std::ostream& out, std::span<const TraceEvent> events);
void write_trace_csv(const std::filesystem::path& path, std::span<const TraceEvent> events);

/// Parses the CSV trace format. Throws IngestError with the line number on
/// malformed rows or unknown event kinds, IoError when the file is unreadable.
std::vector<TraceEvent> read_trace_csv(std::istream& in);
std::vector<TraceEvent> read_trace_csv(const std::filesystem::path& path);

}  // namespace kml
