#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "kml/model.hpp"

namespace kml::io {

inline constexpr std::uint8_t kFormatVersion = 1;

/// Deployment file layout (little-endian throughout):
///
///   0..3   magic "KMLM"
///   4      format version (1)
///   5      model kind (0 = nn, 1 = dtree)
///   6..7   class count, u16
///   8      feature schema tag (0 readahead, 1 nfs, 255 custom)
///   9..12  feature count, u32
///   then   per feature: normaliser mean f32, variance f32
///   nn:    layer count u16; per layer: kind u8 (0 fc, 1 sigmoid, 2 relu),
///          in u32, out u32, and for fc layers out*in weights (row-major)
///          followed by out biases, all f32
///   dtree: node count u32; pre-order records: kind u8 (0 split, 1 leaf),
///          then feature u16 + threshold f32 for splits, class u16 for leaves
///   last 4 bytes: CRC-32 (IEEE) of everything before it
std::vector<std::uint8_t> encode(const ModelBundle& model);

/// Validates magic, then version, then the checksum, then parses the body.
/// Throws FormatError, VersionError, CorruptionError or ModelKindError.
ModelBundle decode(std::span<const std::uint8_t> bytes, std::optional<ModelKind> expected = std::nullopt);

/// Writes via a temporary file in the destination directory and renames it
/// into place; on failure nothing is left at `path`. Throws IoError.
void save_model(const ModelBundle& model, const std::filesystem::path& path);

ModelBundle load_model(const std::filesystem::path& path, std::optional<ModelKind> expected = std::nullopt);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace kml::io
