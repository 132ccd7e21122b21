#pragma once

// Worksheet entries recompressed with history resets at regular intervals, plus the offset
// index that lets independent workers start inflating at any reset point.
//
// The index lives in a sidecar "<file>.sridx", a UTF-8 JSON object:
//   {"version": 1, "entry": "xl/worksheets/sheet1.xml", "uncompressed_size": N,
//    "boundaries": [[0, 0], [c1, u1], ...]}
// Offsets are bytes from the start of the entry's compressed payload (c) and of its
// uncompressed content (u).

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sheetreader/archive.hpp"
#include "sheetreader/engine.hpp"

namespace sheetreader {

struct BoundaryIndex {
  std::string entry;
  std::uint64_t uncompressed_size = 0;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> boundaries;
  friend bool operator==(const BoundaryIndex&, const BoundaryIndex&) = default;
};

/// Rewrites `input` into `output` with the named entry recompressed and reset every `interval`
/// uncompressed bytes. Other entries are copied without recompression.
BoundaryIndex repack_entry(const std::filesystem::path& input, std::string_view entry,
                           std::uint64_t interval, const std::filesystem::path& output,
                           int level = 6);

std::filesystem::path sidecar_path(const std::filesystem::path& xlsx);
void write_sidecar(const BoundaryIndex& index, const std::filesystem::path& path);
/// Throws Error{index_mismatch} for unreadable or inconsistent files.
BoundaryIndex read_sidecar(const std::filesystem::path& path);

/// Throws Error{index_mismatch} unless the index plausibly describes the archive entry.
void validate_index(const Archive& archive, const BoundaryIndex& index);

/// Indexes of the boundaries that start each worker's segment.
std::vector<std::size_t> segment_starts(std::size_t boundaries, unsigned threads);

ColumnFrame parse_parallel_decompress(const Archive& archive, const BoundaryIndex& index,
                                      std::string_view sheet, const EngineOptions& options);

}  // namespace sheetreader
