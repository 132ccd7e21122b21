#pragma once

// Engine entry points and the options shared by every parsing mode.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sheetreader/archive.hpp"
#include "sheetreader/frame.hpp"
#include "sheetreader/metadata.hpp"
#include "sheetreader/scanner.hpp"

namespace sheetreader {

enum class Mode : std::uint8_t { consecutive, interleaved, parallel_deflate };
enum class StringsMode : std::uint8_t { parallel, sequential };

std::string_view to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view text);
StringsMode parse_strings_mode(std::string_view text);

/// Timestamps of loading stages, relative to construction. Thread-safe.
class PhaseLog {
 public:
  struct Phase {
    std::string name;
    double start_ms = 0;
    double end_ms = 0;
  };

  PhaseLog();
  void begin(std::string_view name);
  void end(std::string_view name);
  std::vector<Phase> phases() const;
  /// Sum of the durations of all phases with this name.
  double total_ms(std::string_view name) const;

 private:
  double now_ms() const;
  std::chrono::steady_clock::time_point origin_;
  mutable std::mutex mutex_;
  std::vector<Phase> phases_;
};

class PhaseScope {
 public:
  PhaseScope(PhaseLog* log, std::string_view name) : log_(log), name_(name) {
    if (log_) log_->begin(name_);
  }
  ~PhaseScope() {
    if (log_) log_->end(name_);
  }
  PhaseScope(const PhaseScope&) = delete;
  PhaseScope& operator=(const PhaseScope&) = delete;

 private:
  PhaseLog* log_;
  std::string name_;
};

struct EngineStats {
  std::uint64_t cells = 0;        // cells emitted by all parsers
  std::uint64_t document_bytes = 0;
  std::uint64_t slabs = 0;        // interleaved: slabs published
  unsigned parsers = 0;           // parser threads actually used
  bool preallocated = false;
  bool prescanned = false;
};

struct EngineOptions {
  Mode mode = Mode::consecutive;
  unsigned threads = 8;
  unsigned parser_threads = 2;
  std::size_t ring_elements = 1024;
  std::size_t ring_element_size = 32 * 1024;
  StringsMode strings = StringsMode::parallel;
  bool headers = false;
  bool verify = false;
  /// Consecutive mode refuses to start when compressed + uncompressed exceeds this.
  std::optional<std::uint64_t> memory_budget;
  std::uint64_t boundary_interval = 1 << 20;
  bool checked_ring = false;
  PhaseLog* phases = nullptr;
  EngineStats* stats = nullptr;
};

/// Bytes the kernel reports as available, if known.
std::optional<std::uint64_t> available_memory();

// --- consecutive -----------------------------------------------------------------------------

struct ChunkBounds {
  std::uint64_t start = 0;
  std::uint64_t end = 0;
  friend bool operator==(const ChunkBounds&, const ChunkBounds&) = default;
};

std::vector<ChunkBounds> split_chunks(std::uint64_t doc_len, unsigned threads);

/// Parses one chunk of a fully decompressed worksheet. The first chunk starts in document mode;
/// the others start at their first anchor, using `start` for attribute-free documents.
/// Returns the number of cells emitted.
std::uint64_t parse_chunk(std::string_view doc, ChunkBounds bounds, ScanSink& sink,
                          ScanPosition start = {});

struct Prescan {
  std::vector<ScanPosition> starts;  // one per chunk
  std::uint32_t rows = 0;            // highest row number
  std::uint32_t cols = 0;            // widest row
};

/// One light pass counting <row and <c opens.
Prescan prescan_offsets(std::string_view doc, const std::vector<ChunkBounds>& plan);

/// Row/column of the last cell carrying an r attribute, found scanning backwards.
std::optional<SheetDimension> tail_scan(std::string_view doc);

/// True when the first cell of the document carries an r attribute (or there are no cells).
bool has_cell_refs(std::string_view doc);

ColumnFrame parse_consecutive(const Archive& archive, std::string_view sheet,
                              const EngineOptions& options);

// --- interleaved -----------------------------------------------------------------------------

ColumnFrame parse_interleaved(const Archive& archive, std::string_view sheet,
                              const EngineOptions& options);

// --- shared -----------------------------------------------------------------------------------

/// Streams and parses a shared-strings part on the calling thread.
std::shared_ptr<SharedStrings> parse_shared_strings(const Archive& archive, std::string_view path,
                                                    std::optional<std::uint64_t> count,
                                                    std::size_t window = 64 * 1024);

/// Opens the file and dispatches on options.mode. Parallel-deflate mode needs the sidecar index.
ColumnFrame read_sheet(const std::filesystem::path& path, std::string_view sheet,
                       const EngineOptions& options);

}  // namespace sheetreader
