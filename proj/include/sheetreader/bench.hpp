#pragma once

// Benchmark runner. Each repetition runs in a forked child whose resident set size is sampled
// by the parent until it exits.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sheetreader/engine.hpp"

namespace sheetreader {

struct BenchConfig {
  std::string id;
  std::filesystem::path file;
  std::string sheet;
  EngineOptions options;  // phases and stats pointers are ignored
};

struct BenchSettings {
  unsigned repeats = 5;
  unsigned sample_period_ms = 50;
  /// When set, children exec `executable bench-child <config-json>` instead of parsing in the
  /// forked image. The child writes its result line to file descriptor 3.
  std::filesystem::path executable;
  /// Recorded only; the harness never drops caches itself.
  bool caches_cleared = false;
};

struct BenchRow {
  std::string config;
  std::string mode;
  unsigned threads = 0;  // parser threads in interleaved mode
  std::uint64_t rows = 0;
  double wall_ms = 0;
  std::uint64_t peak_rss_bytes = 0;
  double decompress_ms = 0;
  double parse_ms = 0;
  double strings_ms = 0;
  double transform_ms = 0;
  unsigned repeat = 0;  // 1-based; 0 is the mean over successful repetitions
  std::string status = "ok";
  bool caches_cleared = false;
  std::vector<std::uint64_t> samples;  // RSS bytes, one per sample period

  friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

BenchReport run_benchmark(const std::vector<BenchConfig>& matrix, const BenchSettings& settings = {});

/// Column order of the report CSV.
const std::vector<std::string>& report_columns();
void emit_report(const BenchReport& report, std::ostream& out);
void emit_report(const BenchReport& report, const std::filesystem::path& out);
BenchReport read_report(std::istream& in);

std::string config_to_json(const BenchConfig& config);
BenchConfig config_from_json(std::string_view json);

/// Runs one parse and writes a single JSON result line to `fd`. Returns a process exit code.
int bench_child_main(const BenchConfig& config, int fd);

}  // namespace sheetreader
