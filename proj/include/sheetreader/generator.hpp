#pragma once

// Synthetic workbook generator. Cell values come from one seeded generator consumed in
// row-major order, so a file with fewer rows holds a prefix of a larger one with the same seed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sheetreader/frame.hpp"
#include "sheetreader/metadata.hpp"

namespace sheetreader {

enum class GenKind : std::uint8_t { floating, integer, text, boolean, date };

struct GenColumn {
  GenKind kind = GenKind::floating;
  double unique_fraction = 1.0;  // text only
  double blank_fraction = 0.0;
};

enum class StringStorage : std::uint8_t { shared, inline_strings };

struct GenSpec {
  std::uint64_t rows = 0;
  std::vector<GenColumn> columns;
  bool emit_r_attributes = true;
  bool emit_dimension = true;
  StringStorage strings = StringStorage::shared;
  std::uint64_t seed = 1;
  unsigned sheets = 1;
  bool rich_text = false;      // markup characters, quotes, commas, newlines and UTF-8
  bool force_zip64 = false;
  int compression_level = 6;

  /// 40 float, 30 integer, 20 text (25% unique), 10 text (75% unique) columns.
  static GenSpec mixed(std::uint64_t rows, std::uint64_t seed = 1);
  static GenSpec numeric(std::uint64_t rows, std::size_t cols, std::uint64_t seed = 1);
  static GenSpec text(std::uint64_t rows, std::size_t cols, std::uint64_t seed = 1);

  static GenSpec from_json(std::string_view json);
  std::string to_json() const;
};

std::string_view to_string(GenKind kind) noexcept;

struct GenOptions {
  bool keep_csv = true;         // ground-truth CSV of sheet 1 kept in memory
  bool keep_sheet_xml = false;  // uncompressed XML of sheet 1 kept in memory
};

struct GenResult {
  std::string csv;
  std::string sheet_xml;
  SheetDimension extent;                 // populated extent of sheet 1
  std::vector<ColumnType> column_types;  // expected finalized types, extent columns only
  std::vector<std::uint64_t> null_counts;
  std::vector<double> numeric_sums;      // per column, numeric kinds only
  std::uint64_t unique_strings = 0;
  std::uint64_t string_cells = 0;
  std::uint64_t cells = 0;
};

GenResult generate_xlsx(const GenSpec& spec, const std::filesystem::path& out,
                        const GenOptions& options = {});

}  // namespace sheetreader
