#pragma once

// Column-wise intermediate store. Parsers write typed raw cells concurrently through
// FrameWriter sinks; finalize() resolves shared strings, promotes each column to one type and
// packs values with a validity bitmap.

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "sheetreader/scanner.hpp"

namespace sheetreader {

/// Owned string table. Strings are packed into one byte buffer.
class SharedStrings {
 public:
  void reserve(std::size_t count, std::size_t bytes = 0);
  void add(std::string_view s);
  std::size_t size() const noexcept { return offsets_.size() - 1; }
  std::string_view at(std::size_t i) const noexcept {
    return std::string_view(bytes_).substr(offsets_[i], offsets_[i + 1] - offsets_[i]);
  }
  std::size_t byte_size() const noexcept { return bytes_.size(); }

 private:
  std::string bytes_;
  std::vector<std::uint64_t> offsets_{0};
};

enum class CellKind : std::uint8_t {
  null = 0,
  integer,
  real,
  boolean,
  shared,
  text,
  date,
  error,
};

enum class ColumnType : std::uint8_t { empty, boolean, integer, real, date, string };

std::string_view to_string(ColumnType type) noexcept;

/// Least upper bound over a mask of observed CellKind bits.
ColumnType column_type_for(std::uint32_t kind_mask) noexcept;

class FrameBuilder;

/// Per-thread sink. Not thread-safe; each parser owns one.
class FrameWriter final : public ScanSink {
 public:
  FrameWriter(FrameWriter&&) noexcept = default;
  ~FrameWriter() override;

  void on_cell(const CellEvent& cell) override;
  /// Merges local extents into the builder. Called once the writer is done.
  void flush();

  std::uint64_t cells() const noexcept { return cells_; }

 private:
  friend class FrameBuilder;
  FrameWriter(FrameBuilder& builder, std::uint32_t arena);

  FrameBuilder* builder_;
  std::uint32_t arena_;
  std::uint32_t max_row_ = 0;
  std::uint32_t max_col_ = 0;
  std::uint64_t cells_ = 0;
  std::int64_t max_shared_index_ = -1;
  bool flushed_ = false;
};

struct ColumnFrame;

class FrameBuilder {
 public:
  FrameBuilder();
  ~FrameBuilder();
  FrameBuilder(const FrameBuilder&) = delete;
  FrameBuilder& operator=(const FrameBuilder&) = delete;

  /// Capacity for rows x cols cells; switches to lock-free writes. Throws Error{out_of_memory}.
  void preallocate(std::uint32_t rows, std::uint32_t cols);
  bool preallocated() const noexcept { return preallocated_; }
  std::uint32_t capacity_rows() const noexcept { return capacity_rows_; }
  /// Doubling growth, exclusive with every write. Smaller requests are ignored.
  void grow_rows(std::uint32_t rows);

  void set_date_styles(std::vector<bool> flags) { date_styles_ = std::move(flags); }
  FrameWriter writer();

  /// Raw write used by FrameWriter; `bits` holds the payload (value or string handle).
  void set_cell(std::uint32_t row, std::uint32_t col, CellKind kind, std::uint64_t bits);

  /// Validates every shared index against the table. Throws Error{dangling_string_index}.
  void resolve_shared_strings(std::shared_ptr<const SharedStrings> strings);

  std::uint32_t rows() const noexcept { return n_rows_; }
  std::uint32_t cols() const noexcept { return n_cols_; }
  std::uint64_t cells() const noexcept { return n_cells_; }
  /// Bytes held by raw columns and string arenas.
  std::size_t allocated_bytes() const;
  std::uint32_t growth_count() const noexcept { return growths_; }

 private:
  friend class FrameWriter;
  friend ColumnFrame finalize(FrameBuilder&& builder, bool headers);

  struct RawColumn {
    std::vector<std::uint64_t> slots;
    std::vector<CellKind> kinds;
    std::atomic<std::uint32_t> head_mask{0};  // kinds seen in row 1
    std::atomic<std::uint32_t> body_mask{0};  // kinds seen below row 1
  };
  struct Overflow {
    std::uint32_t row;
    std::uint32_t col;
    CellKind kind;
    std::uint64_t bits;
  };
  struct Arena {
    std::vector<std::string> strings;
    std::vector<Overflow> overflow;
  };

  RawColumn* column(std::uint32_t col);
  RawColumn* create_column(std::uint32_t col);
  void write_slot(RawColumn& c, std::uint32_t row, CellKind kind, std::uint64_t bits);
  void apply_overflow();
  std::string_view text(std::uint64_t handle) const;

  std::unique_ptr<std::atomic<RawColumn*>[]> columns_;
  std::vector<std::unique_ptr<RawColumn>> owned_;
  std::vector<std::unique_ptr<Arena>> arenas_;
  std::vector<bool> date_styles_;
  std::shared_ptr<const SharedStrings> strings_;
  mutable std::shared_mutex grow_mutex_;
  std::mutex create_mutex_;
  std::mutex merge_mutex_;
  bool preallocated_ = false;
  std::uint32_t capacity_rows_ = 0;
  std::uint32_t n_rows_ = 0;
  std::uint32_t n_cols_ = 0;
  std::uint64_t n_cells_ = 0;
  std::int64_t max_shared_index_ = -1;
  std::uint32_t growths_ = 0;
};

class Column {
 public:
  ColumnType type = ColumnType::empty;
  std::string name;

  std::size_t size() const noexcept { return size_; }
  bool valid(std::size_t i) const noexcept { return (validity_[i >> 6] >> (i & 63)) & 1u; }
  std::size_t null_count() const noexcept { return nulls_; }

  double real(std::size_t i) const noexcept { return reals_[i]; }  // real and date
  std::int64_t integer(std::size_t i) const noexcept { return ints_[i]; }
  bool boolean(std::size_t i) const noexcept { return ints_[i] != 0; }
  std::string_view string(std::size_t i) const noexcept {
    return std::string_view(bytes_).substr(offsets_[i], offsets_[i + 1] - offsets_[i]);
  }

  const std::vector<double>& reals() const noexcept { return reals_; }
  const std::vector<std::int64_t>& integers() const noexcept { return ints_; }

 private:
  friend ColumnFrame finalize(FrameBuilder&& builder, bool headers);
  std::size_t size_ = 0;
  std::size_t nulls_ = 0;
  std::vector<std::uint64_t> validity_;
  std::vector<double> reals_;
  std::vector<std::int64_t> ints_;
  std::string bytes_;
  std::vector<std::uint64_t> offsets_;
};

struct ColumnFrame {
  std::size_t n_rows = 0;
  std::vector<Column> columns;
  bool has_header = false;
};

/// Consumes the builder. With `headers`, row 1 supplies column names and data starts at row 2.
ColumnFrame finalize(FrameBuilder&& builder, bool headers = false);

/// Canonical text forms shared by CSV output and string promotion.
void append_double(std::string& out, double v);
void append_date(std::string& out, double serial);

void write_csv(const ColumnFrame& frame, std::ostream& out);
std::string to_csv(const ColumnFrame& frame);
std::string summary(const ColumnFrame& frame);

}  // namespace sheetreader
