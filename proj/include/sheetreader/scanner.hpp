#pragma once

// Resumable byte-at-a-time scanner for SpreadsheetML worksheet and shared-strings documents.
//
// The scanner accepts the document in arbitrary windows and keeps every construct that is split
// across a window edge (names, attribute values, entity references, numbers, text) in its
// ParseState, so feeding a document in any partition yields the same events as one feed.
//
// Chunked parsing: a scanner started with begin_at_anchor() skips to the first <row or <c tag
// and resumes ordinary parsing from there. With a limit set, the scanner stops at the first '<'
// at or beyond the limit that is not inside a cell, so every cell is emitted by the chunk that
// holds the '<' of its opening tag.

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "sheetreader/xml_lexing.hpp"

namespace sheetreader {

enum class CellType : std::uint8_t {
  number,
  shared_string,
  inline_string,
  boolean,
  error,
  formula_string,
};

std::string_view to_string(CellType type) noexcept;

struct SstIndex {
  std::uint32_t value = 0;
  friend bool operator==(const SstIndex&, const SstIndex&) = default;
};

struct ErrorMark {
  std::string_view code;
  friend bool operator==(const ErrorMark&, const ErrorMark&) = default;
};

/// Numbers arrive as double or, when the text is a plain decimal integer, as int64.
using CellPayload = std::variant<double, std::int64_t, SstIndex, bool, std::string_view, ErrorMark>;

/// One parsed cell. Text payloads view scanner storage and are valid only during the callback.
struct CellEvent {
  std::uint32_t row = 0;  // 1-based
  std::uint32_t col = 0;  // 1-based
  CellType type = CellType::number;
  std::uint32_t style = 0;
  CellPayload payload;
};

class ScanSink {
 public:
  virtual ~ScanSink() = default;
  virtual void on_cell(const CellEvent& /*cell*/) {}
  virtual void on_shared_string(std::string_view /*text*/) {}
};

enum class DocumentKind : std::uint8_t { worksheet, shared_strings };

enum class Location : std::uint8_t {
  text,           // between tags, content ignored
  seek,           // looking for the first <row or <c anchor
  tag_open,       // just read '<'
  tag_name,
  attributes,
  attr_name,
  attr_assign,    // between an attribute name and its opening quote
  attr_value,     // relevant attribute value, deserialized in place
  attr_skip,      // irrelevant attribute value
  empty_tag_end,  // read '/' inside a start tag
  close_tag,
  declaration,    // <? ... > or <! ... >
  value,          // inside <v>
  content,        // inside a collected <t>
  entity,
};

enum class Element : std::int8_t {
  none = -1,
  sheet_data,
  dimension,
  row,
  c,
  v,
  is,
  t,
  f,
  r,
  rph,
  si,
  sst,
};

inline constexpr std::array<std::string_view, 12> kElementNames = {
    "sheetData", "dimension", "row", "c", "v", "is", "t", "f", "r", "rPh", "si", "sst"};
inline constexpr std::array<std::string_view, 3> kCellAttributeNames = {"r", "t", "s"};
inline constexpr std::array<std::string_view, 7> kCellTypeNames = {"n", "s",         "b", "str",
                                                                    "inlineStr", "e", "d"};

using ElementMatcher = NameMatcher<kElementNames.size()>;
using AttributeMatcher = NameMatcher<kCellAttributeNames.size()>;
using CellTypeMatcher = NameMatcher<kCellTypeNames.size()>;

/// Row/column reached before a chunk's first anchor; only needed when cells lack `r`.
struct ScanPosition {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  friend bool operator==(const ScanPosition&, const ScanPosition&) = default;
};

struct ParseState {
  Location location = Location::text;
  Location after_entity = Location::content;
  bool seeking = false;
  bool closing = false;
  bool skip_attributes = true;
  Element element = Element::none;
  ElementMatcher names{kElementNames};
  AttributeMatcher attribute_names{kCellAttributeNames};
  int attribute = -1;
  char quote = '"';

  bool in_sheet_data = false;
  bool sheet_closed = false;
  bool in_row = false;
  bool in_cell = false;
  bool in_value = false;
  bool in_is = false;
  bool in_t = false;
  bool in_si = false;
  std::uint32_t phonetic_depth = 0;

  std::uint32_t current_row = 0;
  std::uint32_t current_col = 0;
  bool row_has_ref = false;
  bool cell_has_ref = false;
  bool ref_digits = false;
  CellType cell_type = CellType::number;
  CellTypeMatcher type_names{kCellTypeNames};
  std::uint32_t style = 0;
  bool has_value = false;

  std::uint32_t int_accumulator = 0;
  std::uint32_t col_accumulator = 0;
  std::uint64_t number_accumulator = 0;
  bool number_negative = false;
  bool number_integral = true;
  std::uint8_t number_digits = 0;
  bool boolean_value = false;
  double number_value = 0;

  std::string float_buffer;
  std::string string_buffer;
  std::array<char, 8> pending_entity{};
  std::uint8_t entity_length = 0;
  std::uint64_t tag_start = 0;
};

struct ScanStats {
  std::uint64_t bytes_examined = 0;
  std::uint64_t bytes_copied = 0;
  std::uint64_t cells = 0;
  std::uint64_t strings = 0;
};

struct FeedResult {
  std::size_t consumed = 0;
  bool stopped = false;
};

class Scanner {
 public:
  static constexpr std::uint64_t kNoLimit = std::numeric_limits<std::uint64_t>::max();

  explicit Scanner(DocumentKind kind = DocumentKind::worksheet);

  /// Fresh state at the start of a document located at absolute `offset`.
  void begin_document(std::uint64_t offset = 0);
  /// Fresh state at an arbitrary byte; parsing starts at the first <row or <c tag.
  void begin_at_anchor(std::uint64_t offset, ScanPosition position = {});
  /// Stop at the first '<' at or past `limit` that is outside a cell. Clears a previous stop.
  void set_limit(std::uint64_t limit) noexcept;

  /// Consumes the window (or its prefix up to a stop) and emits completed cells / strings.
  FeedResult feed(std::string_view window, ScanSink& sink);
  /// Declares end of document. Throws Error{malformed_document} inside an open construct.
  void finish() const;

  /// True when no construct is open, i.e. the next byte may belong to someone else.
  bool quiescent() const noexcept;
  bool stopped() const noexcept { return stopped_; }
  std::uint64_t position() const noexcept { return position_; }
  std::uint64_t limit() const noexcept { return limit_; }
  const ParseState& state() const noexcept { return state_; }
  const ScanStats& stats() const noexcept { return stats_; }
  DocumentKind kind() const noexcept { return kind_; }

 private:
  void reset_state();
  void on_name_end();
  void on_start_tag_end(bool empty, ScanSink& sink);
  void on_end_tag(ScanSink& sink);
  void begin_row();
  void begin_cell();
  void begin_attribute_value();
  void attribute_byte(char c);
  void end_attribute_value();
  void value_byte(char c);
  void finish_value();
  void emit_cell(ScanSink& sink);
  std::string& entity_target();
  Location resume_location() const noexcept;
  [[noreturn]] void malformed(const char* what) const;

  DocumentKind kind_;
  ParseState state_;
  std::uint64_t position_ = 0;
  std::uint64_t limit_ = kNoLimit;
  bool stopped_ = false;
  ScanStats stats_;
};

enum class AnchorKind : std::uint8_t { row, cell };

struct ChunkStart {
  std::size_t offset = 0;  // offset of the anchor's '<' within the window
  AnchorKind kind = AnchorKind::row;
};

/// Finds the first position in an arbitrary worksheet window from which parsing is unambiguous.
/// Throws Error{no_anchor_found} when the window holds no complete <row or <c tag name.
ChunkStart resolve_chunk_start(std::string_view window);

}  // namespace sheetreader
