#pragma once

// Small building blocks shared by every SpreadsheetML reader: on-the-fly name recognition and
// in-situ deserialization of the values that matter for locating cells.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "sheetreader/error.hpp"

namespace sheetreader {

inline constexpr std::uint32_t kMaxRowNumber = 0x7FFFFFFE;  // 2^31 - 2
inline constexpr std::uint32_t kMaxColumnNumber = 16384;      // XFD

inline bool is_xml_space(char c) noexcept {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t';
}

/// Recognizes a fixed set of names one character at a time without buffering the name.
/// Each known name owns a counter of matched characters. A mismatch resets the counter to 0 and
/// retires the name until reset(), so a counter equals the name length at a terminator exactly
/// when the bytes seen were that name.
template <std::size_t N>
class NameMatcher {
 public:
  constexpr explicit NameMatcher(const std::array<std::string_view, N>& names) : names_(names) {}

  void reset() noexcept {
    counters_.fill(0);
    retired_ = 0;
  }

  void feed(char c) noexcept {
    for (std::size_t i = 0; i < N; ++i) {
      if (retired_ & (1u << i)) continue;
      const std::uint8_t k = counters_[i];
      if (k < names_[i].size() && names_[i][k] == c) {
        counters_[i] = static_cast<std::uint8_t>(k + 1);
      } else {
        counters_[i] = 0;
        retired_ |= 1u << i;
      }
    }
  }

  /// Index of the name that was read completely, or -1.
  int recognized() const noexcept {
    for (std::size_t i = 0; i < N; ++i) {
      if (!(retired_ & (1u << i)) && counters_[i] == names_[i].size()) return static_cast<int>(i);
    }
    return -1;
  }

  std::uint8_t counter(std::size_t i) const noexcept { return counters_[i]; }
  std::string_view name(std::size_t i) const noexcept { return names_[i]; }
  static constexpr std::size_t size() noexcept { return N; }

 private:
  std::array<std::string_view, N> names_;
  std::array<std::uint8_t, N> counters_{};
  std::uint32_t retired_ = 0;
};

/// acc * 10 + digit. Throws Error{overflow} past the row-number domain.
inline std::uint32_t deserialize_int_stream(std::uint32_t acc, char c) {
  const std::uint64_t next = std::uint64_t{acc} * 10 + static_cast<std::uint32_t>(c - '0');
  if (next > kMaxRowNumber) throw Error(ErrorKind::overflow, "integer exceeds row domain");
  return static_cast<std::uint32_t>(next);
}

/// Spreadsheet column letters: 'A' = 1, 'Z' = 26, 'AA' = 27.
inline std::uint32_t deserialize_col_letters(std::uint32_t acc, char c) {
  const std::uint32_t next = acc * 26 + static_cast<std::uint32_t>(c - 'A' + 1);
  if (next > kMaxColumnNumber) throw Error(ErrorKind::overflow, "column beyond XFD");
  return next;
}

struct CellRef {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  friend bool operator==(const CellRef&, const CellRef&) = default;
};

/// Parses "B2"-style references. Throws Error{malformed_ref}.
CellRef parse_cell_ref(std::string_view text);

/// Renders a 1-based column number as letters.
std::string column_letters(std::uint32_t col);

/// Decodes the body of an entity reference (between '&' and ';') and appends the result.
/// Unknown or invalid references are appended verbatim including '&' and ';'; returns false then.
bool decode_entity(std::string_view body, std::string& out);

/// Correctly rounded text-to-double conversion. Throws Error{malformed_number}.
double deserialize_float_buffered(std::string_view text);

/// Appends the UTF-8 encoding of a code point.
void append_utf8(std::uint32_t code_point, std::string& out);

}  // namespace sheetreader
