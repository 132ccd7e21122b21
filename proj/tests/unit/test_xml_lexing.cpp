#include <doctest.h>

#include <cstdlib>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <random>

#include "sheetreader/error.hpp"
#include "sheetreader/xml_lexing.hpp"

using namespace sheetreader;

namespace {

// Odometer over A..Z with an implicit leading digit: Z -> AA, AZ -> BA, ZZ -> AAA.
void increment_letters(std::string& s) {
  for (auto i = s.size(); i-- > 0;) {
    if (s[i] != 'Z') {
      ++s[i];
      return;
    }
    s[i] = 'A';
  }
  s.insert(s.begin(), 'A');
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::io;
}

}  // namespace

TEST_SUITE("xml_lexing") {

TEST_CASE("column letters agree with an odometer enumeration over the whole column range") {
  std::string letters = "A";
  for (std::uint32_t n = 1; n <= kMaxColumnNumber; ++n) {
    REQUIRE(column_letters(n) == letters);
    std::uint32_t acc = 0;
    for (char c : letters) acc = deserialize_col_letters(acc, c);
    REQUIRE(acc == n);
    REQUIRE(parse_cell_ref(letters + "7") == CellRef{7, n});
    increment_letters(letters);
  }
  CHECK(letters == "XFE");
  CHECK(kind_of([] { parse_cell_ref("XFE1"); }) == ErrorKind::overflow);
}

TEST_CASE("cell references") {
  CHECK(parse_cell_ref("B2") == CellRef{2, 2});
  CHECK(parse_cell_ref("CV600000") == CellRef{600000, 100});
  CHECK(parse_cell_ref("A2147483646") == CellRef{2147483646u, 1});
  CHECK(kind_of([] { parse_cell_ref("A2147483647"); }) == ErrorKind::overflow);
  for (const std::string bad : {"", "A", "12", "1A", "A0", "a1", "A1B", "$A$1"}) {
    CAPTURE(bad);
    CHECK(kind_of([&] { parse_cell_ref(bad); }) == ErrorKind::malformed_ref);
  }
}

TEST_CASE("row numbers accumulate digit by digit") {
  std::uint32_t acc = 0;
  for (char c : std::string("600000")) acc = deserialize_int_stream(acc, c);
  CHECK(acc == 600000);
  acc = 0;
  for (char c : std::string("214748364")) acc = deserialize_int_stream(acc, c);
  CHECK(deserialize_int_stream(acc, '6') == kMaxRowNumber);
  CHECK(kind_of([&] { deserialize_int_stream(acc, '7'); }) == ErrorKind::overflow);
}

TEST_CASE("name matcher recognizes exact names only") {
  static constexpr std::array<std::string_view, 3> names{"row", "r", "rPh"};
  NameMatcher<3> m(names);
  auto match = [&](std::string_view s) {
    m.reset();
    for (char c : s) m.feed(c);
    return m.recognized();
  };
  CHECK(match("row") == 0);
  CHECK(match("r") == 1);
  CHECK(match("rPh") == 2);
  CHECK(match("rows") == -1);
  CHECK(match("ro") == -1);
  CHECK(match("rw") == -1);
  CHECK(match("") == -1);
}

TEST_CASE("entities") {
  std::string out;
  for (const char* e : {"amp", "lt", "gt", "quot", "apos", "#65", "#x42", "#x20AC", "#128512"}) {
    CHECK(decode_entity(e, out));
  }
  CHECK(out == "&<>\"'AB\xE2\x82\xAC\xF0\x9F\x98\x80");
  out.clear();
  CHECK_FALSE(decode_entity("nbsp", out));
  CHECK_FALSE(decode_entity("#xZZ", out));
  CHECK_FALSE(decode_entity("#1114112", out));
  CHECK(out == "&nbsp;&#xZZ;&#1114112;");
}

TEST_CASE("utf-8 encoding boundaries") {
  std::string out;
  append_utf8(0x7F, out);
  append_utf8(0x80, out);
  append_utf8(0x7FF, out);
  append_utf8(0x800, out);
  append_utf8(0xFFFF, out);
  append_utf8(0x10000, out);
  append_utf8(0x10FFFF, out);
  CHECK(out == "\x7F\xC2\x80\xDF\xBF\xE0\xA0\x80\xEF\xBF\xBF\xF0\x90\x80\x80\xF4\x8F\xBF\xBF");
}

TEST_CASE("float conversion is bit-equal to strtod on random decimal text") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 20000; ++i) {
    std::string s;
    if (rng() % 3 == 0) s += '-';
    const int int_digits = 1 + static_cast<int>(rng() % 20);
    for (int d = 0; d < int_digits; ++d) s += static_cast<char>('0' + rng() % 10);
    if (rng() % 2) {
      s += '.';
      const int frac = 1 + static_cast<int>(rng() % 20);
      for (int d = 0; d < frac; ++d) s += static_cast<char>('0' + rng() % 10);
    }
    if (rng() % 4 == 0) {
      s += (rng() % 2) ? 'e' : 'E';
      if (rng() % 2) s += '-';
      s += std::to_string(rng() % 320);
    }
    CAPTURE(s);
    errno = 0;
    const double expected = std::strtod(s.c_str(), nullptr);
    if (errno == ERANGE && !std::isnormal(expected) ) {
      // Overflow and underflow: either rejected or converted exactly like strtod.
      try {
        const double got = deserialize_float_buffered(s);
        REQUIRE(std::memcmp(&expected, &got, sizeof got) == 0);
      } catch (const Error& e) {
        REQUIRE(e.kind() == ErrorKind::malformed_number);
      }
      continue;
    }
    const double got = deserialize_float_buffered(s);
    REQUIRE(std::memcmp(&expected, &got, sizeof got) == 0);
  }
  for (const std::string bad : {"", "-", "1.2.3", "abc", "1e", "0x10", "inf", "-nan", "1 2"}) {
    CAPTURE(bad);
    CHECK(kind_of([&] { deserialize_float_buffered(bad); }) == ErrorKind::malformed_number);
  }
}

}
