#include "sheetreader/xml_lexing.hpp"

#include <charconv>
#include <system_error>

namespace sheetreader {

CellRef parse_cell_ref(std::string_view text) {
  CellRef ref;
  std::size_t i = 0;
  try {
    for (; i < text.size() && text[i] >= 'A' && text[i] <= 'Z'; ++i) {
      ref.col = deserialize_col_letters(ref.col, text[i]);
    }
    const std::size_t letters = i;
    for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
      ref.row = deserialize_int_stream(ref.row, text[i]);
    }
    if (letters == 0 || i == letters || i != text.size() || ref.row == 0) {
      throw Error(ErrorKind::malformed_ref, std::string(text));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::overflow) throw;
    throw Error(ErrorKind::malformed_ref, std::string(text));
  }
  return ref;
}

std::string column_letters(std::uint32_t col) {
  std::string out;
  while (col > 0) {
    const std::uint32_t rem = (col - 1) % 26;
    out.insert(out.begin(), static_cast<char>('A' + rem));
    col = (col - 1) / 26;
  }
  return out;
}

void append_utf8(std::uint32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool decode_entity(std::string_view body, std::string& out) {
  if (body == "lt") {
    out.push_back('<');
  } else if (body == "gt") {
    out.push_back('>');
  } else if (body == "amp") {
    out.push_back('&');
  } else if (body == "quot") {
    out.push_back('"');
  } else if (body == "apos") {
    out.push_back('\'');
  } else if (body.size() > 1 && body[0] == '#') {
    const bool hex = body[1] == 'x' || body[1] == 'X';
    const std::string_view digits = body.substr(hex ? 2 : 1);
    std::uint32_t cp = 0;
    const auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
    const bool ok = !digits.empty() && ec == std::errc{} && ptr == digits.data() + digits.size() &&
                    cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
    if (!ok) {
      out.push_back('&');
      out.append(body);
      out.push_back(';');
      return false;
    }
    append_utf8(cp, out);
  } else {
    out.push_back('&');
    out.append(body);
    out.push_back(';');
    return false;
  }
  return true;
}

double deserialize_float_buffered(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_xml_space(text[b])) ++b;
  while (e > b && is_xml_space(text[e - 1])) --e;
  if (b < e && text[b] == '+') ++b;
  // from_chars also accepts inf and nan spellings, which are not numbers in a worksheet.
  const std::size_t lead = b < e && text[b] == '-' ? b + 1 : b;
  if (lead < e && text[lead] != '.' && (text[lead] < '0' || text[lead] > '9')) {
    throw Error(ErrorKind::malformed_number, std::string(text));
  }
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data() + b, text.data() + e, value);
  if (b == e || ec != std::errc{} || ptr != text.data() + e) {
    throw Error(ErrorKind::malformed_number, std::string(text));
  }
  return value;
}

}  // namespace sheetreader
