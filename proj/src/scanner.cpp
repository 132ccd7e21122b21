#include "sheetreader/scanner.hpp"

#include <charconv>
#include <cstring>

#include "sheetreader/error.hpp"

namespace sheetreader {

namespace {

constexpr int kAttrR = 0;
constexpr int kAttrT = 1;
constexpr int kAttrS = 2;

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

// Integers up to 18 digits are exact in int64 and skip the float path entirely.
constexpr std::uint8_t kMaxIntegerDigits = 18;

CellType type_from_name(int index) noexcept {
  switch (index) {
    case 1: return CellType::shared_string;
    case 2: return CellType::boolean;
    case 3: return CellType::formula_string;
    case 4: return CellType::inline_string;
    case 5: return CellType::error;
    case 6: return CellType::formula_string;  // ISO 8601 date text, kept as text
    default: return CellType::number;
  }
}

bool text_typed(CellType t) noexcept {
  return t == CellType::formula_string || t == CellType::error || t == CellType::inline_string;
}

}  // namespace

std::string_view to_string(CellType type) noexcept {
  switch (type) {
    case CellType::number: return "number";
    case CellType::shared_string: return "shared_string";
    case CellType::inline_string: return "inline_string";
    case CellType::boolean: return "boolean";
    case CellType::error: return "error";
    case CellType::formula_string: return "formula_string";
  }
  return "?";
}

Scanner::Scanner(DocumentKind kind) : kind_(kind) {
  // Sized up front so ordinary values never allocate while parsing.
  state_.float_buffer.reserve(64);
  state_.string_buffer.reserve(1024);
  begin_document(0);
}

void Scanner::reset_state() {
  // Keep buffer capacity across resets so a reused scanner does not allocate again.
  std::string floats = std::move(state_.float_buffer);
  std::string strings = std::move(state_.string_buffer);
  state_ = ParseState{};
  floats.clear();
  strings.clear();
  state_.float_buffer = std::move(floats);
  state_.string_buffer = std::move(strings);
  stopped_ = false;
  limit_ = kNoLimit;
}

void Scanner::begin_document(std::uint64_t offset) {
  reset_state();
  position_ = offset;
  state_.location = Location::text;
}

void Scanner::begin_at_anchor(std::uint64_t offset, ScanPosition position) {
  reset_state();
  position_ = offset;
  state_.seeking = true;
  state_.location = Location::seek;
  state_.current_row = position.row;
  state_.current_col = position.col;
}

void Scanner::set_limit(std::uint64_t limit) noexcept {
  limit_ = limit;
  stopped_ = false;
}

bool Scanner::quiescent() const noexcept {
  const auto& s = state_;
  if (s.location != Location::text && s.location != Location::seek) return false;
  if (kind_ == DocumentKind::shared_strings) return !s.in_si;
  return !s.in_cell;
}

void Scanner::finish() const {
  const auto& s = state_;
  if (s.location != Location::text && s.location != Location::seek)
    malformed("document ends inside markup");
  if (s.in_cell) malformed("document ends inside a cell");
  if (s.in_si) malformed("document ends inside a shared string");
}

void Scanner::malformed(const char* what) const {
  throw Error(ErrorKind::malformed_document,
              std::string(what) + " near offset " + std::to_string(position_));
}

Location Scanner::resume_location() const noexcept {
  const auto& s = state_;
  if (s.seeking) return Location::seek;
  if (s.in_value) return Location::value;
  if (s.in_t) return Location::content;
  return Location::text;
}

std::string& Scanner::entity_target() {
  auto& s = state_;
  if (s.in_value && !text_typed(s.cell_type)) return s.float_buffer;
  return s.string_buffer;
}

void Scanner::begin_row() {
  auto& s = state_;
  s.row_has_ref = false;
  s.int_accumulator = 0;
}

void Scanner::begin_cell() {
  auto& s = state_;
  s.cell_has_ref = false;
  s.ref_digits = false;
  s.cell_type = CellType::number;
  s.style = 0;
  s.has_value = false;
  s.int_accumulator = 0;
  s.col_accumulator = 0;
  s.string_buffer.clear();
  s.float_buffer.clear();
}

void Scanner::on_name_end() {
  auto& s = state_;
  s.element = static_cast<Element>(s.names.recognized());
  s.skip_attributes = true;
  if (s.closing) {
    s.location = Location::close_tag;
    return;
  }
  s.location = Location::attributes;
  if (kind_ != DocumentKind::worksheet) return;
  if (s.seeking) {
    if (s.element == Element::row) {
      s.seeking = false;
      s.in_sheet_data = true;
      begin_row();
      s.skip_attributes = false;
    } else if (s.element == Element::c) {
      s.seeking = false;
      s.in_sheet_data = true;
      s.in_row = true;
      if (s.current_row == 0) s.current_row = 1;
      begin_cell();
      s.skip_attributes = false;
    }
    return;
  }
  if (s.element == Element::row && s.in_sheet_data && !s.in_row) {
    begin_row();
    s.skip_attributes = false;
  } else if (s.element == Element::c && s.in_row && !s.in_cell) {
    begin_cell();
    s.skip_attributes = false;
  }
}

void Scanner::begin_attribute_value() {
  auto& s = state_;
  if (s.attribute < 0) return;
  if (s.element == Element::row) {
    if (s.attribute == kAttrR) {
      s.int_accumulator = 0;
    } else {
      s.attribute = -1;
    }
    return;
  }
  switch (s.attribute) {
    case kAttrR:
      s.int_accumulator = 0;
      s.col_accumulator = 0;
      s.ref_digits = false;
      break;
    case kAttrT: s.type_names.reset(); break;
    case kAttrS: s.style = 0; break;
  }
}

void Scanner::attribute_byte(char c) {
  auto& s = state_;
  if (s.element == Element::row) {
    if (!is_digit(c)) throw Error(ErrorKind::malformed_ref, "row number is not decimal");
    s.int_accumulator = deserialize_int_stream(s.int_accumulator, c);
    return;
  }
  switch (s.attribute) {
    case kAttrR:
      if (c >= 'A' && c <= 'Z' && !s.ref_digits) {
        s.col_accumulator = deserialize_col_letters(s.col_accumulator, c);
      } else if (is_digit(c) && s.col_accumulator != 0) {
        s.ref_digits = true;
        s.int_accumulator = deserialize_int_stream(s.int_accumulator, c);
      } else {
        throw Error(ErrorKind::malformed_ref, "bad character in cell reference");
      }
      break;
    case kAttrT: s.type_names.feed(c); break;
    case kAttrS:
      if (!is_digit(c)) malformed("style index is not decimal");
      s.style = deserialize_int_stream(s.style, c);
      break;
  }
}

void Scanner::end_attribute_value() {
  auto& s = state_;
  if (s.element == Element::row) {
    if (s.int_accumulator == 0) throw Error(ErrorKind::malformed_ref, "row number 0");
    s.current_row = s.int_accumulator;
    s.row_has_ref = true;
    return;
  }
  switch (s.attribute) {
    case kAttrR:
      if (!s.ref_digits || s.int_accumulator == 0)
        throw Error(ErrorKind::malformed_ref, "incomplete cell reference");
      s.current_row = s.int_accumulator;
      s.current_col = s.col_accumulator;
      s.cell_has_ref = true;
      s.int_accumulator = 0;
      break;
    case kAttrT: s.cell_type = type_from_name(s.type_names.recognized()); break;
  }
}

void Scanner::on_start_tag_end(bool empty, ScanSink& sink) {
  auto& s = state_;
  if (s.seeking) {
    s.location = Location::seek;
    return;
  }
  if (kind_ == DocumentKind::shared_strings) {
    switch (s.element) {
      case Element::si:
        if (!s.in_si) {
          s.string_buffer.clear();
          if (empty) {
            ++stats_.strings;
            sink.on_shared_string(s.string_buffer);
          } else {
            s.in_si = true;
          }
        }
        break;
      case Element::t:
        if (s.in_si && s.phonetic_depth == 0 && !empty) s.in_t = true;
        break;
      case Element::rph:
        if (s.in_si && !empty) ++s.phonetic_depth;
        break;
      default: break;
    }
    s.location = resume_location();
    return;
  }

  switch (s.element) {
    case Element::sheet_data:
      if (!s.in_sheet_data && !s.sheet_closed) {
        if (empty) {
          s.sheet_closed = true;
        } else {
          s.in_sheet_data = true;
        }
      }
      break;
    case Element::row:
      if (!s.skip_attributes) {
        if (!s.row_has_ref) ++s.current_row;
        s.current_col = 0;
        s.in_row = !empty;
      }
      break;
    case Element::c:
      if (!s.skip_attributes) {
        if (!s.cell_has_ref) {
          if (s.current_row == 0) s.current_row = 1;
          ++s.current_col;
          if (s.current_col > kMaxColumnNumber)
            throw Error(ErrorKind::overflow, "column beyond XFD");
        }
        s.in_cell = !empty;
      }
      break;
    case Element::v:
      if (s.in_cell && !empty) {
        s.in_value = true;
        s.float_buffer.clear();
        s.number_accumulator = 0;
        s.number_negative = false;
        s.number_integral = true;
        s.number_digits = 0;
        s.int_accumulator = 0;
        s.has_value = false;
      }
      break;
    case Element::is:
      if (s.in_cell) {
        s.string_buffer.clear();
        if (empty) {
          s.has_value = true;
        } else {
          s.in_is = true;
        }
      }
      break;
    case Element::t:
      if (s.in_is && s.phonetic_depth == 0 && !empty) s.in_t = true;
      break;
    case Element::rph:
      if (s.in_is && !empty) ++s.phonetic_depth;
      break;
    default: break;
  }
  s.location = resume_location();
}

void Scanner::on_end_tag(ScanSink& sink) {
  auto& s = state_;
  if (s.seeking) {
    s.location = Location::seek;
    return;
  }
  if (kind_ == DocumentKind::shared_strings) {
    switch (s.element) {
      case Element::si:
        if (!s.in_si) malformed("</si> outside a string item");
        s.in_si = false;
        s.phonetic_depth = 0;
        ++stats_.strings;
        sink.on_shared_string(s.string_buffer);
        break;
      case Element::t: s.in_t = false; break;
      case Element::rph:
        if (s.phonetic_depth > 0) --s.phonetic_depth;
        break;
      default: break;
    }
    s.location = resume_location();
    return;
  }

  switch (s.element) {
    case Element::v:
      if (s.in_value) {
        s.in_value = false;
        finish_value();
      } else if (s.in_sheet_data) {
        malformed("</v> while not in a value");
      }
      break;
    case Element::c:
      if (s.in_cell) {
        if (s.has_value) emit_cell(sink);
        s.in_cell = false;
        s.in_is = false;
        s.in_t = false;
        s.phonetic_depth = 0;
      } else if (s.in_sheet_data) {
        malformed("</c> while not in a cell");
      }
      break;
    case Element::row:
      if (s.in_cell) malformed("</row> inside a cell");
      if (s.in_row) {
        s.in_row = false;
      } else if (s.in_sheet_data) {
        malformed("</row> while not in a row");
      }
      break;
    case Element::sheet_data:
      if (s.in_row) malformed("</sheetData> inside a row");
      if (s.in_sheet_data) {
        s.in_sheet_data = false;
        s.sheet_closed = true;
      }
      break;
    case Element::is:
      if (s.in_is) {
        s.in_is = false;
        s.has_value = true;
      }
      break;
    case Element::t: s.in_t = false; break;
    case Element::rph:
      if (s.phonetic_depth > 0) --s.phonetic_depth;
      break;
    default: break;
  }
  s.location = resume_location();
}

void Scanner::value_byte(char c) {
  auto& s = state_;
  switch (s.cell_type) {
    case CellType::number:
      if (is_xml_space(c)) return;
      s.float_buffer.push_back(c);
      ++stats_.bytes_copied;
      if (is_digit(c)) {
        if (s.number_digits < kMaxIntegerDigits) {
          s.number_accumulator = s.number_accumulator * 10 + static_cast<unsigned>(c - '0');
          ++s.number_digits;
        } else {
          s.number_integral = false;
        }
      } else if (c == '-' && s.float_buffer.size() == 1) {
        s.number_negative = true;
      } else {
        s.number_integral = false;
      }
      return;
    case CellType::shared_string:
      if (is_xml_space(c)) return;
      if (!is_digit(c)) throw Error(ErrorKind::malformed_number, "shared string index");
      s.int_accumulator = deserialize_int_stream(s.int_accumulator, c);
      s.has_value = true;
      return;
    case CellType::boolean:
      if (is_xml_space(c)) return;
      if (c != '0' && c != '1') throw Error(ErrorKind::malformed_number, "boolean value");
      s.boolean_value = c == '1';
      s.has_value = true;
      return;
    default:
      s.string_buffer.push_back(c);
      ++stats_.bytes_copied;
      return;
  }
}

void Scanner::finish_value() {
  auto& s = state_;
  switch (s.cell_type) {
    case CellType::number:
      if (s.float_buffer.empty()) return;
      if (s.number_negative && s.number_accumulator == 0) s.number_integral = false;  // "-0"
      if (s.number_integral && s.number_digits > 0) {
        s.has_value = true;
        s.number_value = 0;
      } else {
        s.number_value = deserialize_float_buffered(s.float_buffer);
        s.number_integral = false;
        s.has_value = true;
      }
      return;
    case CellType::shared_string:
    case CellType::boolean: return;
    default: s.has_value = true; return;
  }
}

void Scanner::emit_cell(ScanSink& sink) {
  auto& s = state_;
  CellEvent ev;
  ev.row = s.current_row;
  ev.col = s.current_col;
  ev.type = s.cell_type;
  ev.style = s.style;
  switch (s.cell_type) {
    case CellType::number:
      if (s.number_integral) {
        const auto magnitude = static_cast<std::int64_t>(s.number_accumulator);
        ev.payload = s.number_negative ? -magnitude : magnitude;
      } else {
        ev.payload = s.number_value;
      }
      break;
    case CellType::shared_string: ev.payload = SstIndex{s.int_accumulator}; break;
    case CellType::boolean: ev.payload = s.boolean_value; break;
    case CellType::error: ev.payload = ErrorMark{s.string_buffer}; break;
    default: ev.payload = std::string_view(s.string_buffer); break;
  }
  ++stats_.cells;
  sink.on_cell(ev);
}

FeedResult Scanner::feed(std::string_view window, ScanSink& sink) {
  const char* const begin = window.data();
  const char* const end = begin + window.size();
  const char* p = begin;
  const std::uint64_t base = position_;
  auto& s = state_;
  stopped_ = false;
  auto absolute = [&](const char* q) { return base + static_cast<std::uint64_t>(q - begin); };

  while (p < end) {
    switch (s.location) {
      case Location::seek:
      case Location::text: {
        const char* lt = static_cast<const char*>(std::memchr(p, '<', end - p));
        if (!lt) {
          p = end;
          break;
        }
        const bool owned = s.in_cell || (kind_ == DocumentKind::shared_strings && s.in_si);
        if (!owned && absolute(lt) >= limit_) {
          p = lt;
          stopped_ = true;
          goto done;
        }
        s.tag_start = absolute(lt);
        p = lt + 1;
        s.location = Location::tag_open;
        break;
      }
      case Location::tag_open: {
        const char c = *p;
        s.names.reset();
        if (c == '/') {
          s.closing = true;
          ++p;
          s.location = Location::tag_name;
        } else if (c == '?' || c == '!') {
          ++p;
          s.location = Location::declaration;
        } else {
          s.closing = false;
          s.location = Location::tag_name;
        }
        break;
      }
      case Location::tag_name: {
        while (p < end) {
          const char c = *p;
          if (is_xml_space(c) || c == '>' || c == '/') break;
          if (c == ':') {
            s.names.reset();
          } else {
            s.names.feed(c);
          }
          ++p;
        }
        if (p < end) on_name_end();
        break;
      }
      case Location::attributes: {
        const char c = *p;
        if (is_xml_space(c)) {
          ++p;
        } else if (c == '>') {
          ++p;
          on_start_tag_end(false, sink);
        } else if (c == '/') {
          ++p;
          s.location = Location::empty_tag_end;
        } else {
          s.attribute_names.reset();
          s.location = Location::attr_name;
        }
        break;
      }
      case Location::attr_name: {
        while (p < end) {
          const char c = *p;
          if (is_xml_space(c) || c == '=') break;
          if (c == '>' || c == '/') malformed("attribute without value");
          if (c == ':') {
            s.attribute_names.reset();
          } else {
            s.attribute_names.feed(c);
          }
          ++p;
        }
        if (p < end) {
          s.attribute = s.skip_attributes ? -1 : s.attribute_names.recognized();
          s.location = Location::attr_assign;
        }
        break;
      }
      case Location::attr_assign: {
        const char c = *p++;
        if (c == '"' || c == '\'') {
          s.quote = c;
          begin_attribute_value();
          s.location = s.attribute >= 0 ? Location::attr_value : Location::attr_skip;
        } else if (c != '=' && !is_xml_space(c)) {
          malformed("unquoted attribute value");
        }
        break;
      }
      case Location::attr_skip: {
        const char* q = static_cast<const char*>(std::memchr(p, s.quote, end - p));
        if (!q) {
          p = end;
          break;
        }
        p = q + 1;
        s.location = Location::attributes;
        break;
      }
      case Location::attr_value: {
        while (p < end && *p != s.quote) attribute_byte(*p++);
        if (p < end) {
          ++p;
          end_attribute_value();
          s.location = Location::attributes;
        }
        break;
      }
      case Location::empty_tag_end: {
        if (*p != '>') malformed("'/' inside a start tag");
        ++p;
        on_start_tag_end(true, sink);
        break;
      }
      case Location::close_tag:
      case Location::declaration: {
        const char* gt = static_cast<const char*>(std::memchr(p, '>', end - p));
        if (!gt) {
          p = end;
          break;
        }
        p = gt + 1;
        if (s.location == Location::close_tag) {
          on_end_tag(sink);
        } else {
          s.location = resume_location();
        }
        break;
      }
      case Location::value: {
        while (p < end) {
          const char c = *p;
          if (c == '<' || c == '&') break;
          value_byte(c);
          ++p;
        }
        if (p == end) break;
        if (*p == '<') {
          s.tag_start = absolute(p);
          s.location = Location::tag_open;
        } else {
          s.entity_length = 0;
          s.after_entity = Location::value;
          s.location = Location::entity;
        }
        ++p;
        break;
      }
      case Location::content: {
        const char* q = p;
        while (q < end && *q != '<' && *q != '&') ++q;
        s.string_buffer.append(p, q);
        stats_.bytes_copied += static_cast<std::uint64_t>(q - p);
        p = q;
        if (p == end) break;
        if (*p == '<') {
          s.tag_start = absolute(p);
          s.location = Location::tag_open;
        } else {
          s.entity_length = 0;
          s.after_entity = Location::content;
          s.location = Location::entity;
        }
        ++p;
        break;
      }
      case Location::entity: {
        while (p < end && *p != ';' && *p != '<' && s.entity_length < s.pending_entity.size())
          s.pending_entity[s.entity_length++] = *p++;
        if (p == end) break;
        std::string& target = entity_target();
        const std::string_view body(s.pending_entity.data(), s.entity_length);
        if (*p == ';') {
          ++p;
          decode_entity(body, target);
        } else {
          // Not a reference after all: keep the bytes and let the owning state see the rest.
          target.push_back('&');
          target.append(body);
        }
        stats_.bytes_copied += s.entity_length + 1u;
        if (&target == &s.float_buffer) s.number_integral = false;
        s.location = s.after_entity;
        break;
      }
    }
  }
done:
  const auto consumed = static_cast<std::size_t>(p - begin);
  position_ = base + consumed;
  stats_.bytes_examined += consumed;
  return FeedResult{consumed, stopped_};
}

ChunkStart resolve_chunk_start(std::string_view window) {
  std::size_t pos = 0;
  while (pos < window.size()) {
    const std::size_t lt = window.find('<', pos);
    if (lt == std::string_view::npos) break;
    std::size_t i = lt + 1;
    ElementMatcher names(kElementNames);
    while (i < window.size()) {
      const char c = window[i];
      if (is_xml_space(c) || c == '>' || c == '/') break;
      if (c == ':') {
        names.reset();
      } else {
        names.feed(c);
      }
      ++i;
    }
    if (i >= window.size()) break;
    if (lt + 1 < window.size() && window[lt + 1] != '/') {
      const auto element = static_cast<Element>(names.recognized());
      if (element == Element::row) return ChunkStart{lt, AnchorKind::row};
      if (element == Element::c) return ChunkStart{lt, AnchorKind::cell};
    }
    pos = lt + 1;
  }
  throw Error(ErrorKind::no_anchor_found, "no <row or <c tag in window");
}

}  // namespace sheetreader
