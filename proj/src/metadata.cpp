#include "sheetreader/metadata.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include "sheetreader/error.hpp"
#include "sheetreader/xml_lexing.hpp"

namespace sheetreader {

namespace {

constexpr std::size_t kProbeWindow = 32 * 1024;
constexpr std::size_t kProbeLimit = 4 * 1024 * 1024;

std::string_view local_name(std::string_view qualified) {
  const auto colon = qualified.rfind(':');
  return colon == std::string_view::npos ? qualified : qualified.substr(colon + 1);
}

std::string rels_path_for(std::string_view part) {
  const auto slash = part.rfind('/');
  if (slash == std::string_view::npos) return "_rels/" + std::string(part) + ".rels";
  return std::string(part.substr(0, slash)) + "/_rels/" + std::string(part.substr(slash + 1)) +
         ".rels";
}

struct Relationship {
  std::string id;
  std::string type;
  std::string target;
};

std::vector<Relationship> parse_relationships(std::string_view xml, std::string_view source_part) {
  std::vector<Relationship> out;
  TagCursor cursor(xml);
  XmlTag tag;
  while (cursor.next(tag)) {
    if (tag.closing || tag.name != "Relationship") continue;
    auto id = xml_attribute(tag.attributes, "Id");
    auto type = xml_attribute(tag.attributes, "Type");
    auto target = xml_attribute(tag.attributes, "Target");
    const auto mode = xml_attribute(tag.attributes, "TargetMode");
    if (!id || !type || !target) throw Error(ErrorKind::malformed_rels, "incomplete Relationship");
    if (mode && *mode == "External") continue;
    const auto slash = type->rfind('/');
    std::string short_type = slash == std::string::npos ? *type : type->substr(slash + 1);
    out.push_back({std::move(*id), std::move(short_type), resolve_part_path(source_part, *target)});
  }
  return out;
}

std::string read_part(const Archive& archive, std::string_view name) {
  const ByteBuffer bytes = read_entry_full(archive, name);
  return std::string(bytes.view());
}

// Reads growing prefixes of an entry until `done` accepts one or the entry/limit ends.
template <typename Done>
void read_head(const Archive& archive, std::string_view name, Done done) {
  EntryStream stream = open_entry_stream(archive, name);
  std::string head;
  std::array<char, kProbeWindow> window;
  while (!stream.finished() && head.size() < kProbeLimit) {
    const auto chunk = stream.next(window);
    head.append(window.data(), chunk.bytes_written);
    if (done(std::string_view(head), chunk.finished)) return;
  }
  if (stream.finished() || head.empty()) done(std::string_view(head), true);
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

bool is_date_format(std::uint32_t id) { return (id >= 14 && id <= 22) || (id >= 45 && id <= 47); }

}  // namespace

bool TagCursor::next(XmlTag& tag) {
  truncated_ = false;
  while (true) {
    const auto lt = doc_.find('<', pos_);
    if (lt == std::string_view::npos) {
      pos_ = doc_.size();
      return false;
    }
    if (doc_.compare(lt, 4, "<!--") == 0) {
      const auto end = doc_.find("-->", lt + 4);
      if (end == std::string_view::npos) break;
      pos_ = end + 3;
      continue;
    }
    const char next = lt + 1 < doc_.size() ? doc_[lt + 1] : '\0';
    // Attribute values may contain '>', so the tag end is found outside quotes.
    std::size_t i = lt + 1;
    char quote = 0;
    for (; i < doc_.size(); ++i) {
      const char c = doc_[i];
      if (quote) {
        if (c == quote) quote = 0;
      } else if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == '>') {
        break;
      }
    }
    if (i >= doc_.size()) break;
    pos_ = i + 1;
    if (next == '?' || next == '!') continue;
    std::string_view body = doc_.substr(lt + 1, i - lt - 1);
    tag.closing = !body.empty() && body.front() == '/';
    if (tag.closing) body.remove_prefix(1);
    tag.self_closing = !body.empty() && body.back() == '/';
    if (tag.self_closing) body.remove_suffix(1);
    std::size_t name_end = 0;
    while (name_end < body.size() && !is_xml_space(body[name_end])) ++name_end;
    tag.name = local_name(body.substr(0, name_end));
    tag.attributes = body.substr(name_end);
    return true;
  }
  truncated_ = true;
  pos_ = doc_.size();
  return false;
}

std::optional<std::string> xml_attribute(std::string_view attributes, std::string_view name) {
  std::size_t i = 0;
  while (i < attributes.size()) {
    while (i < attributes.size() && is_xml_space(attributes[i])) ++i;
    const std::size_t name_begin = i;
    while (i < attributes.size() && attributes[i] != '=' && !is_xml_space(attributes[i])) ++i;
    const std::string_view attr = attributes.substr(name_begin, i - name_begin);
    while (i < attributes.size() && (attributes[i] == '=' || is_xml_space(attributes[i]))) ++i;
    if (i >= attributes.size()) break;
    const char quote = attributes[i];
    if (quote != '"' && quote != '\'') break;
    const auto close = attributes.find(quote, i + 1);
    if (close == std::string_view::npos) break;
    const std::string_view raw = attributes.substr(i + 1, close - i - 1);
    i = close + 1;
    if (local_name(attr) != name) continue;
    std::string value;
    value.reserve(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
      if (raw[k] != '&') {
        value.push_back(raw[k]);
        continue;
      }
      const auto semi = raw.find(';', k);
      if (semi == std::string_view::npos) {
        value.append(raw.substr(k));
        break;
      }
      decode_entity(raw.substr(k + 1, semi - k - 1), value);
      k = semi;
    }
    return value;
  }
  return std::nullopt;
}

std::string resolve_part_path(std::string_view source_part, std::string_view target) {
  std::string base;
  if (!target.empty() && target.front() == '/') {
    target.remove_prefix(1);
  } else {
    const auto slash = source_part.rfind('/');
    if (slash != std::string_view::npos) base = std::string(source_part.substr(0, slash));
  }
  std::vector<std::string> parts;
  auto push_segments = [&](std::string_view path) {
    std::size_t start = 0;
    while (start <= path.size()) {
      auto end = path.find_first_of("/\\", start);
      if (end == std::string_view::npos) end = path.size();
      const std::string_view seg = path.substr(start, end - start);
      if (seg == "..") {
        if (!parts.empty()) parts.pop_back();
      } else if (!seg.empty() && seg != ".") {
        parts.emplace_back(seg);
      }
      start = end + 1;
    }
  };
  push_segments(base);
  push_segments(target);
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out.push_back('/');
    out += p;
  }
  return out;
}

RelationshipMap read_root_relationships(const Archive& archive) {
  if (!archive.contains("_rels/.rels")) throw Error(ErrorKind::missing_rels, "_rels/.rels");
  RelationshipMap map;
  for (auto& rel : parse_relationships(read_part(archive, "_rels/.rels"), "")) {
    map.emplace(std::move(rel.type), std::move(rel.target));
  }
  if (!map.contains("officeDocument"))
    throw Error(ErrorKind::malformed_rels, "no officeDocument relationship");
  return map;
}

WorkbookMeta read_workbook(const Archive& archive, std::string_view workbook_path) {
  const std::string rels_path = rels_path_for(workbook_path);
  if (!archive.contains(rels_path)) throw Error(ErrorKind::missing_rels, rels_path);
  if (!archive.contains(workbook_path))
    throw Error(ErrorKind::malformed_workbook, "missing " + std::string(workbook_path));

  WorkbookMeta meta;
  meta.workbook_path = std::string(workbook_path);
  std::map<std::string, std::string> targets;
  for (auto& rel : parse_relationships(read_part(archive, rels_path), workbook_path)) {
    if (rel.type == "sharedStrings" && archive.contains(rel.target)) {
      meta.shared_strings_path = rel.target;
    } else if (rel.type == "styles" && archive.contains(rel.target)) {
      meta.styles_path = rel.target;
    }
    targets.emplace(std::move(rel.id), std::move(rel.target));
  }

  const std::string xml = read_part(archive, workbook_path);
  TagCursor cursor(xml);
  XmlTag tag;
  while (cursor.next(tag)) {
    if (tag.closing || tag.name != "sheet") continue;
    auto name = xml_attribute(tag.attributes, "name");
    auto rid = xml_attribute(tag.attributes, "id");
    if (!name || !rid) throw Error(ErrorKind::malformed_workbook, "sheet without name or r:id");
    const auto it = targets.find(*rid);
    if (it == targets.end() || !archive.contains(it->second))
      throw Error(ErrorKind::malformed_workbook, "unresolvable sheet relationship " + *rid);
    for (const auto& s : meta.sheets) {
      if (s.name == *name) throw Error(ErrorKind::malformed_workbook, "duplicate sheet " + *name);
    }
    meta.sheets.push_back({std::move(*name), std::move(*rid), it->second});
  }
  return meta;
}

WorkbookMeta read_metadata(const Archive& archive) {
  const auto rels = read_root_relationships(archive);
  WorkbookMeta meta = read_workbook(archive, rels.at("officeDocument"));
  if (meta.shared_strings_path)
    meta.shared_strings_unique_count = probe_sst_count(archive, *meta.shared_strings_path);
  return meta;
}

std::optional<SheetDimension> parse_dimension_ref(std::string_view ref) {
  const auto colon = ref.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  try {
    const CellRef last = parse_cell_ref(ref.substr(colon + 1));
    parse_cell_ref(ref.substr(0, colon));
    return SheetDimension{last.row, last.col};
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<SheetDimension> find_dimension(std::string_view head) {
  TagCursor cursor(head);
  XmlTag tag;
  while (cursor.next(tag)) {
    if (tag.name == "sheetData") return std::nullopt;
    if (tag.name == "dimension" && !tag.closing) {
      const auto ref = xml_attribute(tag.attributes, "ref");
      return ref ? parse_dimension_ref(*ref) : std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<SheetDimension> probe_dimension(const Archive& archive, std::string_view sheet_path) {
  std::optional<SheetDimension> result;
  read_head(archive, sheet_path, [&](std::string_view head, bool complete) {
    TagCursor cursor(head);
    XmlTag tag;
    while (cursor.next(tag)) {
      if (tag.name == "sheetData") return true;
      if (tag.name == "dimension" && !tag.closing) {
        const auto ref = xml_attribute(tag.attributes, "ref");
        if (ref) result = parse_dimension_ref(*ref);
        return true;
      }
    }
    return complete;
  });
  return result;
}

std::optional<std::uint64_t> probe_sst_count(const Archive& archive, std::string_view sst_path) {
  std::optional<std::uint64_t> result;
  read_head(archive, sst_path, [&](std::string_view head, bool complete) {
    TagCursor cursor(head);
    XmlTag tag;
    while (cursor.next(tag)) {
      if (tag.name != "sst" || tag.closing) continue;
      auto value = xml_attribute(tag.attributes, "uniqueCount");
      if (!value) value = xml_attribute(tag.attributes, "count");
      if (value) {
        std::uint64_t n = 0;
        const auto [p, ec] = std::from_chars(value->data(), value->data() + value->size(), n);
        if (ec == std::errc{} && p == value->data() + value->size()) result = n;
      }
      return true;
    }
    return complete;
  });
  return result;
}

std::vector<bool> parse_date_styles(std::string_view styles_xml) {
  std::vector<bool> flags;
  TagCursor cursor(styles_xml);
  XmlTag tag;
  bool in_cell_xfs = false;
  while (cursor.next(tag)) {
    if (tag.name == "cellXfs") {
      in_cell_xfs = !tag.closing && !tag.self_closing;
      continue;
    }
    if (!in_cell_xfs || tag.closing || tag.name != "xf") continue;
    const auto id = xml_attribute(tag.attributes, "numFmtId");
    std::uint32_t n = 0;
    if (id) std::from_chars(id->data(), id->data() + id->size(), n);
    flags.push_back(is_date_format(n));
  }
  return flags;
}

std::vector<bool> read_date_styles(const Archive& archive, std::string_view styles_path) {
  return parse_date_styles(read_part(archive, styles_path));
}

const SheetInfo& select_sheet(const WorkbookMeta& meta, std::string_view selector) {
  if (meta.sheets.empty()) throw Error(ErrorKind::no_such_sheet, "workbook has no sheets");
  if (selector.empty()) return meta.sheets.front();
  for (const auto& s : meta.sheets) {
    if (s.name == selector) return s;
  }
  for (const auto& s : meta.sheets) {
    if (iequals(s.name, selector)) return s;
  }
  std::size_t index = 0;
  const auto [p, ec] = std::from_chars(selector.data(), selector.data() + selector.size(), index);
  if (ec == std::errc{} && p == selector.data() + selector.size() && index >= 1 &&
      index <= meta.sheets.size())
    return meta.sheets[index - 1];
  throw Error(ErrorKind::no_such_sheet, std::string(selector));
}

}  // namespace sheetreader
