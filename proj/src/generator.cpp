#include "sheetreader/generator.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <random>
#include <unordered_map>

#include "sheetreader/error.hpp"
#include "sheetreader/xml_lexing.hpp"
#include "sheetreader/zip_writer.hpp"

namespace sheetreader {

namespace {

constexpr std::string_view kMainNs = "http://schemas.openxmlformats.org/spreadsheetml/2006/main";
constexpr std::string_view kRelNs =
    "http://schemas.openxmlformats.org/officeDocument/2006/relationships";
constexpr std::string_view kPkgRelNs = "http://schemas.openxmlformats.org/package/2006/relationships";
constexpr std::string_view kAlnum =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
// Multi-byte entries are whole UTF-8 sequences.
const std::vector<std::string_view> kRich = {"<", ">", "&", "\"", "'", ",", "\n", " ",
                                             "\xC3\xA9", "\xE2\x82\xAC", "\xF0\x9F\x98\x80"};
constexpr std::uint32_t kDateStyle = 1;
constexpr std::size_t kFlushBytes = 1 << 20;

struct Cell {
  bool blank = true;
  GenKind kind = GenKind::floating;
  double number = 0;
  std::int64_t integer = 0;
  bool boolean = false;
  std::int64_t days = 0;  // date serial, whole days
  std::int32_t seconds = 0;
  std::uint32_t text = 0;  // index into the column's pool
};

class ValueStream {
 public:
  ValueStream(const GenSpec& spec, std::uint64_t seed)
      : spec_(spec), rng_(seed), pools_(spec.columns.size()) {}

  void next_row(std::vector<Cell>& row) {
    row.resize(spec_.columns.size());
    for (std::size_t c = 0; c < spec_.columns.size(); ++c) row[c] = next_cell(c);
  }

  const std::string& text(std::size_t col, std::uint32_t i) const { return pools_[col][i]; }

 private:
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::string fresh_string() {
    const std::size_t len = 8 + rng_() % 17;
    std::string s;
    for (std::size_t i = 0; i < len; ++i) {
      if (spec_.rich_text && rng_() % 4 == 0) {
        s += kRich[rng_() % kRich.size()];
      } else {
        s.push_back(kAlnum[rng_() % kAlnum.size()]);
      }
    }
    return s;
  }

  Cell next_cell(std::size_t c) {
    const GenColumn& col = spec_.columns[c];
    Cell cell;
    cell.kind = col.kind;
    cell.blank = unit() < col.blank_fraction;
    if (cell.blank) return cell;
    switch (col.kind) {
      case GenKind::floating: {
        double v;
        if (rng_() % 50 == 0) {
          v = unit() * std::pow(10.0, static_cast<int>(rng_() % 20) - 5);
        } else {
          const double scale = std::pow(10.0, static_cast<int>(rng_() % 7));
          v = std::round((unit() * 2e6 - 1e6) * scale) / scale;
        }
        cell.number = v == 0 ? 0.0 : v;
        break;
      }
      case GenKind::integer:
        cell.integer = static_cast<std::int64_t>(rng_() % 2000000001ull) - 1000000000;
        break;
      case GenKind::boolean: cell.boolean = rng_() & 1; break;
      case GenKind::date:
        cell.days = 367 + static_cast<std::int64_t>(rng_() % 60000);
        cell.seconds = rng_() % 4 == 0 ? static_cast<std::int32_t>(rng_() % 86400) : 0;
        break;
      case GenKind::text: {
        auto& pool = pools_[c];
        if (pool.empty() || unit() < col.unique_fraction) {
          pool.push_back(fresh_string());
          cell.text = static_cast<std::uint32_t>(pool.size() - 1);
        } else {
          cell.text = static_cast<std::uint32_t>(rng_() % pool.size());
        }
        break;
      }
    }
    return cell;
  }

  const GenSpec& spec_;
  std::mt19937_64 rng_;
  std::vector<std::vector<std::string>> pools_;
};

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

bool looks_integral(std::string_view text) {
  if (text.find_first_of(".eE") != std::string_view::npos) return false;
  const std::size_t digits = text.size() - (text.front() == '-' ? 1 : 0);
  return digits <= 18;
}

std::string iso_date(std::int64_t days, std::int32_t seconds) {
  using namespace std::chrono;
  const year_month_day ymd(sys_days(year(1899) / December / 30) + std::chrono::days(days));
  char buf[40];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                        static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  if (seconds) {
    n += std::snprintf(buf + n, sizeof buf - n, "T%02d:%02d:%02d", seconds / 3600,
                       seconds / 60 % 60, seconds % 60);
  }
  return std::string(buf, static_cast<std::size_t>(n));
}

double date_serial(const Cell& cell) {
  return static_cast<double>(cell.days) + cell.seconds / 86400.0;
}

void xml_escape(std::string& out, std::string_view s) {
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out.push_back(c);
    }
  }
}

void csv_field(std::string& out, std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
    out += s;
    return;
  }
  out.push_back('"');
  for (const char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

void text_element(std::string& out, std::string_view s) {
  const bool edge_space = !s.empty() && (is_xml_space(s.front()) || is_xml_space(s.back()));
  out += edge_space ? "<t xml:space=\"preserve\">" : "<t>";
  xml_escape(out, s);
  out += "</t>";
}

struct SheetTotals {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
};

SheetTotals scan_extent(const GenSpec& spec, std::uint64_t seed) {
  SheetTotals t;
  bool any_blank = false;
  for (const auto& c : spec.columns) any_blank = any_blank || c.blank_fraction > 0;
  if (!any_blank) {
    if (spec.rows > 0 && !spec.columns.empty()) {
      t.rows = static_cast<std::uint32_t>(spec.rows);
      t.cols = static_cast<std::uint32_t>(spec.columns.size());
    }
    return t;
  }
  ValueStream values(spec, seed);
  std::vector<Cell> row;
  for (std::uint64_t r = 1; r <= spec.rows; ++r) {
    values.next_row(row);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c].blank) continue;
      t.rows = static_cast<std::uint32_t>(r);
      t.cols = std::max(t.cols, static_cast<std::uint32_t>(c + 1));
    }
  }
  return t;
}

class SstBuilder {
 public:
  std::uint32_t index(const std::string& s) {
    ++count_;
    const auto [it, inserted] = map_.emplace(s, static_cast<std::uint32_t>(order_.size()));
    if (inserted) order_.push_back(&it->first);
    return it->second;
  }
  std::uint64_t unique() const { return order_.size(); }
  std::uint64_t count() const { return count_; }
  void write(ZipWriter& zip) const {
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n";
    out += "<sst xmlns=\"" + std::string(kMainNs) + "\" count=\"" + std::to_string(count_) +
           "\" uniqueCount=\"" + std::to_string(order_.size()) + "\">";
    zip.begin_entry("xl/sharedStrings.xml");
    for (const std::string* s : order_) {
      out += "<si>";
      text_element(out, *s);
      out += "</si>";
      if (out.size() > kFlushBytes) {
        zip.write(out);
        out.clear();
      }
    }
    out += "</sst>";
    zip.write(out);
    zip.end_entry();
  }

 private:
  std::unordered_map<std::string, std::uint32_t> map_;
  std::vector<const std::string*> order_;
  std::uint64_t count_ = 0;
};

struct SheetOutput {
  std::string* csv = nullptr;
  std::string* xml = nullptr;
  GenResult* truth = nullptr;
};

void write_sheet(const GenSpec& spec, std::uint64_t seed, ZipWriter& zip, std::string_view part,
                 SstBuilder& sst, SheetOutput out) {
  const SheetTotals extent = scan_extent(spec, seed);
  ValueStream values(spec, seed);
  const bool empty = extent.rows == 0;
  const std::size_t n_cols = extent.cols;

  std::vector<bool> non_integral(n_cols, false);
  std::vector<bool> seen(n_cols, false);
  if (out.truth) {
    out.truth->extent = {extent.rows, extent.cols};
    out.truth->null_counts.assign(n_cols, 0);
    out.truth->numeric_sums.assign(n_cols, 0.0);
  }

  std::string xml;
  xml.reserve(kFlushBytes + 4096);
  xml += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n";
  xml += "<worksheet xmlns=\"" + std::string(kMainNs) + "\" xmlns:r=\"" + std::string(kRelNs) +
         "\">";
  if (spec.emit_dimension) {
    xml += "<dimension ref=\"A1";
    if (!empty) xml += ":" + column_letters(extent.cols) + std::to_string(extent.rows);
    xml += "\"/>";
  }
  xml += "<sheetViews><sheetView workbookViewId=\"0\"/></sheetViews>";
  xml += "<sheetFormatPr defaultRowHeight=\"15\"/>";
  zip.begin_entry(part);
  auto flush = [&](bool force) {
    if (!force && xml.size() < kFlushBytes) return;
    zip.write(xml);
    if (out.xml) out.xml->append(xml);
    xml.clear();
  };

  if (empty) {
    xml += "<sheetData/>";
  } else {
    xml += "<sheetData>";
    const std::string spans = "1:" + std::to_string(extent.cols);
    std::vector<Cell> row;
    std::string field;
    for (std::uint32_t r = 1; r <= extent.rows; ++r) {
      values.next_row(row);
      std::size_t last = 0;  // last non-blank column, 1-based
      for (std::size_t c = 0; c < n_cols; ++c) {
        if (!row[c].blank) last = c + 1;
      }
      if (last == 0 && spec.emit_r_attributes) {
        // Fully blank rows are left out when positions are explicit.
      } else if (last == 0) {
        xml += "<row/>";
      } else {
        if (spec.emit_r_attributes) {
          xml += "<row r=\"" + std::to_string(r) + "\" spans=\"" + spans + "\">";
        } else {
          xml += "<row spans=\"" + spans + "\">";
        }
        for (std::size_t c = 0; c < last; ++c) {
          const Cell& cell = row[c];
          std::string ref;
          if (spec.emit_r_attributes) {
            ref = " r=\"" + column_letters(static_cast<std::uint32_t>(c + 1)) +
                  std::to_string(r) + "\"";
          }
          if (cell.blank) {
            if (!spec.emit_r_attributes) {
              xml += "<c/>";
            } else if ((r + c) % 4 == 0) {
              xml += "<c" + ref + " s=\"0\"/>";
            }
            continue;
          }
          switch (cell.kind) {
            case GenKind::floating:
              xml += "<c" + ref + "><v>" + format_double(cell.number) + "</v></c>";
              break;
            case GenKind::integer:
              xml += "<c" + ref + "><v>" + std::to_string(cell.integer) + "</v></c>";
              break;
            case GenKind::boolean:
              xml += "<c" + ref + " t=\"b\"><v>" + (cell.boolean ? "1" : "0") + "</v></c>";
              break;
            case GenKind::date:
              xml += "<c" + ref + " s=\"" + std::to_string(kDateStyle) + "\"><v>" +
                     format_double(date_serial(cell)) + "</v></c>";
              break;
            case GenKind::text: {
              const std::string& s = values.text(c, cell.text);
              if (spec.strings == StringStorage::shared) {
                xml += "<c" + ref + " t=\"s\"><v>" + std::to_string(sst.index(s)) + "</v></c>";
              } else {
                xml += "<c" + ref + " t=\"inlineStr\"><is>";
                text_element(xml, s);
                xml += "</is></c>";
              }
              break;
            }
          }
        }
        xml += "</row>";
      }

      if (out.truth) {
        GenResult& t = *out.truth;
        for (std::size_t c = 0; c < n_cols; ++c) {
          const Cell& cell = row[c];
          if (out.csv && c) out.csv->push_back(',');
          if (cell.blank) {
            ++t.null_counts[c];
            continue;
          }
          seen[c] = true;
          ++t.cells;
          field.clear();
          switch (cell.kind) {
            case GenKind::floating:
              field = format_double(cell.number);
              if (!looks_integral(field)) non_integral[c] = true;
              t.numeric_sums[c] += cell.number;
              break;
            case GenKind::integer:
              field = std::to_string(cell.integer);
              t.numeric_sums[c] += static_cast<double>(cell.integer);
              break;
            case GenKind::boolean: field = cell.boolean ? "TRUE" : "FALSE"; break;
            case GenKind::date: field = iso_date(cell.days, cell.seconds); break;
            case GenKind::text:
              ++t.string_cells;
              if (out.csv) csv_field(*out.csv, values.text(c, cell.text));
              break;
          }
          if (out.csv && cell.kind != GenKind::text) out.csv->append(field);
        }
        if (out.csv) out.csv->push_back('\n');
      }
      flush(false);
    }
    xml += "</sheetData>";
  }
  xml += "<pageMargins left=\"0.7\" right=\"0.7\" top=\"0.75\" bottom=\"0.75\" header=\"0.3\" "
         "footer=\"0.3\"/></worksheet>";
  flush(true);
  zip.end_entry();

  if (out.truth) {
    auto& types = out.truth->column_types;
    types.assign(n_cols, ColumnType::empty);
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (!seen[c]) continue;
      switch (spec.columns[c].kind) {
        case GenKind::floating:
          types[c] = non_integral[c] ? ColumnType::real : ColumnType::integer;
          break;
        case GenKind::integer: types[c] = ColumnType::integer; break;
        case GenKind::boolean: types[c] = ColumnType::boolean; break;
        case GenKind::date: types[c] = ColumnType::date; break;
        case GenKind::text: types[c] = ColumnType::string; break;
      }
    }
  }
}

GenKind kind_from_string(std::string_view s) {
  if (s == "float" || s == "floating" || s == "double") return GenKind::floating;
  if (s == "integer" || s == "int") return GenKind::integer;
  if (s == "text" || s == "string") return GenKind::text;
  if (s == "boolean" || s == "bool") return GenKind::boolean;
  if (s == "date") return GenKind::date;
  throw std::invalid_argument("unknown column kind: " + std::string(s));
}

}  // namespace

std::string_view to_string(GenKind kind) noexcept {
  switch (kind) {
    case GenKind::floating: return "float";
    case GenKind::integer: return "integer";
    case GenKind::text: return "text";
    case GenKind::boolean: return "boolean";
    case GenKind::date: return "date";
  }
  return "?";
}

GenSpec GenSpec::mixed(std::uint64_t rows, std::uint64_t seed) {
  GenSpec s;
  s.rows = rows;
  s.seed = seed;
  for (int i = 0; i < 40; ++i) s.columns.push_back({GenKind::floating, 1.0, 0.0});
  for (int i = 0; i < 30; ++i) s.columns.push_back({GenKind::integer, 1.0, 0.0});
  for (int i = 0; i < 20; ++i) s.columns.push_back({GenKind::text, 0.25, 0.0});
  for (int i = 0; i < 10; ++i) s.columns.push_back({GenKind::text, 0.75, 0.0});
  return s;
}

GenSpec GenSpec::numeric(std::uint64_t rows, std::size_t cols, std::uint64_t seed) {
  GenSpec s;
  s.rows = rows;
  s.seed = seed;
  s.columns.assign(cols, GenColumn{GenKind::floating, 1.0, 0.0});
  return s;
}

GenSpec GenSpec::text(std::uint64_t rows, std::size_t cols, std::uint64_t seed) {
  GenSpec s;
  s.rows = rows;
  s.seed = seed;
  s.columns.assign(cols, GenColumn{GenKind::text, 0.5, 0.0});
  return s;
}

GenSpec GenSpec::from_json(std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text);
  GenSpec s;
  const auto rows = j.value("rows", std::uint64_t{0});
  const auto seed = j.value("seed", std::uint64_t{1});
  const std::string preset = j.value("preset", std::string{});
  if (preset == "mixed") {
    s = mixed(rows, seed);
  } else if (preset == "numeric") {
    s = numeric(rows, j.value("cols", std::size_t{100}), seed);
  } else if (preset == "text") {
    s = text(rows, j.value("cols", std::size_t{10}), seed);
  } else if (!preset.empty()) {
    throw std::invalid_argument("unknown preset: " + preset);
  }
  s.rows = rows;
  s.seed = seed;
  if (j.contains("columns")) {
    s.columns.clear();
    for (const auto& c : j.at("columns")) {
      GenColumn col;
      col.kind = kind_from_string(c.at("kind").get<std::string>());
      col.unique_fraction = c.value("unique", 1.0);
      col.blank_fraction = c.value("blank", 0.0);
      const auto repeat = c.value("repeat", std::size_t{1});
      for (std::size_t i = 0; i < repeat; ++i) s.columns.push_back(col);
    }
  }
  if (j.contains("blank")) {
    for (auto& c : s.columns) c.blank_fraction = j.at("blank").get<double>();
  }
  s.emit_r_attributes = j.value("r_attributes", true);
  s.emit_dimension = j.value("dimension", true);
  s.strings = j.value("strings", std::string("shared")) == "inline" ? StringStorage::inline_strings
                                                                     : StringStorage::shared;
  s.sheets = j.value("sheets", 1u);
  s.rich_text = j.value("rich_text", false);
  s.force_zip64 = j.value("zip64", false);
  s.compression_level = j.value("level", 6);
  for (const auto& c : s.columns) {
    if (c.blank_fraction < 0 || c.blank_fraction > 1 || c.unique_fraction < 0 ||
        c.unique_fraction > 1)
      throw std::invalid_argument("fractions must lie in [0, 1]");
  }
  return s;
}

std::string GenSpec::to_json() const {
  nlohmann::json j;
  j["rows"] = rows;
  j["seed"] = seed;
  j["r_attributes"] = emit_r_attributes;
  j["dimension"] = emit_dimension;
  j["strings"] = strings == StringStorage::shared ? "shared" : "inline";
  j["sheets"] = sheets;
  j["rich_text"] = rich_text;
  j["zip64"] = force_zip64;
  j["level"] = compression_level;
  j["columns"] = nlohmann::json::array();
  for (const auto& c : columns) {
    j["columns"].push_back(
        {{"kind", to_string(c.kind)}, {"unique", c.unique_fraction}, {"blank", c.blank_fraction}});
  }
  return j.dump();
}

GenResult generate_xlsx(const GenSpec& spec, const std::filesystem::path& out,
                        const GenOptions& options) {
  if (spec.columns.size() > kMaxColumnNumber) throw std::invalid_argument("too many columns");
  if (spec.rows > kMaxRowNumber) throw std::invalid_argument("too many rows");
  const unsigned sheets = std::max(1u, spec.sheets);
  bool any_text = false;
  for (const auto& c : spec.columns) any_text = any_text || c.kind == GenKind::text;
  const bool with_sst = any_text && spec.strings == StringStorage::shared;

  ZipWriter zip(out, ZipWriter::Options{spec.compression_level, spec.force_zip64});

  std::string types =
      "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n"
      "<Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\">"
      "<Default Extension=\"rels\" "
      "ContentType=\"application/vnd.openxmlformats-package.relationships+xml\"/>"
      "<Default Extension=\"xml\" ContentType=\"application/xml\"/>"
      "<Override PartName=\"/xl/workbook.xml\" "
      "ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml\"/>"
      "<Override PartName=\"/xl/styles.xml\" "
      "ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.styles+xml\"/>";
  for (unsigned i = 1; i <= sheets; ++i) {
    types += "<Override PartName=\"/xl/worksheets/sheet" + std::to_string(i) +
             ".xml\" ContentType=\"application/"
             "vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml\"/>";
  }
  if (with_sst) {
    types += "<Override PartName=\"/xl/sharedStrings.xml\" ContentType=\"application/"
             "vnd.openxmlformats-officedocument.spreadsheetml.sharedStrings+xml\"/>";
  }
  types += "</Types>";
  zip.add("[Content_Types].xml", types);

  zip.add("_rels/.rels",
          "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n<Relationships xmlns=\"" +
              std::string(kPkgRelNs) +
              "\"><Relationship Id=\"rId1\" "
              "Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/"
              "officeDocument\" Target=\"xl/workbook.xml\"/></Relationships>");

  std::string workbook = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n<workbook xmlns=\"" +
                         std::string(kMainNs) + "\" xmlns:r=\"" + std::string(kRelNs) +
                         "\"><sheets>";
  std::string rels = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n<Relationships xmlns=\"" +
                     std::string(kPkgRelNs) + "\">";
  for (unsigned i = 1; i <= sheets; ++i) {
    const std::string n = std::to_string(i);
    workbook += "<sheet name=\"Sheet" + n + "\" sheetId=\"" + n + "\" r:id=\"rId" + n + "\"/>";
    rels += "<Relationship Id=\"rId" + n + "\" Type=\"" + std::string(kRelNs) +
            "/worksheet\" Target=\"worksheets/sheet" + n + ".xml\"/>";
  }
  workbook += "</sheets></workbook>";
  rels += "<Relationship Id=\"rId" + std::to_string(sheets + 1) + "\" Type=\"" +
          std::string(kRelNs) + "/styles\" Target=\"styles.xml\"/>";
  if (with_sst) {
    rels += "<Relationship Id=\"rId" + std::to_string(sheets + 2) + "\" Type=\"" +
            std::string(kRelNs) + "/sharedStrings\" Target=\"sharedStrings.xml\"/>";
  }
  rels += "</Relationships>";
  zip.add("xl/workbook.xml", workbook);
  zip.add("xl/_rels/workbook.xml.rels", rels);
  zip.add("xl/styles.xml",
          "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n<styleSheet xmlns=\"" +
              std::string(kMainNs) +
              "\"><fonts count=\"1\"><font><sz val=\"11\"/><name val=\"Calibri\"/></font></fonts>"
              "<fills count=\"2\"><fill><patternFill patternType=\"none\"/></fill><fill>"
              "<patternFill patternType=\"gray125\"/></fill></fills><borders count=\"1\"><border>"
              "<left/><right/><top/><bottom/><diagonal/></border></borders>"
              "<cellStyleXfs count=\"1\"><xf numFmtId=\"0\" fontId=\"0\" fillId=\"0\" "
              "borderId=\"0\"/></cellStyleXfs><cellXfs count=\"2\"><xf numFmtId=\"0\" "
              "fontId=\"0\" fillId=\"0\" borderId=\"0\" xfId=\"0\"/><xf numFmtId=\"14\" "
              "fontId=\"0\" fillId=\"0\" borderId=\"0\" xfId=\"0\" applyNumberFormat=\"1\"/>"
              "</cellXfs><cellStyles count=\"1\"><cellStyle name=\"Normal\" xfId=\"0\" "
              "builtinId=\"0\"/></cellStyles></styleSheet>");

  GenResult result;
  SstBuilder sst;
  for (unsigned i = 1; i <= sheets; ++i) {
    SheetOutput out_refs;
    if (i == 1) {
      out_refs.truth = &result;
      if (options.keep_csv) out_refs.csv = &result.csv;
      if (options.keep_sheet_xml) out_refs.xml = &result.sheet_xml;
    }
    write_sheet(spec, spec.seed + (i - 1), zip, "xl/worksheets/sheet" + std::to_string(i) + ".xml",
                sst, out_refs);
  }
  if (with_sst) sst.write(zip);
  result.unique_strings = spec.strings == StringStorage::shared ? sst.unique() : 0;
  zip.close();
  return result;
}

}  // namespace sheetreader
