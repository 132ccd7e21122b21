#include <doctest.h>

#include "helpers.hpp"
#include "sheetreader/archive.hpp"
#include "sheetreader/error.hpp"
#include "sheetreader/metadata.hpp"
#include "sheetreader/zip_writer.hpp"

using namespace sheetreader;

namespace {

const std::string kRootRels =
    "<?xml version=\"1.0\"?><pr:Relationships "
    "xmlns:pr=\"http://schemas.openxmlformats.org/package/2006/relationships\">"
    "<pr:Relationship Id=\"rId3\" Type=\"http://schemas.openxmlformats.org/package/2006/"
    "relationships/metadata/core-properties\" Target=\"docProps/core.xml\"/>"
    "<pr:Relationship Id=\"rId1\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/"
    "relationships/officeDocument\" Target=\"/book/main.xml\"/></pr:Relationships>";

const std::string kWorkbook =
    "<x:workbook xmlns:x=\"http://schemas.openxmlformats.org/spreadsheetml/2006/main\" "
    "xmlns:r=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships\">"
    "<x:sheets><x:sheet name=\"Data &amp; More\" sheetId=\"4\" r:id=\"rId7\"/>"
    "<x:sheet name=\"Second\" sheetId=\"1\" r:id=\"rId2\"/></x:sheets></x:workbook>";

const std::string kWorkbookRels =
    "<Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">"
    "<Relationship Id=\"rId2\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/"
    "relationships/worksheet\" Target=\"../sheets/two.xml\"/>"
    "<Relationship Id=\"rId7\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/"
    "relationships/worksheet\" Target=\"sheets/one.xml\"/>"
    "<Relationship Id=\"rId9\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/"
    "relationships/sharedStrings\" Target=\"strings.xml\"/>"
    "<Relationship Id=\"rId10\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/"
    "relationships/styles\" Target=\"/book/styles.xml\"/></Relationships>";

Archive package(const std::string& name, const std::vector<std::pair<std::string, std::string>>& parts) {
  const auto path = testing::scratch(name);
  ZipWriter zip(path);
  for (const auto& [n, d] : parts) zip.add(n, d);
  zip.close();
  return Archive::open(path);
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

TEST_SUITE("metadata") {

TEST_CASE("relationship targets resolve against their source part") {
  CHECK(resolve_part_path("xl/workbook.xml", "worksheets/sheet1.xml") == "xl/worksheets/sheet1.xml");
  CHECK(resolve_part_path("xl/workbook.xml", "/xl/sharedStrings.xml") == "xl/sharedStrings.xml");
  CHECK(resolve_part_path("xl/workbook.xml", "../other/a.xml") == "other/a.xml");
  CHECK(resolve_part_path("", "xl/workbook.xml") == "xl/workbook.xml");
  CHECK(resolve_part_path("a/b/c.xml", "./d/../e.xml") == "a/b/e.xml");
}

TEST_CASE("prefixed, reordered and absolute relationships") {
  const Archive a = package("meta1.xlsx", {{"_rels/.rels", kRootRels},
                                           {"book/main.xml", kWorkbook},
                                           {"book/_rels/main.xml.rels", kWorkbookRels},
                                           {"book/sheets/one.xml", "<worksheet/>"},
                                           {"sheets/two.xml", "<worksheet/>"},
                                           {"book/strings.xml", "<sst uniqueCount=\"12\" count=\"40\"></sst>"},
                                           {"book/styles.xml", "<styleSheet/>"}});
  const WorkbookMeta meta = read_metadata(a);
  CHECK(meta.workbook_path == "book/main.xml");
  REQUIRE(meta.sheets.size() == 2);
  CHECK(meta.sheets[0].name == "Data & More");
  CHECK(meta.sheets[0].part_path == "book/sheets/one.xml");
  CHECK(meta.sheets[1].part_path == "sheets/two.xml");
  CHECK(meta.shared_strings_path == std::optional<std::string>("book/strings.xml"));
  CHECK(meta.shared_strings_unique_count == std::optional<std::uint64_t>(12));
  CHECK(meta.styles_path == std::optional<std::string>("book/styles.xml"));

  CHECK(&select_sheet(meta, "") == &meta.sheets[0]);
  CHECK(&select_sheet(meta, "Second") == &meta.sheets[1]);
  CHECK(&select_sheet(meta, "second") == &meta.sheets[1]);
  CHECK(&select_sheet(meta, "2") == &meta.sheets[1]);
  CHECK(kind_of([&] { select_sheet(meta, "3"); }) == ErrorKind::no_such_sheet);
  CHECK(kind_of([&] { select_sheet(meta, "Third"); }) == ErrorKind::no_such_sheet);
}

TEST_CASE("missing and malformed parts") {
  const Archive none = package("meta2.xlsx", {{"xl/workbook.xml", kWorkbook}});
  CHECK(kind_of([&] { read_metadata(none); }) == ErrorKind::missing_rels);
  const Archive bad = package("meta3.xlsx", {{"_rels/.rels", "<Relationships><Relationship Id="}});
  CHECK(kind_of([&] { read_metadata(bad); }) == ErrorKind::malformed_rels);
  const Archive no_wb = package("meta4.xlsx", {{"_rels/.rels", kRootRels}});
  CHECK_THROWS_AS(read_metadata(no_wb), Error);
}

TEST_CASE("dimension references") {
  CHECK(parse_dimension_ref("A1:CV600000") == std::optional<SheetDimension>({600000, 100}));
  CHECK(parse_dimension_ref("B3:D7") == std::optional<SheetDimension>({7, 4}));
  CHECK_FALSE(parse_dimension_ref("A1"));
  CHECK_FALSE(parse_dimension_ref(""));
  CHECK(find_dimension("<worksheet><sheetPr/><dimension ref=\"A1:C2\"/><sheetData>") ==
        std::optional<SheetDimension>({2, 3}));
  CHECK_FALSE(find_dimension("<worksheet><sheetData><row>"));
}

TEST_CASE("date styles come from built-in date formats in cellXfs") {
  const auto flags = parse_date_styles(
      "<styleSheet><numFmts count=\"1\"><numFmt numFmtId=\"164\" formatCode=\"0.0\"/></numFmts>"
      "<cellStyleXfs count=\"1\"><xf numFmtId=\"14\"/></cellStyleXfs>"
      "<cellXfs count=\"6\"><xf numFmtId=\"0\"/><xf numFmtId=\"14\"/><xf numFmtId=\"164\"/>"
      "<xf numFmtId=\"22\" applyNumberFormat=\"1\"></xf><xf numFmtId=\"47\"/><xf numFmtId=\"49\"/>"
      "</cellXfs></styleSheet>");
  CHECK(flags == std::vector<bool>{false, true, false, true, true, false});
}

}
