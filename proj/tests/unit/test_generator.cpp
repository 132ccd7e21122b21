#include <doctest.h>

#include "helpers.hpp"
#include "sheetreader/engine.hpp"
#include "sheetreader/generator.hpp"

using namespace sheetreader;

TEST_SUITE("generator") {

TEST_CASE("same seed gives byte-identical files") {
  GenSpec spec = GenSpec::mixed(300, 17);
  for (auto& c : spec.columns) c.blank_fraction = 0.1;
  generate_xlsx(spec, testing::scratch("g1.xlsx"));
  generate_xlsx(spec, testing::scratch("g2.xlsx"));
  CHECK(testing::read_file(testing::scratch("g1.xlsx")) == testing::read_file(testing::scratch("g2.xlsx")));
  spec.seed = 18;
  generate_xlsx(spec, testing::scratch("g3.xlsx"));
  CHECK(testing::read_file(testing::scratch("g1.xlsx")) != testing::read_file(testing::scratch("g3.xlsx")));
}

TEST_CASE("smaller files hold a prefix of larger ones") {
  for (const double blank : {0.0, 0.3}) {
    GenSpec big = GenSpec::mixed(1000, 5);
    for (auto& c : big.columns) c.blank_fraction = blank;
    GenSpec small = big;
    small.rows = 100;
    const auto tb = generate_xlsx(big, testing::scratch("big.xlsx"));
    const auto ts = generate_xlsx(small, testing::scratch("small.xlsx"));
    const auto fb = to_csv(read_sheet(testing::scratch("big.xlsx"), "", {}));
    const auto fs = to_csv(read_sheet(testing::scratch("small.xlsx"), "", {}));
    CHECK(fs == ts.csv);
    CHECK(fb.compare(0, fs.size(), fs) == 0);
  }
}

TEST_CASE("the mixed preset has the documented column mix") {
  const GenSpec s = GenSpec::mixed(1);
  std::size_t f = 0, i = 0, t25 = 0, t75 = 0;
  for (const auto& c : s.columns) {
    if (c.kind == GenKind::floating) ++f;
    if (c.kind == GenKind::integer) ++i;
    if (c.kind == GenKind::text && c.unique_fraction == 0.25) ++t25;
    if (c.kind == GenKind::text && c.unique_fraction == 0.75) ++t75;
  }
  CHECK(f == 40);
  CHECK(i == 30);
  CHECK(t25 == 20);
  CHECK(t75 == 10);
}

TEST_CASE("unique fraction controls the number of distinct strings") {
  GenSpec spec = GenSpec::text(4000, 1, 3);
  spec.columns[0].unique_fraction = 0.25;
  const auto r = generate_xlsx(spec, testing::scratch("uniq.xlsx"));
  CHECK(r.string_cells == 4000);
  CHECK(r.unique_strings > 850);
  CHECK(r.unique_strings < 1150);
}

TEST_CASE("empty specs give valid empty sheets") {
  const auto r = generate_xlsx(GenSpec::numeric(0, 3, 1), testing::scratch("empty.xlsx"));
  CHECK(r.csv.empty());
  CHECK(r.extent == SheetDimension{0, 0});
  const auto f = read_sheet(testing::scratch("empty.xlsx"), "", {});
  CHECK(f.n_rows == 0);
  int status = 0;
  const auto out = testing::run_python("import zipfile\nprint(zipfile.ZipFile(r'" +
                                           testing::scratch("empty.xlsx").string() + "').testzip())\n",
                                       &status);
  CHECK(out == "None\n");
}

TEST_CASE("generated archives list the expected parts under an independent reader") {
  GenSpec spec = GenSpec::mixed(10, 1);
  const auto path = testing::scratch("parts.xlsx");
  generate_xlsx(spec, path);
  const auto out = testing::run_python("import zipfile\nprint(sorted(zipfile.ZipFile(r'" + path.string() +
                                       "').namelist()))\n");
  CHECK(out ==
        "['[Content_Types].xml', '_rels/.rels', 'xl/_rels/workbook.xml.rels', 'xl/sharedStrings.xml', "
        "'xl/styles.xml', 'xl/workbook.xml', 'xl/worksheets/sheet1.xml']\n");
}

TEST_CASE("json specs") {
  const GenSpec s = GenSpec::from_json(
      R"({"rows": 12, "seed": 3, "columns": [{"kind": "date", "blank": 0.5}, {"kind": "text", "unique": 0.1, "repeat": 2}],
          "r_attributes": false, "strings": "inline"})");
  CHECK(s.rows == 12);
  CHECK(s.columns.size() == 3);
  CHECK(s.columns[0].kind == GenKind::date);
  CHECK(s.columns[2].unique_fraction == 0.1);
  CHECK_FALSE(s.emit_r_attributes);
  CHECK(s.strings == StringStorage::inline_strings);
  const GenSpec back = GenSpec::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());
  CHECK(GenSpec::from_json(R"({"preset": "mixed", "rows": 5})").columns.size() == 100);
  CHECK_THROWS(GenSpec::from_json(R"({"columns": [{"kind": "text", "blank": 1.5}]})"));
  CHECK_THROWS(GenSpec::from_json(R"({"columns": [{"kind": "complex"}]})"));
}

}
