#include <doctest.h>

#include "helpers.hpp"
#include "sheetreader/engine.hpp"
#include "sheetreader/error.hpp"
#include "sheetreader/generator.hpp"

using namespace sheetreader;

namespace {

std::vector<EngineOptions> engine_grid() {
  std::vector<EngineOptions> grid;
  for (const unsigned t : {1u, 2u, 8u}) {
    EngineOptions o;
    o.threads = t;
    grid.push_back(o);
  }
  for (const unsigned k : {1u, 2u, 4u}) {
    for (const auto& [n, size] : {std::pair<std::size_t, std::size_t>{2, 4096}, {1024, 32768}, {3, 97}}) {
      EngineOptions o;
      o.mode = Mode::interleaved;
      o.parser_threads = k;
      o.ring_elements = n;
      o.ring_element_size = size;
      o.checked_ring = true;
      grid.push_back(o);
    }
  }
  return grid;
}

void check_against_truth(const GenSpec& spec, const std::string& name) {
  const auto path = testing::scratch(name);
  const GenResult truth = generate_xlsx(spec, path);
  for (const auto& options : engine_grid()) {
    CAPTURE(to_string(options.mode));
    CAPTURE(options.threads);
    CAPTURE(options.parser_threads);
    CAPTURE(options.ring_element_size);
    const ColumnFrame frame = read_sheet(path, "", options);
    REQUIRE(to_csv(frame) == truth.csv);
    REQUIRE(frame.columns.size() == truth.column_types.size());
    for (std::size_t c = 0; c < frame.columns.size(); ++c) {
      CHECK(frame.columns[c].type == truth.column_types[c]);
      CHECK(frame.columns[c].null_count() == truth.null_counts[c]);
    }
  }
}

}  // namespace

TEST_SUITE("engines") {

TEST_CASE("every engine configuration reproduces the generator's ground truth") {
  GenSpec mixed = GenSpec::mixed(150, 21);
  check_against_truth(mixed, "e-mixed.xlsx");

  GenSpec sparse = GenSpec::mixed(120, 22);
  for (auto& c : sparse.columns) c.blank_fraction = 0.5;
  sparse.emit_r_attributes = false;
  sparse.emit_dimension = false;
  check_against_truth(sparse, "e-sparse.xlsx");

  GenSpec kinds;
  kinds.rows = 200;
  kinds.seed = 23;
  kinds.columns = {{GenKind::boolean, 1, 0.1}, {GenKind::date, 1, 0.1}, {GenKind::text, 0.2, 0.3},
                   {GenKind::integer, 1, 0.0}, {GenKind::floating, 1, 0.9}};
  kinds.strings = StringStorage::inline_strings;
  kinds.rich_text = true;
  check_against_truth(kinds, "e-kinds.xlsx");

  GenSpec empty = GenSpec::numeric(0, 5, 1);
  check_against_truth(empty, "e-empty.xlsx");
  GenSpec one = GenSpec::text(1, 1, 1);
  check_against_truth(one, "e-one.xlsx");
}

TEST_CASE("numeric sums match the generator") {
  const auto path = testing::scratch("e-sums.xlsx");
  const GenResult truth = generate_xlsx(GenSpec::numeric(500, 6, 2), path);
  const ColumnFrame frame = read_sheet(path, "", {});
  for (std::size_t c = 0; c < frame.columns.size(); ++c) {
    double sum = 0;
    const auto& col = frame.columns[c];
    for (std::size_t i = 0; i < col.size(); ++i) {
      sum += col.type == ColumnType::integer ? static_cast<double>(col.integer(i)) : col.real(i);
    }
    CHECK(sum == truth.numeric_sums[c]);
  }
}

TEST_CASE("sequential shared strings, headers and sheet selection") {
  GenSpec spec = GenSpec::mixed(80, 4);
  spec.sheets = 3;
  const auto path = testing::scratch("e-multi.xlsx");
  generate_xlsx(spec, path);
  for (const char* sheet : {"Sheet2", "3"}) {
    EngineOptions a;
    a.strings = StringsMode::sequential;
    a.headers = true;
    EngineOptions b = a;
    b.mode = Mode::interleaved;
    b.strings = StringsMode::parallel;
    const auto fa = read_sheet(path, sheet, a);
    const auto fb = read_sheet(path, sheet, b);
    CHECK(fa.has_header);
    CHECK(fa.n_rows == 79);
    CHECK(to_csv(fa) == to_csv(fb));
  }
  CHECK(to_csv(read_sheet(path, "Sheet2", {})) != to_csv(read_sheet(path, "Sheet1", {})));
  CHECK_THROWS_AS(read_sheet(path, "Sheet9", {}), Error);
}

TEST_CASE("consecutive mode refuses documents beyond the memory budget") {
  const auto path = testing::scratch("e-budget.xlsx");
  generate_xlsx(GenSpec::numeric(200, 10, 1), path);
  EngineOptions o;
  o.memory_budget = 1000;
  try {
    read_sheet(path, "", o);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::out_of_memory);
    CHECK(std::string(e.what()).find("interleaved") != std::string::npos);
  }
  o.mode = Mode::interleaved;
  CHECK(read_sheet(path, "", o).n_rows == 200);
}

TEST_CASE("phase log and stats") {
  const auto path = testing::scratch("e-phases.xlsx");
  generate_xlsx(GenSpec::mixed(100, 3), path);
  for (const Mode mode : {Mode::consecutive, Mode::interleaved}) {
    PhaseLog log;
    EngineStats stats;
    EngineOptions o;
    o.mode = mode;
    o.phases = &log;
    o.stats = &stats;
    read_sheet(path, "", o);
    CHECK(stats.cells == 100 * 100);
    CHECK(stats.preallocated);
    CHECK(log.total_ms("parse") > 0);
    CHECK(log.total_ms("strings") > 0);
    CHECK(log.total_ms("transform") > 0);
    for (const auto& p : log.phases()) CHECK(p.end_ms >= p.start_ms);
  }
}

TEST_CASE("documents without cell references fall back to one interleaved parser") {
  const auto path = testing::scratch("e-norefs.xlsx");
  GenSpec spec = GenSpec::numeric(300, 4, 8);
  spec.emit_r_attributes = false;
  generate_xlsx(spec, path);
  EngineStats stats;
  EngineOptions o;
  o.mode = Mode::interleaved;
  o.parser_threads = 4;
  o.stats = &stats;
  read_sheet(path, "", o);
  CHECK(stats.parsers == 1);
}

}
