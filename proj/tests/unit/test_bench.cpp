#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "sheetreader/bench.hpp"
#include "sheetreader/generator.hpp"

using namespace sheetreader;

TEST_SUITE("bench_harness") {

TEST_CASE("empty report is a header line") {
  std::ostringstream out;
  emit_report({}, out);
  CHECK(out.str() ==
        "config,mode,threads,rows,wall_ms,peak_rss_bytes,decompress_ms,parse_ms,strings_ms,"
        "transform_ms,repeat,status,caches_cleared,samples\n");
  std::istringstream in(out.str());
  CHECK(read_report(in).rows.empty());
}

TEST_CASE("report round trip") {
  BenchReport r;
  BenchRow a;
  a.config = "file.xlsx:consecutive,8";
  a.mode = "consecutive";
  a.threads = 8;
  a.rows = 600000;
  a.wall_ms = 1234.5678901234;
  a.peak_rss_bytes = 1ull << 33;
  a.decompress_ms = 0.1;
  a.parse_ms = 1.0 / 3;
  a.strings_ms = 5;
  a.transform_ms = 7e-9;
  a.repeat = 2;
  a.status = "failed: \"quoted\", comma";
  a.caches_cleared = true;
  a.samples = {1, 2, 3};
  r.rows.push_back(a);
  r.rows.push_back(BenchRow{});
  std::ostringstream out;
  emit_report(r, out);
  std::istringstream in(out.str());
  CHECK(read_report(in) == r);
}

TEST_CASE("children are measured and failures recorded without stopping the run") {
  const auto path = testing::scratch("bench.xlsx");
  generate_xlsx(GenSpec::mixed(2000, 2), path);
  BenchConfig good;
  good.id = "good";
  good.file = path;
  good.options.threads = 2;
  BenchConfig inter = good;
  inter.id = "inter";
  inter.options.mode = Mode::interleaved;
  BenchConfig bad = good;
  bad.id = "bad";
  bad.file = testing::scratch("missing.xlsx");

  BenchSettings settings;
  settings.repeats = 2;
  settings.sample_period_ms = 5;
  const BenchReport report = run_benchmark({good, bad, inter}, settings);
  REQUIRE(report.rows.size() == 9);
  for (const auto& row : report.rows) {
    CAPTURE(row.config);
    if (row.config == "bad") {
      CHECK(row.status.rfind("failed", 0) == 0);
      continue;
    }
    CHECK(row.status == "ok");
    CHECK(row.rows == 2000);
    CHECK(row.peak_rss_bytes > 0);
    for (const auto s : row.samples) CHECK(row.peak_rss_bytes >= s);
    CHECK(row.decompress_ms + row.parse_ms <= row.wall_ms + 1e-6);
    CHECK(row.transform_ms <= row.wall_ms);
  }
  CHECK(report.rows[2].repeat == 0);
  CHECK(report.rows[2].wall_ms == doctest::Approx((report.rows[0].wall_ms + report.rows[1].wall_ms) / 2));
  CHECK(report.rows[8].mode == "interleaved");

  settings.repeats = 1;
  CHECK(run_benchmark({good}, settings).rows.size() == 1);
}

TEST_CASE("config json round trip") {
  BenchConfig c;
  c.id = "x";
  c.file = "/tmp/a.xlsx";
  c.sheet = "Data";
  c.options.mode = Mode::parallel_deflate;
  c.options.threads = 3;
  c.options.ring_element_size = 4096;
  c.options.strings = StringsMode::sequential;
  const BenchConfig back = config_from_json(config_to_json(c));
  CHECK(back.id == "x");
  CHECK(back.file == c.file);
  CHECK(back.sheet == "Data");
  CHECK(back.options.mode == Mode::parallel_deflate);
  CHECK(back.options.threads == 3);
  CHECK(back.options.ring_element_size == 4096);
  CHECK(back.options.strings == StringsMode::sequential);
}

}
