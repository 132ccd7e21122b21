#include <doctest.h>

#include <algorithm>
#include <thread>

#include "helpers.hpp"
#include "sheetreader/engine.hpp"
#include "sheetreader/generator.hpp"
#include "sheetreader/ring_buffer.hpp"
#include "sheetreader/scanner.hpp"

using namespace sheetreader;

namespace {

std::string small_sheet(bool refs) {
  GenSpec spec = GenSpec::mixed(6, 5);
  spec.columns.resize(8);
  for (auto& c : spec.columns) c.blank_fraction = 0.2;
  spec.emit_r_attributes = refs;
  spec.strings = StringStorage::inline_strings;
  spec.rich_text = true;
  GenOptions opt;
  opt.keep_csv = false;
  opt.keep_sheet_xml = true;
  return generate_xlsx(spec, testing::scratch("ring.xlsx"), opt).sheet_xml;
}

std::vector<CellRecord> reference(std::string_view doc) {
  Scanner s;
  s.begin_document();
  RecordingSink sink;
  s.feed(doc, sink);
  s.finish();
  return sink.cells;
}

}  // namespace

TEST_SUITE("ring_protocol") {

TEST_CASE("random schedules preserve every cell exactly once") {
  const std::string doc = small_sheet(true);
  auto want = reference(doc);
  std::sort(want.begin(), want.end());
  for (const std::size_t n : {2u, 3u, 4u}) {
    for (const unsigned k : {1u, 2u, 3u}) {
      for (std::uint64_t seed = 0; seed < 150; ++seed) {
        ScheduleConfig cfg;
        cfg.elements = n;
        cfg.element_size = 48 + seed % 64;
        cfg.parsers = k;
        cfg.max_bytes_per_step = 1 + seed % 23;
        cfg.seed = seed;
        auto r = run_random_schedule(doc, cfg);
        CAPTURE(n);
        CAPTURE(k);
        CAPTURE(seed);
        REQUIRE(r.violations.empty());
        std::sort(r.cells.begin(), r.cells.end());
        REQUIRE(r.cells == want);
      }
    }
  }
}

TEST_CASE("a single parser handles documents without cell references") {
  const std::string doc = small_sheet(false);
  const auto want = reference(doc);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ScheduleConfig cfg;
    cfg.elements = 2 + seed % 3;
    cfg.element_size = 32 + seed % 50;
    cfg.seed = seed;
    cfg.max_bytes_per_step = 1 + seed % 17;
    const auto r = run_random_schedule(doc, cfg);
    REQUIRE(r.violations.empty());
    REQUIRE(r.cells == want);
  }
}

TEST_CASE("the checker catches a writer that ignores the protocol") {
  const std::string doc = small_sheet(true);
  std::size_t caught = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    ScheduleConfig cfg;
    cfg.elements = 2;
    cfg.element_size = 64;
    cfg.parsers = 2;
    cfg.max_bytes_per_step = 4;
    cfg.seed = seed;
    cfg.respect_protocol = false;
    if (!run_random_schedule(doc, cfg).violations.empty()) ++caught;
  }
  CHECK(caught > 0);
}

TEST_CASE("threaded pipeline over a memory source") {
  const std::string doc = small_sheet(true);
  auto want = reference(doc);
  std::sort(want.begin(), want.end());
  for (const unsigned k : {1u, 2u, 4u}) {
    RingBuffer ring(3, 40, k, true);
    MemorySlabSource source(doc);
    WriterTask writer(ring, source);
    std::vector<RecordingSink> sinks(k);
    std::vector<std::unique_ptr<ParserTask>> parsers;
    for (unsigned i = 0; i < k; ++i) parsers.push_back(std::make_unique<ParserTask>(ring, i, sinks[i]));
    std::vector<std::thread> threads;
    threads.emplace_back([&] { run_task_threaded(writer, ring); });
    for (auto& p : parsers) threads.emplace_back([&ring, &p] { run_task_threaded(*p, ring); });
    for (auto& t : threads) t.join();
    CHECK(ring.violations().empty());
    std::vector<CellRecord> got;
    for (const auto& s : sinks) got.insert(got.end(), s.cells.begin(), s.cells.end());
    std::sort(got.begin(), got.end());
    CHECK(got == want);
  }
}

}
