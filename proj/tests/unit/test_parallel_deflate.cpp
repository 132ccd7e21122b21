#include <doctest.h>

#include "helpers.hpp"
#include "sheetreader/archive.hpp"
#include "sheetreader/engine.hpp"
#include "sheetreader/error.hpp"
#include "sheetreader/generator.hpp"
#include "sheetreader/parallel_deflate.hpp"

using namespace sheetreader;

namespace {

struct Repacked {
  std::filesystem::path path;
  BoundaryIndex index;
  GenResult truth;
};

Repacked repacked(const std::string& name, std::uint64_t rows, std::uint64_t interval, bool refs = true) {
  GenSpec spec = GenSpec::mixed(rows, 31);
  spec.emit_r_attributes = refs;
  for (auto& c : spec.columns) c.blank_fraction = 0.1;
  const auto src = testing::scratch(name + ".src.xlsx");
  Repacked r;
  r.truth = generate_xlsx(spec, src);
  r.path = testing::scratch(name + ".xlsx");
  r.index = repack_entry(src, "xl/worksheets/sheet1.xml", interval, r.path);
  write_sidecar(r.index, sidecar_path(r.path));
  return r;
}

}  // namespace

TEST_SUITE("parallel_deflate") {

TEST_CASE("repacked entries inflate identically under a stock inflater at every boundary") {
  const Repacked r = repacked("pd1", 400, 16 * 1024);
  REQUIRE(r.index.boundaries.size() > 8);
  CHECK(r.index.boundaries.front() == std::pair<std::uint64_t, std::uint64_t>{0, 0});
  const Archive a = Archive::open(r.path);
  const ArchiveEntry& e = a.entry("xl/worksheets/sheet1.xml");
  CHECK(e.uncompressed_size == r.index.uncompressed_size);

  // Python's zlib inflates the whole entry and every suffix starting at a boundary.
  std::string starts;
  for (const auto& [c, u] : r.index.boundaries) starts += "(" + std::to_string(c) + "," + std::to_string(u) + "),";
  const std::string out = testing::run_python(
      "import zipfile, zlib\n"
      "z = zipfile.ZipFile(r'" + r.path.string() + "')\n"
      "full = z.read('xl/worksheets/sheet1.xml')\n"
      "raw = open(r'" + r.path.string() + "', 'rb').read()[" + std::to_string(e.payload_offset) + ":" +
      std::to_string(e.payload_offset + e.compressed_size) + "]\n"
      "ok = zlib.decompressobj(-15).decompress(raw) == full\n"
      "for c, u in [" + starts + "]:\n"
      "    d = zlib.decompressobj(-15)\n"
      "    ok = ok and d.decompress(raw[c:]) == full[u:]\n"
      "print(ok, z.testzip())\n");
  CHECK(out == "True None\n");
}

TEST_CASE("parallel inflation reproduces the ground truth for any thread count") {
  for (const bool refs : {true, false}) {
    const Repacked r = repacked(refs ? "pd2" : "pd3", 300, 8 * 1024, refs);
    for (const unsigned t : {1u, 2u, 3u, 8u, 64u}) {
      EngineOptions o;
      o.mode = Mode::parallel_deflate;
      o.threads = t;
      CAPTURE(t);
      CHECK(to_csv(read_sheet(r.path, "", o)) == r.truth.csv);
    }
  }
}

TEST_CASE("sidecar round trip and validation") {
  const Repacked r = repacked("pd4", 100, 4096);
  CHECK(read_sidecar(sidecar_path(r.path)) == r.index);
  const Archive a = Archive::open(r.path);
  validate_index(a, r.index);

  BoundaryIndex wrong = r.index;
  wrong.uncompressed_size += 1;
  CHECK_THROWS_AS(validate_index(a, wrong), Error);
  wrong = r.index;
  const auto starts = segment_starts(wrong.boundaries.size(), 4);
  REQUIRE(starts.size() == 4);
  wrong.boundaries[starts[1]].first += 3;
  EngineOptions o;
  o.mode = Mode::parallel_deflate;
  o.threads = 4;
  try {
    parse_parallel_decompress(a, wrong, "", o);
    FAIL("shifted boundary accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::index_mismatch);
  }

  testing::write_file(testing::scratch("bad.sridx"), "{\"version\": 1, \"entry\": 3}");
  CHECK_THROWS_AS(read_sidecar(testing::scratch("bad.sridx")), Error);
  CHECK_THROWS_AS(read_sidecar(testing::scratch("missing.sridx")), Error);
}

TEST_CASE("segment starts spread boundaries evenly") {
  CHECK(segment_starts(10, 1) == std::vector<std::size_t>{0});
  CHECK(segment_starts(10, 4) == std::vector<std::size_t>{0, 2, 5, 7});
  CHECK(segment_starts(3, 8) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("other entries are copied verbatim") {
  const Repacked r = repacked("pd5", 50, 4096);
  const Archive src = Archive::open(testing::scratch("pd5.src.xlsx"));
  const Archive dst = Archive::open(r.path);
  for (const auto& e : src.entries()) {
    CHECK(read_entry_full(src, e.name, {true}).view() == read_entry_full(dst, e.name, {true}).view());
  }
}

}
