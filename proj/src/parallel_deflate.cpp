#include "sheetreader/parallel_deflate.hpp"

#include <fstream>
#include <json.hpp>
#include <thread>

#include "engine_common.hpp"
#include "sheetreader/error.hpp"
#include "sheetreader/zip_writer.hpp"

namespace sheetreader {

namespace {

constexpr std::size_t kWorkerWindow = 32 * 1024;

}  // namespace

BoundaryIndex repack_entry(const std::filesystem::path& input, std::string_view name,
                           std::uint64_t interval, const std::filesystem::path& output,
                           int level) {
  if (interval == 0) throw std::invalid_argument("boundary interval must be positive");
  const Archive archive = Archive::open(input);
  const ArchiveEntry& target = archive.entry(name);

  BoundaryIndex index;
  index.entry = target.name;
  index.uncompressed_size = target.uncompressed_size;
  index.boundaries.emplace_back(0, 0);

  ZipWriter out(output, ZipWriter::Options{level, false});
  for (const auto& e : archive.entries()) {
    if (e.name != target.name) {
      out.copy_raw(archive, e);
      continue;
    }
    out.begin_entry(e.name, CompressionMethod::deflate);
    EntryStream stream = open_entry_stream(archive, e.name);
    std::vector<char> buf(static_cast<std::size_t>(std::min<std::uint64_t>(interval, 1 << 20)));
    std::uint64_t done = 0;
    std::uint64_t next_reset = interval;
    while (!stream.finished()) {
      // Never read across the next reset point so the boundary lands exactly on it.
      const auto want = static_cast<std::size_t>(
          std::min<std::uint64_t>(buf.size(), next_reset - done));
      const StreamChunk chunk = stream.next(std::span<char>(buf.data(), want));
      out.write(std::string_view(buf.data(), chunk.bytes_written));
      done += chunk.bytes_written;
      if (done == next_reset && !stream.finished()) {
        index.boundaries.push_back(out.reset_point());
        next_reset += interval;
      }
    }
    out.end_entry();
  }
  out.close();
  return index;
}

std::filesystem::path sidecar_path(const std::filesystem::path& xlsx) {
  return std::filesystem::path(xlsx.string() + ".sridx");
}

void write_sidecar(const BoundaryIndex& index, const std::filesystem::path& path) {
  nlohmann::json j;
  j["version"] = 1;
  j["entry"] = index.entry;
  j["uncompressed_size"] = index.uncompressed_size;
  j["boundaries"] = nlohmann::json::array();
  for (const auto& [c, u] : index.boundaries) j["boundaries"].push_back({c, u});
  std::ofstream out(path, std::ios::binary);
  out << j.dump() << '\n';
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
}

BoundaryIndex read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::index_mismatch, "no boundary index at " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("version").get<int>() != 1)
      throw Error(ErrorKind::index_mismatch, "unsupported index version");
    BoundaryIndex index;
    index.entry = j.at("entry").get<std::string>();
    index.uncompressed_size = j.at("uncompressed_size").get<std::uint64_t>();
    for (const auto& b : j.at("boundaries")) {
      index.boundaries.emplace_back(b.at(0).get<std::uint64_t>(), b.at(1).get<std::uint64_t>());
    }
    return index;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::index_mismatch, std::string("malformed index: ") + e.what());
  }
}

void validate_index(const Archive& archive, const BoundaryIndex& index) {
  const ArchiveEntry* e = archive.find(index.entry);
  if (!e) throw Error(ErrorKind::index_mismatch, "index names missing entry " + index.entry);
  if (e->method != CompressionMethod::deflate)
    throw Error(ErrorKind::index_mismatch, "indexed entry is not deflate-compressed");
  if (e->uncompressed_size != index.uncompressed_size)
    throw Error(ErrorKind::index_mismatch, "uncompressed size differs from the index");
  if (index.boundaries.empty() || index.boundaries.front() != std::pair<std::uint64_t, std::uint64_t>{0, 0})
    throw Error(ErrorKind::index_mismatch, "index must start at (0, 0)");
  for (std::size_t i = 1; i < index.boundaries.size(); ++i) {
    const auto& [c0, u0] = index.boundaries[i - 1];
    const auto& [c1, u1] = index.boundaries[i];
    if (c1 <= c0 || u1 <= u0 || c1 >= e->compressed_size || u1 >= e->uncompressed_size)
      throw Error(ErrorKind::index_mismatch, "boundaries out of order or out of range");
  }
}

std::vector<std::size_t> segment_starts(std::size_t boundaries, unsigned threads) {
  const std::size_t t = std::max<std::size_t>(1, std::min<std::size_t>(threads, boundaries));
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s < t; ++s) starts.push_back(s * boundaries / t);
  return starts;
}

ColumnFrame parse_parallel_decompress(const Archive& archive, const BoundaryIndex& index,
                                      std::string_view sheet, const EngineOptions& options) {
  const detail::SheetContext ctx = detail::open_sheet_context(archive, sheet);
  if (ctx.sheet.part_path != index.entry)
    throw Error(ErrorKind::index_mismatch,
                "index describes " + index.entry + ", sheet is " + ctx.sheet.part_path);
  validate_index(archive, index);
  detail::StringsTask strings(archive, ctx.meta, options);

  FrameBuilder builder;
  builder.set_date_styles(ctx.date_styles);
  const auto dim = probe_dimension(archive, index.entry);
  if (dim) builder.preallocate(dim->rows, dim->cols);

  // Attribute-free cells need positional state from the document start: one worker.
  std::vector<char> probe(64 * 1024);
  bool refs = true;
  {
    EntryStream head = open_entry_stream(archive, index.entry);
    const auto chunk = head.next(probe);
    const std::string_view text(probe.data(), chunk.bytes_written);
    refs = has_cell_refs(text) || text.find("<c") == std::string_view::npos;
  }
  const auto starts =
      segment_starts(index.boundaries.size(), refs ? std::max(1u, options.threads) : 1u);
  const std::size_t workers = starts.size();

  std::vector<FrameWriter> sinks;
  sinks.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) sinks.push_back(builder.writer());
  std::vector<std::uint64_t> counts(workers, 0);
  detail::ErrorSlot errors;

  auto work = [&](std::size_t w) {
    try {
      const auto [c_start, u_start] = index.boundaries[starts[w]];
      const std::uint64_t limit = w + 1 < workers ? index.boundaries[starts[w + 1]].second
                                                  : index.uncompressed_size;
      EntryStream stream = [&] {
        try {
          return open_entry_stream_at(archive, index.entry, c_start, u_start);
        } catch (const Error& e) {
          throw Error(ErrorKind::index_mismatch, e.what());
        }
      }();
      Scanner scanner;
      if (u_start == 0) {
        scanner.begin_document(0);
      } else {
        scanner.begin_at_anchor(u_start);
      }
      if (limit < index.uncompressed_size) scanner.set_limit(limit);
      std::vector<char> window(kWorkerWindow);
      while (true) {
        if (stream.finished()) {
          scanner.finish();
          break;
        }
        StreamChunk chunk;
        try {
          chunk = stream.next(window);
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::inflate_error && u_start != 0)
            throw Error(ErrorKind::index_mismatch, e.what());
          throw;
        }
        const FeedResult r =
            scanner.feed(std::string_view(window.data(), chunk.bytes_written), sinks[w]);
        if (r.stopped) break;
        if (scanner.position() >= limit && scanner.quiescent()) break;
      }
      counts[w] = scanner.stats().cells;
      sinks[w].flush();
    } catch (...) {
      errors.capture();
    }
  };

  {
    PhaseScope phase(options.phases, "parse");
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    errors.rethrow();
  }
  if (options.stats) {
    options.stats->cells = 0;
    for (const auto c : counts) options.stats->cells += c;
    options.stats->document_bytes = index.uncompressed_size;
    options.stats->parsers = static_cast<unsigned>(workers);
    options.stats->preallocated = dim.has_value();
  }
  return detail::complete_frame(builder, strings, options);
}

}  // namespace sheetreader
