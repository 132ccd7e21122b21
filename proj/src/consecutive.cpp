#include <cstring>
#include <thread>

#include "engine_common.hpp"
#include "sheetreader/error.hpp"

namespace sheetreader {

namespace {

bool name_end(char c) { return is_xml_space(c) || c == '>' || c == '/'; }

// Local name of the tag whose '<' is at `lt`, or empty for end tags and declarations.
std::string_view open_tag_name(std::string_view doc, std::size_t lt) {
  std::size_t i = lt + 1;
  if (i >= doc.size() || doc[i] == '/' || doc[i] == '?' || doc[i] == '!') return {};
  const std::size_t begin = i;
  std::size_t local = begin;
  while (i < doc.size() && !name_end(doc[i])) {
    if (doc[i] == ':') local = i + 1;
    ++i;
  }
  return doc.substr(local, i - local);
}

// Attribute text of the start tag at `lt`, after the name and up to the closing '>'.
std::string_view tag_attributes(std::string_view doc, std::size_t lt) {
  auto gt = doc.find('>', lt);
  if (gt == std::string_view::npos) gt = doc.size();
  std::size_t i = lt + 1;
  while (i < gt && !is_xml_space(doc[i])) ++i;
  return doc.substr(i, gt - i);
}

}  // namespace

std::vector<ChunkBounds> split_chunks(std::uint64_t doc_len, unsigned threads) {
  if (threads == 0) threads = 1;
  std::vector<ChunkBounds> plan;
  plan.reserve(threads);
  const std::uint64_t base = doc_len / threads;
  const std::uint64_t extra = doc_len % threads;
  std::uint64_t start = 0;
  for (unsigned i = 0; i < threads; ++i) {
    const std::uint64_t size = base + (i < extra ? 1 : 0);
    plan.push_back({start, start + size});
    start += size;
  }
  return plan;
}

std::uint64_t parse_chunk(std::string_view doc, ChunkBounds bounds, ScanSink& sink,
                          ScanPosition start) {
  Scanner scanner;
  if (bounds.start == 0) {
    scanner.begin_document(0);
  } else {
    scanner.begin_at_anchor(bounds.start, start);
  }
  if (bounds.end < doc.size()) scanner.set_limit(bounds.end);
  const FeedResult r = scanner.feed(doc.substr(bounds.start), sink);
  if (!r.stopped) scanner.finish();
  return scanner.stats().cells;
}

Prescan prescan_offsets(std::string_view doc, const std::vector<ChunkBounds>& plan) {
  Prescan out;
  out.starts.assign(plan.size(), ScanPosition{});
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  std::size_t next_chunk = 1;
  std::size_t pos = 0;
  while (pos < doc.size()) {
    const char* lt = static_cast<const char*>(std::memchr(doc.data() + pos, '<', doc.size() - pos));
    if (!lt) break;
    const auto at = static_cast<std::size_t>(lt - doc.data());
    pos = at + 1;
    const std::string_view name = open_tag_name(doc, at);
    const bool is_row = name == "row";
    if (!is_row && name != "c") continue;
    while (next_chunk < plan.size() && plan[next_chunk].start <= at) {
      out.starts[next_chunk++] = {row, col};
    }
    if (is_row) {
      const auto r = xml_attribute(tag_attributes(doc, at), "r");
      std::uint32_t number = row + 1;
      if (r) {
        number = 0;
        for (const char c : *r) {
          if (c < '0' || c > '9') throw Error(ErrorKind::malformed_ref, "row number " + *r);
          number = deserialize_int_stream(number, c);
        }
      }
      row = number;
      col = 0;
      out.rows = std::max(out.rows, row);
    } else {
      if (row == 0) row = 1;
      ++col;
      if (col > kMaxColumnNumber) throw Error(ErrorKind::overflow, "column beyond XFD");
      out.cols = std::max(out.cols, col);
      out.rows = std::max(out.rows, row);
    }
  }
  while (next_chunk < plan.size()) out.starts[next_chunk++] = {row, col};
  return out;
}

std::optional<SheetDimension> tail_scan(std::string_view doc) {
  std::size_t pos = doc.size();
  while (pos > 0) {
    const auto at = doc.rfind("<c", pos - 1);
    if (at == std::string_view::npos) break;
    pos = at;
    if (at + 2 < doc.size() && name_end(doc[at + 2])) {
      const auto r = xml_attribute(tag_attributes(doc, at), "r");
      if (!r) return std::nullopt;
      const CellRef ref = parse_cell_ref(*r);
      return SheetDimension{ref.row, ref.col};
    }
  }
  return std::nullopt;
}

bool has_cell_refs(std::string_view doc) {
  std::size_t pos = 0;
  while (true) {
    const auto at = doc.find("<c", pos);
    if (at == std::string_view::npos) return true;
    pos = at + 2;
    if (at + 2 < doc.size() && name_end(doc[at + 2]))
      return xml_attribute(tag_attributes(doc, at), "r").has_value();
  }
}

ColumnFrame parse_consecutive(const Archive& archive, std::string_view sheet,
                              const EngineOptions& options) {
  const detail::SheetContext ctx = detail::open_sheet_context(archive, sheet);
  const ArchiveEntry& entry = archive.entry(ctx.sheet.part_path);
  if (options.memory_budget) {
    const std::uint64_t needed = entry.compressed_size + entry.uncompressed_size;
    if (needed > *options.memory_budget) {
      throw Error(ErrorKind::out_of_memory,
                  "worksheet needs " + std::to_string(needed) + " bytes but only " +
                      std::to_string(*options.memory_budget) +
                      " are available; use interleaved mode");
    }
  }

  detail::StringsTask strings(archive, ctx.meta, options);
  ByteBuffer doc;
  {
    PhaseScope phase(options.phases, "decompress");
    try {
      doc = read_entry_full(archive, ctx.sheet.part_path, ReadOptions{options.verify});
    } catch (const std::bad_alloc&) {
      throw Error(ErrorKind::out_of_memory, "cannot hold the decompressed worksheet");
    }
  }
  const std::string_view text = doc.view();

  FrameBuilder builder;
  builder.set_date_styles(ctx.date_styles);
  const unsigned threads = std::max(1u, options.threads);
  const auto plan = split_chunks(text.size(), threads);
  const bool refs = has_cell_refs(text);
  auto dim = find_dimension(text);
  std::optional<Prescan> pre;
  if (!refs && (threads > 1 || !dim)) pre = prescan_offsets(text, plan);
  if (!dim) {
    if (refs) {
      dim = tail_scan(text);
    } else {
      dim = SheetDimension{pre->rows, pre->cols};
    }
  }
  if (dim) builder.preallocate(dim->rows, dim->cols);

  std::uint64_t cells = 0;
  {
    PhaseScope phase(options.phases, "parse");
    std::vector<FrameWriter> writers;
    writers.reserve(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i) writers.push_back(builder.writer());
    std::vector<std::uint64_t> counts(plan.size(), 0);
    detail::ErrorSlot errors;
    auto work = [&](std::size_t i) {
      try {
        const ScanPosition start = pre ? pre->starts[i] : ScanPosition{};
        counts[i] = parse_chunk(text, plan[i], writers[i], start);
        writers[i].flush();
      } catch (...) {
        errors.capture();
      }
    };
    if (plan.size() == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(plan.size());
      for (std::size_t i = 0; i < plan.size(); ++i) pool.emplace_back(work, i);
      for (auto& t : pool) t.join();
    }
    errors.rethrow();
    for (const auto c : counts) cells += c;
  }
  if (options.stats) {
    options.stats->cells = cells;
    options.stats->document_bytes = text.size();
    options.stats->parsers = threads;
    options.stats->preallocated = dim.has_value();
    options.stats->prescanned = pre.has_value();
  }
  doc.reset();
  return detail::complete_frame(builder, strings, options);
}

}  // namespace sheetreader
