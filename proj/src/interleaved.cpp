#include <array>
#include <thread>

#include "engine_common.hpp"
#include "sheetreader/error.hpp"
#include "sheetreader/ring_buffer.hpp"

namespace sheetreader {

namespace {

constexpr std::size_t kRefProbeLimit = 1 << 20;

// Whether the first cell in the stream head carries an r attribute. Unknown counts as no.
bool probe_cell_refs(const Archive& archive, std::string_view path) {
  EntryStream stream = open_entry_stream(archive, path);
  std::string head;
  std::array<char, 16 * 1024> window;
  while (!stream.finished() && head.size() < kRefProbeLimit) {
    const auto chunk = stream.next(window);
    head.append(window.data(), chunk.bytes_written);
    // Look for a complete <c ...> start tag.
    std::size_t pos = 0;
    while (true) {
      const auto at = head.find("<c", pos);
      if (at == std::string::npos) break;
      pos = at + 2;
      if (at + 2 >= head.size()) break;
      const char next = head[at + 2];
      if (!is_xml_space(next) && next != '>' && next != '/') continue;
      if (head.find('>', at) == std::string::npos) break;
      return has_cell_refs(std::string_view(head).substr(at));
    }
  }
  return stream.finished() && has_cell_refs(head);
}

}  // namespace

ColumnFrame parse_interleaved(const Archive& archive, std::string_view sheet,
                              const EngineOptions& options) {
  const detail::SheetContext ctx = detail::open_sheet_context(archive, sheet);
  const std::string& path = ctx.sheet.part_path;
  detail::StringsTask strings(archive, ctx.meta, options);

  FrameBuilder builder;
  builder.set_date_styles(ctx.date_styles);
  const auto dim = probe_dimension(archive, path);
  if (dim) builder.preallocate(dim->rows, dim->cols);
  const unsigned parsers =
      probe_cell_refs(archive, path) ? std::max(1u, options.parser_threads) : 1u;

  RingBuffer ring(options.ring_elements, options.ring_element_size, parsers, options.checked_ring);
  EntryStream stream = open_entry_stream(archive, path, ReadOptions{options.verify});
  EntrySlabSource source(stream);
  WriterTask writer(ring, source);
  std::vector<FrameWriter> sinks;
  std::vector<std::unique_ptr<ParserTask>> tasks;
  sinks.reserve(parsers);
  for (unsigned k = 0; k < parsers; ++k) sinks.push_back(builder.writer());
  for (unsigned k = 0; k < parsers; ++k)
    tasks.push_back(std::make_unique<ParserTask>(ring, k, sinks[k]));

  {
    PhaseScope phase(options.phases, "parse");
    detail::ErrorSlot errors;
    std::vector<std::thread> pool;
    pool.reserve(parsers + 1);
    pool.emplace_back([&] {
      try {
        run_task_threaded(writer, ring);
      } catch (...) {
        errors.capture();
      }
    });
    for (unsigned k = 0; k < parsers; ++k) {
      pool.emplace_back([&, k] {
        try {
          run_task_threaded(*tasks[k], ring);
        } catch (...) {
          errors.capture();
        }
      });
    }
    for (auto& t : pool) t.join();
    errors.rethrow();
    if (options.checked_ring) {
      const auto violations = ring.violations();
      if (!violations.empty()) throw std::logic_error("ring protocol: " + violations.front());
    }
  }

  std::uint64_t cells = 0;
  for (auto& t : tasks) cells += t->scanner().stats().cells;
  for (auto& s : sinks) s.flush();
  if (options.stats) {
    options.stats->cells = cells;
    options.stats->document_bytes = writer.bytes();
    options.stats->slabs = writer.slabs();
    options.stats->parsers = parsers;
    options.stats->preallocated = dim.has_value();
  }
  return detail::complete_frame(builder, strings, options);
}

}  // namespace sheetreader
