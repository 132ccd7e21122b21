#include "engine_common.hpp"

#include <array>
#include <charconv>
#include <fstream>

#include "sheetreader/error.hpp"
#include "sheetreader/parallel_deflate.hpp"

namespace sheetreader {

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::consecutive: return "consecutive";
    case Mode::interleaved: return "interleaved";
    case Mode::parallel_deflate: return "parallel-deflate";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  if (text == "consecutive") return Mode::consecutive;
  if (text == "interleaved") return Mode::interleaved;
  if (text == "parallel-deflate" || text == "parallel_deflate") return Mode::parallel_deflate;
  throw std::invalid_argument("unknown mode: " + std::string(text));
}

StringsMode parse_strings_mode(std::string_view text) {
  if (text == "parallel") return StringsMode::parallel;
  if (text == "sequential") return StringsMode::sequential;
  throw std::invalid_argument("unknown strings mode: " + std::string(text));
}

PhaseLog::PhaseLog() : origin_(std::chrono::steady_clock::now()) {}

double PhaseLog::now_ms() const {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - origin_)
      .count();
}

void PhaseLog::begin(std::string_view name) {
  const double t = now_ms();
  std::lock_guard lock(mutex_);
  phases_.push_back({std::string(name), t, -1});
}

void PhaseLog::end(std::string_view name) {
  const double t = now_ms();
  std::lock_guard lock(mutex_);
  for (auto it = phases_.rbegin(); it != phases_.rend(); ++it) {
    if (it->name == name && it->end_ms < 0) {
      it->end_ms = t;
      return;
    }
  }
}

std::vector<PhaseLog::Phase> PhaseLog::phases() const {
  std::lock_guard lock(mutex_);
  return phases_;
}

double PhaseLog::total_ms(std::string_view name) const {
  std::lock_guard lock(mutex_);
  double total = 0;
  for (const auto& p : phases_) {
    if (p.name == name && p.end_ms >= 0) total += p.end_ms - p.start_ms;
  }
  return total;
}

std::optional<std::uint64_t> available_memory() {
  std::ifstream in("/proc/meminfo");
  std::string key;
  std::uint64_t value = 0;
  std::string unit;
  while (in >> key >> value >> unit) {
    if (key == "MemAvailable:") return value * 1024;
  }
  return std::nullopt;
}

std::shared_ptr<SharedStrings> parse_shared_strings(const Archive& archive, std::string_view path,
                                                    std::optional<std::uint64_t> count,
                                                    std::size_t window) {
  struct Sink final : ScanSink {
    SharedStrings* out;
    void on_shared_string(std::string_view s) override { out->add(s); }
  };
  auto strings = std::make_shared<SharedStrings>();
  if (count) strings->reserve(static_cast<std::size_t>(*count));
  Sink sink;
  sink.out = strings.get();
  Scanner scanner(DocumentKind::shared_strings);
  EntryStream stream = open_entry_stream(archive, path);
  std::vector<char> buffer(window);
  while (!stream.finished()) {
    const auto chunk = stream.next(buffer);
    scanner.feed(std::string_view(buffer.data(), chunk.bytes_written), sink);
  }
  scanner.finish();
  return strings;
}

ColumnFrame read_sheet(const std::filesystem::path& path, std::string_view sheet,
                       const EngineOptions& options) {
  const Archive archive = Archive::open(path);
  switch (options.mode) {
    case Mode::consecutive: return parse_consecutive(archive, sheet, options);
    case Mode::interleaved: return parse_interleaved(archive, sheet, options);
    case Mode::parallel_deflate: {
      const BoundaryIndex index = read_sidecar(sidecar_path(path));
      return parse_parallel_decompress(archive, index, sheet, options);
    }
  }
  throw std::invalid_argument("unknown mode");
}

namespace detail {

SheetContext open_sheet_context(const Archive& archive, std::string_view selector) {
  SheetContext ctx;
  ctx.meta = read_metadata(archive);
  ctx.sheet = select_sheet(ctx.meta, selector);
  if (ctx.meta.styles_path) ctx.date_styles = read_date_styles(archive, *ctx.meta.styles_path);
  return ctx;
}

StringsTask::StringsTask(const Archive& archive, const WorkbookMeta& meta,
                         const EngineOptions& options)
    : archive_(archive),
      path_(meta.shared_strings_path),
      count_(meta.shared_strings_unique_count),
      phases_(options.phases) {
  if (path_ && options.strings == StringsMode::parallel) thread_ = std::thread([this] { run(); });
}

StringsTask::~StringsTask() {
  if (thread_.joinable()) thread_.join();
}

void StringsTask::run() {
  try {
    PhaseScope phase(phases_, "strings");
    result_ = parse_shared_strings(archive_, *path_, count_);
  } catch (...) {
    error_ = std::current_exception();
  }
}

std::shared_ptr<SharedStrings> StringsTask::take() {
  if (!path_) return std::make_shared<SharedStrings>();
  if (thread_.joinable()) {
    thread_.join();
  } else if (!result_ && !error_) {
    run();
  }
  if (error_) std::rethrow_exception(error_);
  return result_;
}

ColumnFrame complete_frame(FrameBuilder& builder, StringsTask& strings,
                           const EngineOptions& options) {
  builder.resolve_shared_strings(strings.take());
  PhaseScope phase(options.phases, "transform");
  return finalize(std::move(builder), options.headers);
}

}  // namespace detail
}  // namespace sheetreader
