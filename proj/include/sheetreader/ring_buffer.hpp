#pragma once

// Interleaved pipeline: one decompression writer and K staggered parsers coupled through a ring
// of N fixed-size slabs and monotonic unwrapped indexes.
//
// writer_index counts published slabs, so slab i is readable once i < writer_index. Parser k
// holds every slab at or above parser_index[k]; the writer fills slab W only when
// parser_index[k] + N > W for every k. Parser k owns slabs k, k+K, k+2K, ... and may extend into
// later slabs to finish a cell, advancing its index as it goes.
//
// Tasks are step machines so the same code runs on threads and under a deterministic scheduler.

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sheetreader/archive.hpp"
#include "sheetreader/scanner.hpp"

namespace sheetreader {

class SlabSource {
 public:
  virtual ~SlabSource() = default;
  virtual StreamChunk next(std::span<char> dest) = 0;
};

class EntrySlabSource final : public SlabSource {
 public:
  explicit EntrySlabSource(EntryStream& stream) : stream_(stream) {}
  StreamChunk next(std::span<char> dest) override;

 private:
  EntryStream& stream_;
};

class MemorySlabSource final : public SlabSource {
 public:
  explicit MemorySlabSource(std::string_view doc) : doc_(doc) {}
  StreamChunk next(std::span<char> dest) override;

 private:
  std::string_view doc_;
  std::size_t pos_ = 0;
};

class RingBuffer {
 public:
  static constexpr std::uint64_t kReleased = UINT64_MAX / 2;

  /// `checked` adds per-slot stamps and a holder registry that record protocol violations.
  RingBuffer(std::size_t elements, std::size_t element_size, unsigned parsers,
             bool checked = false);

  std::size_t elements() const noexcept { return n_; }
  std::size_t element_size() const noexcept { return size_; }
  unsigned parsers() const noexcept { return k_; }

  char* slot(std::uint64_t index) noexcept { return data_.get() + (index % n_) * size_; }
  std::size_t fill(std::uint64_t index) const noexcept { return fill_[index % n_]; }

  bool writable(std::uint64_t w) const noexcept;
  std::uint64_t published() const noexcept { return writer_index_.load(std::memory_order_acquire); }
  /// Makes slab w visible; its bytes must be complete.
  void publish(std::uint64_t w, std::size_t fill) noexcept;
  void close(std::uint64_t total) noexcept;
  bool done() const noexcept { return done_.load(std::memory_order_acquire); }
  std::uint64_t final_count() const noexcept { return final_.load(std::memory_order_acquire); }

  std::uint64_t parser_index(unsigned k) const noexcept {
    return parser_index_[k].load(std::memory_order_acquire);
  }
  void set_parser_index(unsigned k, std::uint64_t v) noexcept {
    parser_index_[k].store(v, std::memory_order_release);
  }

  void poison() noexcept { poisoned_.store(true, std::memory_order_release); }
  bool poisoned() const noexcept { return poisoned_.load(std::memory_order_acquire); }

  // Checked mode.
  bool checked() const noexcept { return checked_; }
  void begin_fill(std::uint64_t w);
  void hold(unsigned k, std::uint64_t index) noexcept;
  void release(unsigned k) noexcept;
  void verify_read(unsigned k, std::uint64_t index);
  std::vector<std::string> violations() const;

 private:
  void violation(std::string what);

  std::size_t n_;
  std::size_t size_;
  unsigned k_;
  bool checked_;
  std::unique_ptr<char[]> data_;
  std::unique_ptr<std::size_t[]> fill_;
  std::atomic<std::uint64_t> writer_index_{0};
  std::atomic<std::uint64_t> final_{0};
  std::atomic<bool> done_{false};
  std::atomic<bool> poisoned_{false};
  std::unique_ptr<std::atomic<std::uint64_t>[]> parser_index_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> stamps_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> held_;
  mutable std::mutex violations_mutex_;
  std::vector<std::string> violations_;
};

enum class Progress : std::uint8_t { progressed, blocked, finished };

class WriterTask {
 public:
  /// `respect_protocol` = false skips the non-overwrite check; only for testing the checker.
  WriterTask(RingBuffer& ring, SlabSource& source, bool respect_protocol = true)
      : ring_(ring), source_(source), respect_(respect_protocol) {}

  Progress step();
  std::uint64_t slabs() const noexcept { return next_; }
  std::uint64_t bytes() const noexcept { return bytes_; }

 private:
  RingBuffer& ring_;
  SlabSource& source_;
  bool respect_;
  bool finished_ = false;
  std::uint64_t next_ = 0;
  std::uint64_t bytes_ = 0;
};

class ParserTask {
 public:
  ParserTask(RingBuffer& ring, unsigned k, ScanSink& sink,
             std::size_t max_bytes_per_step = SIZE_MAX);

  Progress step();
  const Scanner& scanner() const noexcept { return scanner_; }

 private:
  enum class Phase : std::uint8_t { acquire, read, extend_wait, done };

  Progress after_slab(bool stopped);
  Progress finish();
  std::uint64_t slab_start(std::uint64_t index) const noexcept {
    return index * ring_.element_size();
  }

  RingBuffer& ring_;
  unsigned k_;
  ScanSink& sink_;
  std::size_t max_bytes_;
  Scanner scanner_;
  Phase phase_ = Phase::acquire;
  bool started_ = false;
  std::uint64_t owned_ = 0;    // slab whose cells this parser is emitting
  std::uint64_t current_ = 0;  // slab being read
  std::size_t offset_ = 0;     // bytes of current_ consumed
};

/// Drives a task on the calling thread with bounded spinning, then yielding, then short sleeps.
void run_task_threaded(WriterTask& task, RingBuffer& ring);
void run_task_threaded(ParserTask& task, RingBuffer& ring);

// --- deterministic exploration ----------------------------------------------------------------

struct CellRecord {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  CellType type = CellType::number;
  std::string value;
  friend auto operator<=>(const CellRecord&, const CellRecord&) = default;
};

/// Sink that keeps a printable copy of every event.
class RecordingSink final : public ScanSink {
 public:
  void on_cell(const CellEvent& cell) override;
  void on_shared_string(std::string_view s) override { strings.emplace_back(s); }
  std::vector<CellRecord> cells;
  std::vector<std::string> strings;
};

std::string render_payload(const CellPayload& payload);

struct ScheduleConfig {
  std::size_t elements = 2;
  std::size_t element_size = 64;
  unsigned parsers = 1;
  std::size_t max_bytes_per_step = 16;
  std::uint64_t seed = 0;
  bool respect_protocol = true;
};

struct ScheduleResult {
  std::vector<std::string> violations;  // protocol breaches, deadlock, scanner errors
  std::vector<CellRecord> cells;        // all parsers, in emission order
  std::uint64_t steps = 0;
};

/// Runs writer + parsers over `doc` with a seeded random choice of the next task at every step.
ScheduleResult run_random_schedule(std::string_view doc, const ScheduleConfig& config);

}  // namespace sheetreader
