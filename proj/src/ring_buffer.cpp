#include "sheetreader/ring_buffer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <random>
#include <thread>

#include "sheetreader/debug.hpp"
#include "sheetreader/error.hpp"

namespace sheetreader {

namespace {

constexpr std::uint64_t kNoSlab = UINT64_MAX;

class Backoff {
 public:
  void reset() noexcept { rounds_ = 0; }
  void wait() {
    ++rounds_;
    if (rounds_ < 64) return;
    if (rounds_ < 128) {
      std::this_thread::yield();
      return;
    }
    std::this_thread::sleep_for(std::chrono::microseconds(50));
  }

 private:
  unsigned rounds_ = 0;
};

template <typename Task>
void drive(Task& task, RingBuffer& ring) {
  Backoff backoff;
  try {
    while (true) {
      const Progress p = task.step();
      if (p == Progress::finished) return;
      if (p == Progress::blocked) {
        backoff.wait();
      } else {
        backoff.reset();
      }
    }
  } catch (...) {
    ring.poison();
    throw;
  }
}

}  // namespace

StreamChunk EntrySlabSource::next(std::span<char> dest) {
  if (stream_.finished()) return {0, true};
  return stream_.next(dest);
}

StreamChunk MemorySlabSource::next(std::span<char> dest) {
  const std::size_t n = std::min(dest.size(), doc_.size() - pos_);
  std::copy_n(doc_.data() + pos_, n, dest.data());
  pos_ += n;
  return {n, pos_ == doc_.size()};
}

// ---------------------------------------------------------------------------------------------

RingBuffer::RingBuffer(std::size_t elements, std::size_t element_size, unsigned parsers,
                       bool checked)
    : n_(elements), size_(element_size), k_(parsers), checked_(checked) {
  if (elements < 1 || element_size < 1 || parsers < 1)
    throw std::invalid_argument("ring needs at least one element, byte and parser");
  data_ = std::make_unique<char[]>(n_ * size_);
  fill_ = std::make_unique<std::size_t[]>(n_);
  parser_index_ = std::make_unique<std::atomic<std::uint64_t>[]>(k_);
  for (unsigned k = 0; k < k_; ++k) parser_index_[k].store(k);
  if (checked_) {
    stamps_ = std::make_unique<std::atomic<std::uint64_t>[]>(n_);
    held_ = std::make_unique<std::atomic<std::uint64_t>[]>(k_);
    for (std::size_t i = 0; i < n_; ++i) stamps_[i].store(kNoSlab);
    for (unsigned k = 0; k < k_; ++k) held_[k].store(kNoSlab);
  }
}

bool RingBuffer::writable(std::uint64_t w) const noexcept {
  for (unsigned k = 0; k < k_; ++k) {
    if (parser_index_[k].load(std::memory_order_acquire) + n_ <= w) return false;
  }
  return true;
}

void RingBuffer::publish(std::uint64_t w, std::size_t fill) noexcept {
  fill_[w % n_] = fill;
  if (checked_) stamps_[w % n_].store(w, std::memory_order_release);
  writer_index_.store(w + 1, std::memory_order_release);
}

void RingBuffer::close(std::uint64_t total) noexcept {
  final_.store(total, std::memory_order_release);
  done_.store(true, std::memory_order_release);
}

void RingBuffer::begin_fill(std::uint64_t w) {
  if (!checked_) return;
  for (unsigned k = 0; k < k_; ++k) {
    const std::uint64_t h = held_[k].load(std::memory_order_acquire);
    if (h != kNoSlab && h != w && h % n_ == w % n_) {
      violation("writer overwrites slab " + std::to_string(h) + " held by parser " +
                std::to_string(k) + " while filling " + std::to_string(w));
    }
  }
  stamps_[w % n_].store(kNoSlab, std::memory_order_release);
}

void RingBuffer::hold(unsigned k, std::uint64_t index) noexcept {
  if (checked_) held_[k].store(index, std::memory_order_release);
}

void RingBuffer::release(unsigned k) noexcept {
  if (checked_) held_[k].store(kNoSlab, std::memory_order_release);
}

void RingBuffer::verify_read(unsigned k, std::uint64_t index) {
  if (!checked_) return;
  if (index >= published()) {
    violation("parser " + std::to_string(k) + " reads unpublished slab " + std::to_string(index));
  } else if (stamps_[index % n_].load(std::memory_order_acquire) != index) {
    violation("parser " + std::to_string(k) + " reads slab " + std::to_string(index) +
              " after it was overwritten");
  }
}

void RingBuffer::violation(std::string what) {
  std::lock_guard lock(violations_mutex_);
  violations_.push_back(std::move(what));
}

std::vector<std::string> RingBuffer::violations() const {
  std::lock_guard lock(violations_mutex_);
  return violations_;
}

// ---------------------------------------------------------------------------------------------

Progress WriterTask::step() {
  if (finished_) return Progress::finished;
  if (ring_.poisoned()) {
    finished_ = true;
    return Progress::finished;
  }
  if (respect_ && !ring_.writable(next_)) return Progress::blocked;
  debug::HotPathScope hot;
  ring_.begin_fill(next_);
  const StreamChunk chunk =
      source_.next(std::span<char>(ring_.slot(next_), ring_.element_size()));
  if (chunk.bytes_written > 0) {
    ring_.publish(next_, chunk.bytes_written);
    bytes_ += chunk.bytes_written;
    ++next_;
  }
  if (chunk.finished) {
    ring_.close(next_);
    finished_ = true;
    return Progress::finished;
  }
  return Progress::progressed;
}

// ---------------------------------------------------------------------------------------------

ParserTask::ParserTask(RingBuffer& ring, unsigned k, ScanSink& sink, std::size_t max_bytes)
    : ring_(ring), k_(k), sink_(sink), max_bytes_(std::max<std::size_t>(1, max_bytes)) {
  owned_ = k;
}

Progress ParserTask::finish() {
  phase_ = Phase::done;
  ring_.release(k_);
  ring_.set_parser_index(k_, RingBuffer::kReleased);
  return Progress::finished;
}

Progress ParserTask::step() {
  if (phase_ == Phase::done) return Progress::finished;
  if (ring_.poisoned()) return finish();
  debug::HotPathScope hot;

  switch (phase_) {
    case Phase::acquire: {
      if (owned_ >= ring_.published()) {
        if (ring_.done() && owned_ >= ring_.final_count()) return finish();
        return Progress::blocked;
      }
      const std::uint64_t start = slab_start(owned_);
      if (!started_ || scanner_.position() != start) {
        if (owned_ == 0) {
          scanner_.begin_document(0);
        } else {
          scanner_.begin_at_anchor(start);
        }
        started_ = true;
      }
      scanner_.set_limit(start + ring_.fill(owned_));
      current_ = owned_;
      offset_ = 0;
      ring_.hold(k_, current_);
      phase_ = Phase::read;
      return Progress::progressed;
    }
    case Phase::read: {
      const std::size_t fill = ring_.fill(current_);
      const std::size_t n = std::min(max_bytes_, fill - offset_);
      ring_.verify_read(k_, current_);
      const FeedResult r =
          scanner_.feed(std::string_view(ring_.slot(current_) + offset_, n), sink_);
      ring_.verify_read(k_, current_);
      offset_ += r.consumed;
      if (r.stopped) return after_slab(true);
      if (offset_ < fill) return Progress::progressed;
      if (scanner_.quiescent()) return after_slab(false);
      phase_ = Phase::extend_wait;
      return Progress::progressed;
    }
    case Phase::extend_wait: {
      const std::uint64_t next = current_ + 1;
      if (next >= ring_.published()) {
        if (ring_.done() && next >= ring_.final_count()) {
          scanner_.finish();
          return finish();
        }
        return Progress::blocked;
      }
      ring_.hold(k_, next);
      ring_.set_parser_index(k_, next);
      current_ = next;
      offset_ = 0;
      phase_ = Phase::read;
      return Progress::progressed;
    }
    case Phase::done: break;
  }
  return Progress::finished;
}

Progress ParserTask::after_slab(bool stopped) {
  const unsigned K = ring_.parsers();
  const std::uint64_t c = current_;
  if (c != owned_ && c % K == k_) {
    // The extension ended inside a slab this parser owns anyway: keep going as its owner.
    owned_ = c;
    scanner_.set_limit(slab_start(c) + ring_.fill(c));
    if (stopped) {
      phase_ = Phase::read;
      return Progress::progressed;
    }
  }
  std::uint64_t next = c + 1;
  next += (k_ + K - next % K) % K;
  ring_.release(k_);
  ring_.set_parser_index(k_, next);
  owned_ = next;
  phase_ = Phase::acquire;
  return Progress::progressed;
}

void run_task_threaded(WriterTask& task, RingBuffer& ring) { drive(task, ring); }
void run_task_threaded(ParserTask& task, RingBuffer& ring) { drive(task, ring); }

// ---------------------------------------------------------------------------------------------

std::string render_payload(const CellPayload& payload) {
  struct Visitor {
    std::string operator()(double v) const {
      char buf[32];
      const auto r = std::to_chars(buf, buf + sizeof buf, v);
      return std::string(buf, r.ptr);
    }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(SstIndex v) const { return "#" + std::to_string(v.value); }
    std::string operator()(bool v) const { return v ? "TRUE" : "FALSE"; }
    std::string operator()(std::string_view v) const { return std::string(v); }
    std::string operator()(ErrorMark v) const { return "!" + std::string(v.code); }
  };
  return std::visit(Visitor{}, payload);
}

void RecordingSink::on_cell(const CellEvent& cell) {
  cells.push_back({cell.row, cell.col, cell.type, render_payload(cell.payload)});
}

ScheduleResult run_random_schedule(std::string_view doc, const ScheduleConfig& config) {
  ScheduleResult result;
  RingBuffer ring(config.elements, config.element_size, config.parsers, true);
  MemorySlabSource source(doc);
  WriterTask writer(ring, source, config.respect_protocol);
  std::vector<RecordingSink> sinks(config.parsers);
  std::vector<std::unique_ptr<ParserTask>> parsers;
  for (unsigned k = 0; k < config.parsers; ++k) {
    parsers.push_back(
        std::make_unique<ParserTask>(ring, k, sinks[k], config.max_bytes_per_step));
  }

  const std::size_t tasks = config.parsers + 1;
  std::vector<bool> finished(tasks, false);
  std::vector<bool> blocked(tasks, false);
  std::size_t remaining = tasks;
  std::mt19937_64 rng(config.seed);
  try {
    while (remaining > 0) {
      std::size_t pick = rng() % remaining;
      std::size_t t = 0;
      for (;; ++t) {
        if (finished[t]) continue;
        if (pick-- == 0) break;
      }
      const Progress p = t == 0 ? writer.step() : parsers[t - 1]->step();
      ++result.steps;
      if (p == Progress::finished) {
        finished[t] = true;
        --remaining;
        std::fill(blocked.begin(), blocked.end(), false);
      } else if (p == Progress::progressed) {
        std::fill(blocked.begin(), blocked.end(), false);
      } else {
        blocked[t] = true;
        bool all = true;
        for (std::size_t i = 0; i < tasks; ++i) all = all && (finished[i] || blocked[i]);
        if (all) {
          result.violations.push_back("deadlock after " + std::to_string(result.steps) +
                                      " steps");
          break;
        }
      }
    }
  } catch (const std::exception& e) {
    result.violations.push_back(std::string("scanner error: ") + e.what());
  }
  for (auto& v : ring.violations()) result.violations.push_back(std::move(v));
  for (auto& s : sinks) {
    for (auto& c : s.cells) result.cells.push_back(std::move(c));
  }
  return result;
}

}  // namespace sheetreader
