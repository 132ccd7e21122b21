#include "sheetreader/frame.hpp"

#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "sheetreader/debug.hpp"
#include "sheetreader/error.hpp"

namespace sheetreader {

namespace {

constexpr std::uint32_t bit(CellKind k) { return 1u << static_cast<unsigned>(k); }
constexpr std::uint32_t kNumberBits = bit(CellKind::integer) | bit(CellKind::real);
constexpr std::uint32_t kStringBits = bit(CellKind::shared) | bit(CellKind::text);
constexpr std::uint32_t kIgnoredBits = bit(CellKind::null) | bit(CellKind::error);
constexpr std::uint64_t kArenaShift = 40;
constexpr std::uint32_t kMinGrowth = 64;

void note_kind(std::atomic<std::uint32_t>& mask, CellKind kind) {
  const std::uint32_t b = bit(kind);
  // Plain load first: the common case is a kind the column has already seen.
  if (!(mask.load(std::memory_order_relaxed) & b)) mask.fetch_or(b, std::memory_order_relaxed);
}

void append_integer(std::string& out, std::int64_t v) {
  char buf[24];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

bool needs_quotes(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

void append_csv_field(std::string& out, std::string_view s) {
  if (!needs_quotes(s)) {
    out.append(s);
    return;
  }
  out.push_back('"');
  for (const char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

std::string_view to_string(ColumnType type) noexcept {
  switch (type) {
    case ColumnType::empty: return "empty";
    case ColumnType::boolean: return "boolean";
    case ColumnType::integer: return "integer";
    case ColumnType::real: return "double";
    case ColumnType::date: return "date";
    case ColumnType::string: return "string";
  }
  return "?";
}

ColumnType column_type_for(std::uint32_t mask) noexcept {
  mask &= ~kIgnoredBits;
  if (mask == 0) return ColumnType::empty;
  if ((mask & ~kNumberBits) == 0)
    return mask == bit(CellKind::integer) ? ColumnType::integer : ColumnType::real;
  if (mask == bit(CellKind::boolean)) return ColumnType::boolean;
  if (mask == bit(CellKind::date)) return ColumnType::date;
  return ColumnType::string;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

void append_date(std::string& out, double serial) {
  using namespace std::chrono;
  double whole = std::floor(serial);
  auto seconds = static_cast<std::int64_t>(std::llround((serial - whole) * 86400.0));
  if (seconds >= 86400) {
    whole += 1;
    seconds -= 86400;
  }
  const sys_days epoch = sys_days(year(1899) / December / 30);
  const year_month_day ymd(epoch + days(static_cast<std::int64_t>(whole)));
  char buf[32];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                        static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  out.append(buf, static_cast<std::size_t>(n));
  if (seconds != 0) {
    n = std::snprintf(buf, sizeof buf, "T%02d:%02d:%02d", static_cast<int>(seconds / 3600),
                      static_cast<int>(seconds / 60 % 60), static_cast<int>(seconds % 60));
    out.append(buf, static_cast<std::size_t>(n));
  }
}

// ---------------------------------------------------------------------------------------------

void SharedStrings::reserve(std::size_t count, std::size_t bytes) {
  offsets_.reserve(count + 1);
  if (bytes) bytes_.reserve(bytes);
}

void SharedStrings::add(std::string_view s) {
  bytes_.append(s);
  offsets_.push_back(bytes_.size());
}

// ---------------------------------------------------------------------------------------------

FrameWriter::FrameWriter(FrameBuilder& builder, std::uint32_t arena)
    : builder_(&builder), arena_(arena) {}

FrameWriter::~FrameWriter() {
  if (builder_ && !flushed_) {
    try {
      flush();
    } catch (...) {
    }
  }
}

void FrameWriter::on_cell(const CellEvent& cell) {
  FrameBuilder& b = *builder_;
  CellKind kind = CellKind::null;
  std::uint64_t bits = 0;
  const bool dated = cell.style < b.date_styles_.size() && b.date_styles_[cell.style];
  switch (cell.type) {
    case CellType::number:
      if (const auto* i = std::get_if<std::int64_t>(&cell.payload)) {
        if (dated) {
          kind = CellKind::date;
          bits = std::bit_cast<std::uint64_t>(static_cast<double>(*i));
        } else {
          kind = CellKind::integer;
          bits = static_cast<std::uint64_t>(*i);
        }
      } else {
        kind = dated ? CellKind::date : CellKind::real;
        bits = std::bit_cast<std::uint64_t>(std::get<double>(cell.payload));
      }
      break;
    case CellType::shared_string: {
      const auto index = std::get<SstIndex>(cell.payload).value;
      kind = CellKind::shared;
      bits = index;
      if (static_cast<std::int64_t>(index) > max_shared_index_) max_shared_index_ = index;
      break;
    }
    case CellType::boolean:
      kind = CellKind::boolean;
      bits = std::get<bool>(cell.payload) ? 1 : 0;
      break;
    case CellType::error: kind = CellKind::error; break;
    case CellType::inline_string:
    case CellType::formula_string: {
      debug::FrameScope frame_scope;
      auto& strings = b.arenas_[arena_]->strings;
      bits = (std::uint64_t{arena_} << kArenaShift) | strings.size();
      strings.emplace_back(std::get<std::string_view>(cell.payload));
      kind = CellKind::text;
      break;
    }
  }
  ++cells_;
  if (cell.row > max_row_) max_row_ = cell.row;
  if (cell.col > max_col_) max_col_ = cell.col;
  if (b.preallocated_ && cell.row > b.capacity_rows_) {
    debug::FrameScope frame_scope;
    b.arenas_[arena_]->overflow.push_back({cell.row, cell.col, kind, bits});
    return;
  }
  b.set_cell(cell.row, cell.col, kind, bits);
}

void FrameWriter::flush() {
  flushed_ = true;
  FrameBuilder& b = *builder_;
  std::lock_guard lock(b.merge_mutex_);
  if (max_row_ > b.n_rows_) b.n_rows_ = max_row_;
  if (max_col_ > b.n_cols_) b.n_cols_ = max_col_;
  if (max_shared_index_ > b.max_shared_index_) b.max_shared_index_ = max_shared_index_;
  b.n_cells_ += cells_;
  max_row_ = max_col_ = 0;
  max_shared_index_ = -1;
  cells_ = 0;
}

// ---------------------------------------------------------------------------------------------

FrameBuilder::FrameBuilder()
    : columns_(std::make_unique<std::atomic<RawColumn*>[]>(kMaxColumnNumber)) {
  for (std::uint32_t i = 0; i < kMaxColumnNumber; ++i) columns_[i].store(nullptr);
}

FrameBuilder::~FrameBuilder() = default;

void FrameBuilder::preallocate(std::uint32_t rows, std::uint32_t cols) {
  cols = std::min(cols, kMaxColumnNumber);
  try {
    capacity_rows_ = rows;
    for (std::uint32_t c = 1; c <= cols; ++c) create_column(c);
  } catch (const std::bad_alloc&) {
    throw Error(ErrorKind::out_of_memory, "cannot pre-allocate " + std::to_string(rows) + "x" +
                                              std::to_string(cols) + " frame");
  }
  preallocated_ = true;
}

FrameWriter FrameBuilder::writer() {
  std::lock_guard lock(create_mutex_);
  debug::FrameScope frame_scope;
  arenas_.push_back(std::make_unique<Arena>());
  return FrameWriter(*this, static_cast<std::uint32_t>(arenas_.size() - 1));
}

FrameBuilder::RawColumn* FrameBuilder::column(std::uint32_t col) {
  RawColumn* c = columns_[col - 1].load(std::memory_order_acquire);
  return c ? c : create_column(col);
}

FrameBuilder::RawColumn* FrameBuilder::create_column(std::uint32_t col) {
  if (col == 0 || col > kMaxColumnNumber) throw Error(ErrorKind::overflow, "column out of range");
  std::lock_guard lock(create_mutex_);
  if (RawColumn* existing = columns_[col - 1].load(std::memory_order_acquire)) return existing;
  debug::FrameScope frame_scope;
  auto fresh = std::make_unique<RawColumn>();
  fresh->slots.resize(capacity_rows_);
  fresh->kinds.resize(capacity_rows_, CellKind::null);
  RawColumn* raw = fresh.get();
  owned_.push_back(std::move(fresh));
  columns_[col - 1].store(raw, std::memory_order_release);
  return raw;
}

void FrameBuilder::write_slot(RawColumn& c, std::uint32_t row, CellKind kind, std::uint64_t bits) {
  c.slots[row - 1] = bits;
  c.kinds[row - 1] = kind;
  note_kind(row == 1 ? c.head_mask : c.body_mask, kind);
}

void FrameBuilder::set_cell(std::uint32_t row, std::uint32_t col, CellKind kind,
                            std::uint64_t bits) {
  if (row == 0) throw Error(ErrorKind::malformed_ref, "row 0");
  if (preallocated_) {
    if (row > capacity_rows_) throw Error(ErrorKind::overflow, "row beyond pre-allocated frame");
    write_slot(*column(col), row, kind, bits);
    return;
  }
  while (true) {
    {
      std::shared_lock lock(grow_mutex_);
      if (row <= capacity_rows_) {
        write_slot(*column(col), row, kind, bits);
        return;
      }
    }
    grow_rows(row);
  }
}

void FrameBuilder::grow_rows(std::uint32_t rows) {
  std::unique_lock lock(grow_mutex_);
  if (rows <= capacity_rows_) return;
  debug::FrameScope frame_scope;
  const std::uint64_t doubled = std::uint64_t{capacity_rows_} * 2;
  const auto target = static_cast<std::uint32_t>(
      std::min<std::uint64_t>(kMaxRowNumber, std::max<std::uint64_t>({rows, doubled, kMinGrowth})));
  try {
    for (auto& c : owned_) {
      c->slots.resize(target);
      c->kinds.resize(target, CellKind::null);
    }
  } catch (const std::bad_alloc&) {
    throw Error(ErrorKind::out_of_memory, "cannot grow frame to " + std::to_string(target));
  }
  capacity_rows_ = target;
  ++growths_;
}

void FrameBuilder::apply_overflow() {
  std::uint32_t needed = 0;
  for (const auto& a : arenas_) {
    for (const auto& o : a->overflow) needed = std::max(needed, o.row);
  }
  if (needed == 0) return;
  const bool was_preallocated = preallocated_;
  preallocated_ = false;
  grow_rows(needed);
  for (auto& a : arenas_) {
    for (const auto& o : a->overflow) write_slot(*column(o.col), o.row, o.kind, o.bits);
    a->overflow.clear();
    a->overflow.shrink_to_fit();
  }
  preallocated_ = was_preallocated;
}

void FrameBuilder::resolve_shared_strings(std::shared_ptr<const SharedStrings> strings) {
  const std::size_t count = strings ? strings->size() : 0;
  if (max_shared_index_ >= 0 && static_cast<std::uint64_t>(max_shared_index_) >= count) {
    throw Error(ErrorKind::dangling_string_index,
                "index " + std::to_string(max_shared_index_) + " with " + std::to_string(count) +
                    " shared strings");
  }
  strings_ = std::move(strings);
}

std::string_view FrameBuilder::text(std::uint64_t handle) const {
  return arenas_[handle >> kArenaShift]->strings[handle & ((std::uint64_t{1} << kArenaShift) - 1)];
}

std::size_t FrameBuilder::allocated_bytes() const {
  std::size_t total = 0;
  for (const auto& c : owned_) {
    total += c->slots.capacity() * sizeof(std::uint64_t) + c->kinds.capacity();
  }
  for (const auto& a : arenas_) {
    total += a->strings.capacity() * sizeof(std::string);
    for (const auto& s : a->strings) {
      if (s.capacity() > 15) total += s.capacity() + 1;
    }
    total += a->overflow.capacity() * sizeof(Overflow);
  }
  return total;
}

// ---------------------------------------------------------------------------------------------

ColumnFrame finalize(FrameBuilder&& b, bool headers) {
  debug::FrameScope frame_scope;
  b.apply_overflow();
  if (b.max_shared_index_ >= 0 &&
      (!b.strings_ || static_cast<std::uint64_t>(b.max_shared_index_) >= b.strings_->size())) {
    throw Error(ErrorKind::dangling_string_index, "shared strings not resolved");
  }

  ColumnFrame frame;
  frame.has_header = headers;
  const std::uint32_t first = headers ? 2 : 1;
  const std::size_t n = b.n_rows_ >= first ? b.n_rows_ - first + 1 : 0;
  frame.n_rows = n;
  frame.columns.resize(b.n_cols_);

  std::string scratch;
  auto render = [&](CellKind kind, std::uint64_t bits, std::string& out) {
    switch (kind) {
      case CellKind::integer: append_integer(out, static_cast<std::int64_t>(bits)); break;
      case CellKind::real: append_double(out, std::bit_cast<double>(bits)); break;
      case CellKind::boolean: out.append(bits ? "TRUE" : "FALSE"); break;
      case CellKind::date: append_date(out, std::bit_cast<double>(bits)); break;
      case CellKind::shared: out.append(b.strings_->at(bits)); break;
      case CellKind::text: out.append(b.text(bits)); break;
      default: break;
    }
  };

  for (std::uint32_t ci = 0; ci < b.n_cols_; ++ci) {
    Column& col = frame.columns[ci];
    FrameBuilder::RawColumn* raw = b.columns_[ci].load(std::memory_order_acquire);
    col.size_ = n;
    col.validity_.assign((n + 63) / 64, 0);
    if (raw) {
      std::uint32_t mask = raw->body_mask.load();
      if (!headers) mask |= raw->head_mask.load();
      col.type = column_type_for(mask);
    }

    if (headers) {
      if (raw && raw->kinds.size() >= 1 && raw->kinds[0] != CellKind::null &&
          raw->kinds[0] != CellKind::error) {
        render(raw->kinds[0], raw->slots[0], col.name);
      } else {
        col.name = column_letters(ci + 1);
      }
    } else {
      col.name = column_letters(ci + 1);
    }

    switch (col.type) {
      case ColumnType::integer:
      case ColumnType::boolean: col.ints_.assign(n, 0); break;
      case ColumnType::real:
      case ColumnType::date: col.reals_.assign(n, 0.0); break;
      case ColumnType::string: col.offsets_.assign(n + 1, 0); break;
      case ColumnType::empty: break;
    }

    std::size_t valid = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t slot = i + first - 1;
      const CellKind kind =
          raw && slot < raw->kinds.size() ? raw->kinds[slot] : CellKind::null;
      const bool present = kind != CellKind::null && kind != CellKind::error;
      if (present) {
        col.validity_[i >> 6] |= std::uint64_t{1} << (i & 63);
        ++valid;
        const std::uint64_t bits = raw->slots[slot];
        switch (col.type) {
          case ColumnType::integer:
          case ColumnType::boolean: col.ints_[i] = static_cast<std::int64_t>(bits); break;
          case ColumnType::real:
            col.reals_[i] = kind == CellKind::integer
                                ? static_cast<double>(static_cast<std::int64_t>(bits))
                                : std::bit_cast<double>(bits);
            break;
          case ColumnType::date: col.reals_[i] = std::bit_cast<double>(bits); break;
          case ColumnType::string: render(kind, bits, col.bytes_); break;
          case ColumnType::empty: break;
        }
      }
      if (col.type == ColumnType::string) col.offsets_[i + 1] = col.bytes_.size();
    }
    col.nulls_ = n - valid;

    if (raw) {
      // Release raw storage column by column to keep the finalize peak near one column.
      b.columns_[ci].store(nullptr);
      raw->slots = {};
      raw->kinds = {};
    }
  }
  b.owned_.clear();
  b.arenas_.clear();
  return frame;
}

// ---------------------------------------------------------------------------------------------

void write_csv(const ColumnFrame& frame, std::ostream& out) {
  std::string buf;
  buf.reserve(1 << 20);
  auto flush = [&] {
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    buf.clear();
  };
  const std::size_t n_cols = frame.columns.size();
  if (frame.has_header && n_cols > 0) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (c) buf.push_back(',');
      append_csv_field(buf, frame.columns[c].name);
    }
    buf.push_back('\n');
  }
  for (std::size_t r = 0; r < frame.n_rows; ++r) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (c) buf.push_back(',');
      const Column& col = frame.columns[c];
      if (!col.valid(r)) continue;
      switch (col.type) {
        case ColumnType::integer: append_integer(buf, col.integer(r)); break;
        case ColumnType::boolean: buf.append(col.boolean(r) ? "TRUE" : "FALSE"); break;
        case ColumnType::real: append_double(buf, col.real(r)); break;
        case ColumnType::date: append_date(buf, col.real(r)); break;
        case ColumnType::string: append_csv_field(buf, col.string(r)); break;
        case ColumnType::empty: break;
      }
    }
    buf.push_back('\n');
    if (buf.size() > (1 << 20) - 4096) flush();
  }
  flush();
}

std::string to_csv(const ColumnFrame& frame) {
  std::ostringstream out;
  write_csv(frame, out);
  return std::move(out).str();
}

std::string summary(const ColumnFrame& frame) {
  std::string out = "rows=" + std::to_string(frame.n_rows) +
                    " cols=" + std::to_string(frame.columns.size()) + "\n";
  for (std::size_t c = 0; c < frame.columns.size(); ++c) {
    const Column& col = frame.columns[c];
    out += col.name;
    out += ' ';
    out += to_string(col.type);
    out += " nulls=" + std::to_string(col.null_count()) + "/" + std::to_string(frame.n_rows) +
           "\n";
  }
  return out;
}

}  // namespace sheetreader
