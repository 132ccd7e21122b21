#include "sheetreader/archive.hpp"

#include <fcntl.h>
#include <libdeflate.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <limits>

#include "sheetreader/error.hpp"

namespace sheetreader {

ByteBuffer::ByteBuffer(std::size_t size) : data_(size ? new char[size] : nullptr), size_(size) {}

namespace {

class FileSource final : public ByteSource {
 public:
  explicit FileSource(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd_ < 0) {
      throw Error(ErrorKind::io, "cannot open " + path.string() + ": " + std::strerror(errno));
    }
    struct stat st {};
    if (::fstat(fd_, &st) != 0) {
      ::close(fd_);
      throw Error(ErrorKind::io, "cannot stat " + path.string());
    }
    size_ = static_cast<std::uint64_t>(st.st_size);
  }
  ~FileSource() override { ::close(fd_); }
  FileSource(const FileSource&) = delete;
  FileSource& operator=(const FileSource&) = delete;

  std::uint64_t size() const override { return size_; }

  void read(std::uint64_t offset, std::span<char> dest) const override {
    if (offset > size_ || dest.size() > size_ - offset) {
      throw Error(ErrorKind::io, "read beyond end of file");
    }
    std::size_t done = 0;
    while (done < dest.size()) {
      const ssize_t n = ::pread(fd_, dest.data() + done, dest.size() - done,
                                static_cast<off_t>(offset + done));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw Error(ErrorKind::io, std::string("pread failed: ") + std::strerror(errno));
      done += static_cast<std::size_t>(n);
    }
  }

 private:
  int fd_ = -1;
  std::uint64_t size_ = 0;
};

class MemorySource final : public ByteSource {
 public:
  explicit MemorySource(std::vector<char> bytes) : bytes_(std::move(bytes)) {}
  std::uint64_t size() const override { return bytes_.size(); }
  void read(std::uint64_t offset, std::span<char> dest) const override {
    if (offset > bytes_.size() || dest.size() > bytes_.size() - offset) {
      throw Error(ErrorKind::io, "read beyond end of buffer");
    }
    std::memcpy(dest.data(), bytes_.data() + offset, dest.size());
  }

 private:
  std::vector<char> bytes_;
};

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEocdSig = 0x06054b50;
constexpr std::uint32_t kZip64LocatorSig = 0x07064b50;
constexpr std::uint32_t kZip64EocdSig = 0x06064b50;
constexpr std::size_t kEocdSize = 22;
constexpr std::size_t kMaxComment = 0xFFFF;

std::uint16_t le16(const char* p) {
  const auto* u = reinterpret_cast<const unsigned char*>(p);
  return static_cast<std::uint16_t>(u[0] | (u[1] << 8));
}
std::uint32_t le32(const char* p) {
  const auto* u = reinterpret_cast<const unsigned char*>(p);
  return static_cast<std::uint32_t>(u[0]) | (static_cast<std::uint32_t>(u[1]) << 8) |
         (static_cast<std::uint32_t>(u[2]) << 16) | (static_cast<std::uint32_t>(u[3]) << 24);
}
std::uint64_t le64(const char* p) {
  return static_cast<std::uint64_t>(le32(p)) | (static_cast<std::uint64_t>(le32(p + 4)) << 32);
}

struct DirectoryLocation {
  std::uint64_t entries = 0;
  std::uint64_t size = 0;
  std::uint64_t offset = 0;
};

DirectoryLocation locate_directory(const ByteSource& src) {
  const std::uint64_t file_size = src.size();
  if (file_size < kEocdSize) throw Error(ErrorKind::not_a_zip, "file too small");
  const std::uint64_t window = std::min<std::uint64_t>(file_size, kEocdSize + kMaxComment);
  std::vector<char> tail(window);
  src.read(file_size - window, tail);

  std::int64_t found = -1;
  for (std::int64_t i = static_cast<std::int64_t>(window - kEocdSize); i >= 0; --i) {
    if (le32(tail.data() + i) == kEocdSig) {
      found = i;
      break;
    }
  }
  if (found < 0) throw Error(ErrorKind::not_a_zip, "no end-of-central-directory record");

  const char* eocd = tail.data() + found;
  DirectoryLocation loc;
  loc.entries = le16(eocd + 10);
  loc.size = le32(eocd + 12);
  loc.offset = le32(eocd + 16);
  const std::uint64_t eocd_pos = file_size - window + static_cast<std::uint64_t>(found);

  const bool needs_zip64 =
      loc.entries == 0xFFFF || loc.size == 0xFFFFFFFF || loc.offset == 0xFFFFFFFF;
  if (eocd_pos >= 20) {
    char locator[20];
    src.read(eocd_pos - 20, locator);
    if (le32(locator) == kZip64LocatorSig) {
      const std::uint64_t eocd64_pos = le64(locator + 8);
      char rec[56];
      if (eocd64_pos > file_size || file_size - eocd64_pos < sizeof(rec)) {
        throw Error(ErrorKind::corrupt_directory, "ZIP64 record out of bounds");
      }
      src.read(eocd64_pos, rec);
      if (le32(rec) != kZip64EocdSig) {
        throw Error(ErrorKind::corrupt_directory, "bad ZIP64 end-of-central-directory");
      }
      loc.entries = le64(rec + 32);
      loc.size = le64(rec + 40);
      loc.offset = le64(rec + 48);
    } else if (needs_zip64) {
      throw Error(ErrorKind::corrupt_directory, "ZIP64 markers without ZIP64 locator");
    }
  }
  if (loc.offset > file_size || loc.size > file_size - loc.offset) {
    throw Error(ErrorKind::corrupt_directory, "central directory out of bounds");
  }
  return loc;
}

std::string normalize_name(std::string name) {
  std::replace(name.begin(), name.end(), '\\', '/');
  while (!name.empty() && name.front() == '/') name.erase(name.begin());
  return name;
}

}  // namespace

std::shared_ptr<const ByteSource> ByteSource::open_file(const std::filesystem::path& path) {
  return std::make_shared<FileSource>(path);
}

std::shared_ptr<const ByteSource> ByteSource::from_memory(std::vector<char> bytes) {
  return std::make_shared<MemorySource>(std::move(bytes));
}

Archive Archive::open(const std::filesystem::path& path) {
  return open(ByteSource::open_file(path));
}

Archive Archive::open(std::shared_ptr<const ByteSource> source) {
  Archive archive;
  archive.source_ = std::move(source);
  const ByteSource& src = *archive.source_;
  const std::uint64_t file_size = src.size();
  const DirectoryLocation loc = locate_directory(src);

  std::vector<char> dir(static_cast<std::size_t>(loc.size));
  src.read(loc.offset, dir);

  std::size_t pos = 0;
  archive.entries_.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(loc.entries, 1 << 20)));
  for (std::uint64_t i = 0; i < loc.entries; ++i) {
    if (dir.size() - pos < 46 || le32(dir.data() + pos) != kCentralHeaderSig) {
      throw Error(ErrorKind::corrupt_directory, "bad central directory header");
    }
    const char* h = dir.data() + pos;
    const std::uint16_t flags = le16(h + 8);
    const std::uint16_t method = le16(h + 10);
    const std::size_t name_len = le16(h + 28);
    const std::size_t extra_len = le16(h + 30);
    const std::size_t comment_len = le16(h + 32);
    if (dir.size() - pos < 46 + name_len + extra_len + comment_len) {
      throw Error(ErrorKind::corrupt_directory, "truncated central directory header");
    }

    ArchiveEntry e;
    e.name = normalize_name(std::string(h + 46, name_len));
    e.crc32 = le32(h + 16);
    e.compressed_size = le32(h + 20);
    e.uncompressed_size = le32(h + 24);
    e.local_header_offset = le32(h + 42);

    // ZIP64 extended information: only the saturated fields are present, in this order.
    const char* extra = h + 46 + name_len;
    for (std::size_t x = 0; x + 4 <= extra_len;) {
      const std::uint16_t tag = le16(extra + x);
      const std::uint16_t len = le16(extra + x + 2);
      if (x + 4 + len > extra_len) break;
      if (tag == 0x0001) {
        const char* f = extra + x + 4;
        std::size_t used = 0;
        auto take = [&](std::uint64_t& field) {
          if (field != 0xFFFFFFFF) return;
          if (used + 8 > len) throw Error(ErrorKind::corrupt_directory, "short ZIP64 extra field");
          field = le64(f + used);
          used += 8;
        };
        take(e.uncompressed_size);
        take(e.compressed_size);
        take(e.local_header_offset);
      }
      x += 4 + len;
    }

    if (flags & 0x1) {
      throw Error(ErrorKind::unsupported_compression, "encrypted entry " + e.name);
    }
    if (method == 0) {
      e.method = CompressionMethod::stored;
      if (e.compressed_size != e.uncompressed_size) {
        throw Error(ErrorKind::corrupt_directory, "stored entry with differing sizes: " + e.name);
      }
    } else {
      // Other methods are rejected only when the entry is read.
      e.method = static_cast<CompressionMethod>(method);
    }

    char local[30];
    if (e.local_header_offset > file_size || file_size - e.local_header_offset < sizeof(local)) {
      throw Error(ErrorKind::corrupt_directory, "local header out of bounds: " + e.name);
    }
    src.read(e.local_header_offset, local);
    if (le32(local) != kLocalHeaderSig) {
      throw Error(ErrorKind::corrupt_directory, "bad local header: " + e.name);
    }
    e.payload_offset = e.local_header_offset + 30 + le16(local + 26) + le16(local + 28);
    if (e.payload_offset > file_size || e.compressed_size > file_size - e.payload_offset) {
      throw Error(ErrorKind::corrupt_directory, "payload out of bounds: " + e.name);
    }

    if (!archive.index_.emplace(e.name, archive.entries_.size()).second) {
      throw Error(ErrorKind::corrupt_directory, "duplicate entry " + e.name);
    }
    archive.entries_.push_back(std::move(e));
    pos += 46 + name_len + extra_len + comment_len;
  }
  return archive;
}

const ArchiveEntry* Archive::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const ArchiveEntry& Archive::entry(std::string_view name) const {
  if (const ArchiveEntry* e = find(name)) return *e;
  throw Error(ErrorKind::no_such_entry, std::string(name));
}

namespace {

const ArchiveEntry& readable_entry(const Archive& archive, std::string_view name) {
  const ArchiveEntry& e = archive.entry(name);
  if (e.method != CompressionMethod::stored && e.method != CompressionMethod::deflate) {
    throw Error(ErrorKind::unsupported_compression,
                "method " + std::to_string(static_cast<unsigned>(e.method)) + " for " + e.name);
  }
  return e;
}

}  // namespace

ByteBuffer read_entry_full(const Archive& archive, std::string_view name, ReadOptions options) {
  const ArchiveEntry& e = readable_entry(archive, name);
  if (e.uncompressed_size > std::numeric_limits<std::size_t>::max() / 2) {
    throw Error(ErrorKind::out_of_memory, "entry too large: " + e.name);
  }

  ByteBuffer out;
  try {
    out = ByteBuffer(static_cast<std::size_t>(e.uncompressed_size));
    if (e.method == CompressionMethod::stored) {
      archive.source().read(e.payload_offset, out.span());
    } else {
      ByteBuffer compressed(static_cast<std::size_t>(e.compressed_size));
      archive.source().read(e.payload_offset, compressed.span());
      libdeflate_decompressor* d = libdeflate_alloc_decompressor();
      if (!d) throw std::bad_alloc();
      std::size_t actual = 0;
      const libdeflate_result r = libdeflate_deflate_decompress(
          d, compressed.data(), compressed.size(), out.data(), out.size(), &actual);
      libdeflate_free_decompressor(d);
      if (r == LIBDEFLATE_INSUFFICIENT_SPACE) {
        throw Error(ErrorKind::size_mismatch, e.name + " inflates beyond its declared size");
      }
      if (r != LIBDEFLATE_SUCCESS) throw Error(ErrorKind::inflate_error, e.name);
      if (actual != out.size()) {
        throw Error(ErrorKind::size_mismatch, e.name + " inflates short of its declared size");
      }
    }
  } catch (const std::bad_alloc&) {
    throw Error(ErrorKind::out_of_memory,
                "cannot hold " + std::to_string(e.compressed_size + e.uncompressed_size) +
                    " bytes for " + e.name);
  }

  if (options.verify_crc) {
    const auto crc = static_cast<std::uint32_t>(
        ::crc32_z(0, reinterpret_cast<const Bytef*>(out.data()), out.size()));
    if (crc != e.crc32) throw Error(ErrorKind::crc_mismatch, e.name);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// EntryStream

struct EntryStream::Inflater {
  z_stream z{};
  bool initialized = false;
  ~Inflater() {
    if (initialized) inflateEnd(&z);
  }
};

namespace {
constexpr std::size_t kInputChunk = 64 * 1024;
}

EntryStream::EntryStream(std::shared_ptr<const ByteSource> source, ArchiveEntry entry,
                         std::uint64_t compressed_offset, std::uint64_t uncompressed_offset,
                         bool verify)
    : source_(std::move(source)),
      entry_(std::move(entry)),
      read_offset_(compressed_offset),
      produced_(uncompressed_offset),
      verify_(verify) {
  if (entry_.method == CompressionMethod::deflate) {
    inflater_ = std::make_unique<Inflater>();
    if (inflateInit2(&inflater_->z, -MAX_WBITS) != Z_OK) {
      throw Error(ErrorKind::inflate_error, "inflateInit2 failed");
    }
    inflater_->initialized = true;
    input_.resize(kInputChunk);
  }
}

EntryStream::EntryStream(EntryStream&&) noexcept = default;
EntryStream& EntryStream::operator=(EntryStream&&) noexcept = default;
EntryStream::~EntryStream() = default;

std::size_t EntryStream::refill() {
  const std::uint64_t left = entry_.compressed_size - read_offset_;
  const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(left, input_.size()));
  if (n == 0) return 0;
  source_->read(entry_.payload_offset + read_offset_, std::span<char>(input_.data(), n));
  read_offset_ += n;
  inflater_->z.next_in = reinterpret_cast<Bytef*>(input_.data());
  inflater_->z.avail_in = static_cast<uInt>(n);
  return n;
}

StreamChunk EntryStream::next(std::span<char> dest) {
  if (finished()) throw Error(ErrorKind::stream_exhausted, entry_.name);
  if (dest.empty()) return {0, false};

  const std::uint64_t remaining = entry_.uncompressed_size - produced_;
  const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(dest.size(), remaining));

  if (entry_.method == CompressionMethod::stored) {
    source_->read(entry_.payload_offset + produced_, dest.first(want));
  } else {
    z_stream& z = inflater_->z;
    z.next_out = reinterpret_cast<Bytef*>(dest.data());
    z.avail_out = static_cast<uInt>(want);
    while (z.avail_out > 0) {
      if (z.avail_in == 0 && refill() == 0) {
        throw Error(ErrorKind::inflate_error, entry_.name + ": compressed data ends early");
      }
      const int rc = inflate(&z, Z_NO_FLUSH);
      if (rc == Z_STREAM_END) {
        if (z.avail_out > 0) {
          throw Error(ErrorKind::size_mismatch, entry_.name + ": stream ends before declared size");
        }
        break;
      }
      if (rc != Z_OK && rc != Z_BUF_ERROR) {
        throw Error(ErrorKind::inflate_error, entry_.name + ": " + (z.msg ? z.msg : "corrupt"));
      }
      if (rc == Z_BUF_ERROR && z.avail_in > 0) {
        throw Error(ErrorKind::inflate_error, entry_.name + ": no progress");
      }
    }
  }

  produced_ += want;
  if (verify_) {
    crc_ = static_cast<std::uint32_t>(
        ::crc32_z(crc_, reinterpret_cast<const Bytef*>(dest.data()), want));
    if (finished() && crc_ != entry_.crc32) throw Error(ErrorKind::crc_mismatch, entry_.name);
  }
  return {want, finished()};
}

EntryStream open_entry_stream(const Archive& archive, std::string_view name, ReadOptions options) {
  const ArchiveEntry& e = readable_entry(archive, name);
  return EntryStream(archive.source_ptr(), e, 0, 0, options.verify_crc);
}

EntryStream open_entry_stream_at(const Archive& archive, std::string_view name,
                                 std::uint64_t compressed_offset,
                                 std::uint64_t uncompressed_offset) {
  const ArchiveEntry& e = readable_entry(archive, name);
  if (compressed_offset > e.compressed_size || uncompressed_offset > e.uncompressed_size) {
    throw Error(ErrorKind::index_mismatch, "boundary outside entry " + e.name);
  }
  if (e.method == CompressionMethod::stored && compressed_offset != uncompressed_offset) {
    throw Error(ErrorKind::index_mismatch, "stored entry offsets must coincide");
  }
  return EntryStream(archive.source_ptr(), e, compressed_offset, uncompressed_offset, false);
}

}  // namespace sheetreader
