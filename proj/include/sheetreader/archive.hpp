#pragma once

// Read-only access to ZIP / OPC containers.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sheetreader {

/// Owned, uninitialized byte storage. Allocation does not touch the pages.
class ByteBuffer {
 public:
  ByteBuffer() = default;
  explicit ByteBuffer(std::size_t size);

  char* data() noexcept { return data_.get(); }
  const char* data() const noexcept { return data_.get(); }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  std::string_view view() const noexcept { return {data_.get(), size_}; }
  std::span<char> span() noexcept { return {data_.get(), size_}; }
  void reset() noexcept {
    data_.reset();
    size_ = 0;
  }

 private:
  std::unique_ptr<char[]> data_;
  std::size_t size_ = 0;
};

/// Random-access readable bytes. Implementations must tolerate concurrent read() calls.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual std::uint64_t size() const = 0;
  /// Fills dest with bytes [offset, offset + dest.size()); throws Error{io} when out of range.
  virtual void read(std::uint64_t offset, std::span<char> dest) const = 0;

  static std::shared_ptr<const ByteSource> open_file(const std::filesystem::path& path);
  static std::shared_ptr<const ByteSource> from_memory(std::vector<char> bytes);
};

enum class CompressionMethod : std::uint16_t { stored = 0, deflate = 8 };

struct ArchiveEntry {
  std::string name;
  CompressionMethod method = CompressionMethod::stored;
  std::uint64_t compressed_size = 0;
  std::uint64_t uncompressed_size = 0;
  std::uint64_t payload_offset = 0;
  std::uint64_t local_header_offset = 0;
  std::uint32_t crc32 = 0;
};

class Archive {
 public:
  static Archive open(const std::filesystem::path& path);
  static Archive open(std::shared_ptr<const ByteSource> source);

  const std::vector<ArchiveEntry>& entries() const noexcept { return entries_; }
  const ArchiveEntry* find(std::string_view name) const;
  /// Throws Error{no_such_entry}.
  const ArchiveEntry& entry(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  const ByteSource& source() const noexcept { return *source_; }
  const std::shared_ptr<const ByteSource>& source_ptr() const noexcept { return source_; }

 private:
  std::shared_ptr<const ByteSource> source_;
  std::vector<ArchiveEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ReadOptions {
  bool verify_crc = false;
};

/// Decompresses a whole entry into memory. The compressed payload is staged in its own buffer
/// and released before returning, so peak usage is compressed + uncompressed size.
ByteBuffer read_entry_full(const Archive& archive, std::string_view name, ReadOptions options = {});

struct StreamChunk {
  std::size_t bytes_written = 0;
  bool finished = false;
};

/// Incremental decompression of one entry in caller-sized steps.
class EntryStream {
 public:
  EntryStream(EntryStream&&) noexcept;
  EntryStream& operator=(EntryStream&&) noexcept;
  ~EntryStream();

  /// Writes min(dest.size(), remaining) bytes. Every call but the last fills dest completely.
  StreamChunk next(std::span<char> dest);

  const ArchiveEntry& entry() const noexcept { return entry_; }
  std::uint64_t produced() const noexcept { return produced_; }
  bool finished() const noexcept { return produced_ == entry_.uncompressed_size; }

 private:
  friend EntryStream open_entry_stream(const Archive&, std::string_view, ReadOptions);
  friend EntryStream open_entry_stream_at(const Archive&, std::string_view, std::uint64_t,
                                          std::uint64_t);
  struct Inflater;

  EntryStream(std::shared_ptr<const ByteSource> source, ArchiveEntry entry,
              std::uint64_t compressed_offset, std::uint64_t uncompressed_offset, bool verify);
  std::size_t refill();

  std::shared_ptr<const ByteSource> source_;
  ArchiveEntry entry_;
  std::uint64_t read_offset_ = 0;  // relative to payload start
  std::uint64_t produced_ = 0;
  bool verify_ = false;
  std::uint32_t crc_ = 0;
  std::unique_ptr<Inflater> inflater_;
  std::vector<char> input_;
};

EntryStream open_entry_stream(const Archive& archive, std::string_view name,
                              ReadOptions options = {});

/// Starts inflating a Deflate entry at a byte-aligned block boundary with empty history.
/// `compressed_offset` is relative to the payload start; `uncompressed_offset` is the logical
/// position of the first produced byte.
EntryStream open_entry_stream_at(const Archive& archive, std::string_view name,
                                 std::uint64_t compressed_offset,
                                 std::uint64_t uncompressed_offset);

}  // namespace sheetreader
