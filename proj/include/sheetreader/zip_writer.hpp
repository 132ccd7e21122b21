#pragma once

// Streaming ZIP writer used by the generator and the repacker.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sheetreader/archive.hpp"

namespace sheetreader {

class ZipWriter {
 public:
  struct Options {
    int level = 6;           // zlib compression level
    bool force_zip64 = false;  // ZIP64 records even when classic fields suffice
  };

  ZipWriter(const std::filesystem::path& path, Options options);
  explicit ZipWriter(const std::filesystem::path& path) : ZipWriter(path, Options{}) {}
  ~ZipWriter();
  ZipWriter(const ZipWriter&) = delete;
  ZipWriter& operator=(const ZipWriter&) = delete;

  void add(std::string_view name, std::string_view data,
           CompressionMethod method = CompressionMethod::deflate);

  /// Streams one entry. write() may be called any number of times before end_entry().
  void begin_entry(std::string_view name, CompressionMethod method = CompressionMethod::deflate);
  void write(std::string_view data);
  /// Ends a byte-aligned Deflate block and empties the history window. Returns the
  /// (compressed, uncompressed) offsets of the boundary, relative to the payload start.
  std::pair<std::uint64_t, std::uint64_t> reset_point();
  void end_entry();

  /// Copies an entry's compressed payload verbatim from another archive.
  void copy_raw(const Archive& from, const ArchiveEntry& entry);

  void close();

 private:
  struct Deflater;
  struct Record {
    std::string name;
    CompressionMethod method;
    std::uint32_t crc;
    std::uint64_t compressed;
    std::uint64_t uncompressed;
    std::uint64_t offset;
    bool zip64;
  };

  void put(const void* data, std::size_t n);
  void write_local_header(const Record& r);
  void drain(int flush);

  std::FILE* file_ = nullptr;
  Options options_;
  std::uint64_t pos_ = 0;
  std::vector<Record> records_;
  std::unique_ptr<Deflater> deflater_;
  bool in_entry_ = false;
  Record current_{};
  std::vector<char> out_buffer_;
  bool closed_ = false;
};

}  // namespace sheetreader
