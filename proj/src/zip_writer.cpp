#include "sheetreader/zip_writer.hpp"

#include <zlib.h>

#include <array>
#include <cstring>

#include "sheetreader/error.hpp"

namespace sheetreader {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint32_t kEnd64Sig = 0x06064b50;
constexpr std::uint32_t kLocator64Sig = 0x07064b50;
constexpr std::uint16_t kUtf8Flag = 0x0800;
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01
constexpr std::uint32_t kMax32 = 0xFFFFFFFFu;
constexpr std::size_t kOutChunk = 256 * 1024;

class Bytes {
 public:
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void str(std::string_view s) { buf_.append(s); }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

}  // namespace

struct ZipWriter::Deflater {
  z_stream z{};
  bool active = false;
  ~Deflater() {
    if (active) deflateEnd(&z);
  }
};

ZipWriter::ZipWriter(const std::filesystem::path& path, Options options)
    : options_(options), deflater_(std::make_unique<Deflater>()), out_buffer_(kOutChunk) {
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_) throw Error(ErrorKind::io, "cannot create " + path.string());
}

ZipWriter::~ZipWriter() {
  if (!closed_) {
    try {
      close();
    } catch (...) {
    }
  }
}

void ZipWriter::put(const void* data, std::size_t n) {
  if (n && std::fwrite(data, 1, n, file_) != n) throw Error(ErrorKind::io, "write failed");
  pos_ += n;
}

void ZipWriter::write_local_header(const Record& r) {
  Bytes b;
  b.u32(kLocalSig);
  b.u16(r.zip64 ? 45 : 20);
  b.u16(kUtf8Flag);
  b.u16(static_cast<std::uint16_t>(r.method));
  b.u16(kDosTime);
  b.u16(kDosDate);
  b.u32(r.crc);
  b.u32(r.zip64 ? kMax32 : static_cast<std::uint32_t>(r.compressed));
  b.u32(r.zip64 ? kMax32 : static_cast<std::uint32_t>(r.uncompressed));
  b.u16(static_cast<std::uint16_t>(r.name.size()));
  b.u16(r.zip64 ? 20 : 0);
  b.str(r.name);
  if (r.zip64) {
    b.u16(0x0001);
    b.u16(16);
    b.u64(r.uncompressed);
    b.u64(r.compressed);
  }
  put(b.data().data(), b.data().size());
}

void ZipWriter::begin_entry(std::string_view name, CompressionMethod method) {
  if (in_entry_) throw std::logic_error("entry already open");
  current_ = Record{std::string(name), method, 0, 0, 0, pos_, options_.force_zip64};
  write_local_header(current_);
  current_.crc = static_cast<std::uint32_t>(crc32_z(0, nullptr, 0));
  if (method == CompressionMethod::deflate) {
    deflater_->z = z_stream{};
    if (deflateInit2(&deflater_->z, options_.level, Z_DEFLATED, -MAX_WBITS, 8,
                     Z_DEFAULT_STRATEGY) != Z_OK)
      throw Error(ErrorKind::io, "deflateInit2 failed");
    deflater_->active = true;
  }
  in_entry_ = true;
}

void ZipWriter::drain(int flush) {
  z_stream& z = deflater_->z;
  while (true) {
    z.next_out = reinterpret_cast<Bytef*>(out_buffer_.data());
    z.avail_out = static_cast<uInt>(out_buffer_.size());
    const int rc = deflate(&z, flush);
    if (rc == Z_STREAM_ERROR) throw Error(ErrorKind::io, "deflate failed");
    const std::size_t produced = out_buffer_.size() - z.avail_out;
    put(out_buffer_.data(), produced);
    current_.compressed += produced;
    if (flush == Z_FINISH) {
      if (rc == Z_STREAM_END) return;
    } else if (z.avail_in == 0 && z.avail_out != 0) {
      return;
    }
  }
}

void ZipWriter::write(std::string_view data) {
  if (!in_entry_) throw std::logic_error("no open entry");
  current_.crc = static_cast<std::uint32_t>(
      crc32_z(current_.crc, reinterpret_cast<const Bytef*>(data.data()), data.size()));
  current_.uncompressed += data.size();
  if (current_.method == CompressionMethod::stored) {
    put(data.data(), data.size());
    current_.compressed += data.size();
    return;
  }
  z_stream& z = deflater_->z;
  while (!data.empty()) {
    const std::size_t n = std::min<std::size_t>(data.size(), 1u << 30);
    z.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    z.avail_in = static_cast<uInt>(n);
    drain(Z_NO_FLUSH);
    data.remove_prefix(n);
  }
}

std::pair<std::uint64_t, std::uint64_t> ZipWriter::reset_point() {
  if (!in_entry_ || current_.method != CompressionMethod::deflate)
    throw std::logic_error("reset_point needs an open deflate entry");
  deflater_->z.avail_in = 0;
  drain(Z_FULL_FLUSH);
  return {current_.compressed, current_.uncompressed};
}

void ZipWriter::end_entry() {
  if (!in_entry_) throw std::logic_error("no open entry");
  if (current_.method == CompressionMethod::deflate) {
    deflater_->z.avail_in = 0;
    drain(Z_FINISH);
    deflateEnd(&deflater_->z);
    deflater_->active = false;
  }
  in_entry_ = false;
  if (!current_.zip64 && (current_.compressed >= kMax32 || current_.uncompressed >= kMax32))
    throw Error(ErrorKind::io, "entry too large without ZIP64");
  std::fflush(file_);
  // Patch the sizes into the local header.
  const auto end = pos_;
  if (fseeko(file_, static_cast<off_t>(current_.offset), SEEK_SET) != 0)
    throw Error(ErrorKind::io, "seek failed");
  pos_ = current_.offset;
  write_local_header(current_);
  if (fseeko(file_, static_cast<off_t>(end), SEEK_SET) != 0)
    throw Error(ErrorKind::io, "seek failed");
  pos_ = end;
  records_.push_back(current_);
}

void ZipWriter::add(std::string_view name, std::string_view data, CompressionMethod method) {
  begin_entry(name, method);
  write(data);
  end_entry();
}

void ZipWriter::copy_raw(const Archive& from, const ArchiveEntry& entry) {
  if (in_entry_) throw std::logic_error("entry already open");
  Record r{entry.name, entry.method, entry.crc32, entry.compressed_size, entry.uncompressed_size,
           pos_, options_.force_zip64 || entry.compressed_size >= kMax32 ||
                     entry.uncompressed_size >= kMax32};
  write_local_header(r);
  std::vector<char> buf(1 << 20);
  std::uint64_t done = 0;
  while (done < entry.compressed_size) {
    const auto n = static_cast<std::size_t>(
        std::min<std::uint64_t>(buf.size(), entry.compressed_size - done));
    from.source().read(entry.payload_offset + done, std::span<char>(buf.data(), n));
    put(buf.data(), n);
    done += n;
  }
  records_.push_back(std::move(r));
}

void ZipWriter::close() {
  if (closed_) return;
  if (in_entry_) end_entry();
  closed_ = true;
  const std::uint64_t cd_offset = pos_;
  bool need64 = options_.force_zip64 || records_.size() >= 0xFFFF;
  for (const auto& r : records_) {
    const bool z64 = r.zip64 || r.offset >= kMax32;
    need64 = need64 || z64;
    Bytes b;
    b.u32(kCentralSig);
    b.u16(z64 ? 45 : 20);
    b.u16(z64 ? 45 : 20);
    b.u16(kUtf8Flag);
    b.u16(static_cast<std::uint16_t>(r.method));
    b.u16(kDosTime);
    b.u16(kDosDate);
    b.u32(r.crc);
    b.u32(z64 ? kMax32 : static_cast<std::uint32_t>(r.compressed));
    b.u32(z64 ? kMax32 : static_cast<std::uint32_t>(r.uncompressed));
    b.u16(static_cast<std::uint16_t>(r.name.size()));
    b.u16(z64 ? 28 : 0);
    b.u16(0);
    b.u16(0);
    b.u16(0);
    b.u32(0);
    b.u32(z64 ? kMax32 : static_cast<std::uint32_t>(r.offset));
    b.str(r.name);
    if (z64) {
      b.u16(0x0001);
      b.u16(24);
      b.u64(r.uncompressed);
      b.u64(r.compressed);
      b.u64(r.offset);
    }
    put(b.data().data(), b.data().size());
  }
  const std::uint64_t cd_size = pos_ - cd_offset;
  need64 = need64 || cd_offset >= kMax32;
  Bytes b;
  if (need64) {
    const std::uint64_t eocd64 = pos_;
    b.u32(kEnd64Sig);
    b.u64(44);
    b.u16(45);
    b.u16(45);
    b.u32(0);
    b.u32(0);
    b.u64(records_.size());
    b.u64(records_.size());
    b.u64(cd_size);
    b.u64(cd_offset);
    b.u32(kLocator64Sig);
    b.u32(0);
    b.u64(eocd64);
    b.u32(1);
  }
  b.u32(kEndSig);
  b.u16(0);
  b.u16(0);
  const auto count16 = need64 ? std::uint16_t{0xFFFF} : static_cast<std::uint16_t>(records_.size());
  b.u16(count16);
  b.u16(count16);
  b.u32(need64 ? kMax32 : static_cast<std::uint32_t>(cd_size));
  b.u32(need64 ? kMax32 : static_cast<std::uint32_t>(cd_offset));
  b.u16(0);
  put(b.data().data(), b.data().size());
  if (std::fclose(file_) != 0) {
    file_ = nullptr;
    throw Error(ErrorKind::io, "close failed");
  }
  file_ = nullptr;
}

}  // namespace sheetreader
