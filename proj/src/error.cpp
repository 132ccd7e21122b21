#include "sheetreader/error.hpp"

namespace sheetreader {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::not_a_zip: return "NotAZip";
    case ErrorKind::unsupported_compression: return "UnsupportedCompression";
    case ErrorKind::corrupt_directory: return "CorruptDirectory";
    case ErrorKind::no_such_entry: return "NoSuchEntry";
    case ErrorKind::inflate_error: return "InflateError";
    case ErrorKind::size_mismatch: return "SizeMismatch";
    case ErrorKind::crc_mismatch: return "CrcMismatch";
    case ErrorKind::stream_exhausted: return "StreamExhausted";
    case ErrorKind::missing_rels: return "MissingRels";
    case ErrorKind::malformed_rels: return "MalformedRels";
    case ErrorKind::malformed_workbook: return "MalformedWorkbook";
    case ErrorKind::no_such_sheet: return "NoSuchSheet";
    case ErrorKind::malformed_document: return "MalformedDocument";
    case ErrorKind::overflow: return "Overflow";
    case ErrorKind::malformed_ref: return "MalformedRef";
    case ErrorKind::malformed_number: return "MalformedNumber";
    case ErrorKind::no_anchor_found: return "NoAnchorFound";
    case ErrorKind::dangling_string_index: return "DanglingStringIndex";
    case ErrorKind::out_of_memory: return "OutOfMemory";
    case ErrorKind::index_mismatch: return "IndexMismatch";
    case ErrorKind::io: return "IoError";
  }
  return "Unknown";
}

}  // namespace sheetreader
