#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sheetreader {

enum class ErrorKind {
  not_a_zip,
  unsupported_compression,
  corrupt_directory,
  no_such_entry,
  inflate_error,
  size_mismatch,
  crc_mismatch,
  stream_exhausted,
  missing_rels,
  malformed_rels,
  malformed_workbook,
  no_such_sheet,
  malformed_document,
  overflow,
  malformed_ref,
  malformed_number,
  no_anchor_found,
  dangling_string_index,
  out_of_memory,
  index_mismatch,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sheetreader
