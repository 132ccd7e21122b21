#pragma once

// OPC relationship graph, workbook sheet list and the head-of-stream probes used for
// pre-allocation.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sheetreader/archive.hpp"

namespace sheetreader {

struct SheetInfo {
  std::string name;
  std::string relationship_id;
  std::string part_path;
};

struct WorkbookMeta {
  std::string workbook_path;
  std::vector<SheetInfo> sheets;
  std::optional<std::string> shared_strings_path;
  std::optional<std::uint64_t> shared_strings_unique_count;
  std::optional<std::string> styles_path;
};

struct SheetDimension {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  friend bool operator==(const SheetDimension&, const SheetDimension&) = default;
};

/// Relationship type (last segment of the type URI, e.g. "officeDocument") to archive path.
using RelationshipMap = std::map<std::string, std::string>;

/// Throws Error{missing_rels} or Error{malformed_rels}.
RelationshipMap read_root_relationships(const Archive& archive);

/// Throws Error{missing_rels} or Error{malformed_workbook}.
WorkbookMeta read_workbook(const Archive& archive, std::string_view workbook_path);

/// Root relationships + workbook + shared-strings count in one call.
WorkbookMeta read_metadata(const Archive& archive);

/// Resolves a relationship target against the directory of the part that owns the .rels file.
std::string resolve_part_path(std::string_view source_part, std::string_view target);

/// Parses a dimension ref such as "A1:CV600000". Single-cell refs yield nothing.
std::optional<SheetDimension> parse_dimension_ref(std::string_view ref);

/// Looks for <dimension ref=...> ahead of <sheetData> in a worksheet prefix.
std::optional<SheetDimension> find_dimension(std::string_view head);

/// Streams the worksheet head only.
std::optional<SheetDimension> probe_dimension(const Archive& archive, std::string_view sheet_path);

/// uniqueCount (preferred) or count of the <sst> root, read from the stream head.
std::optional<std::uint64_t> probe_sst_count(const Archive& archive, std::string_view sst_path);

/// One flag per cellXfs entry: true when the entry uses a built-in date format.
std::vector<bool> read_date_styles(const Archive& archive, std::string_view styles_path);
std::vector<bool> parse_date_styles(std::string_view styles_xml);

/// Exact name, then case-insensitive name, then 1-based index. Empty selects the first sheet.
/// Throws Error{no_such_sheet}.
const SheetInfo& select_sheet(const WorkbookMeta& meta, std::string_view selector);

// Minimal tag reader for the small package parts (rels, workbook, styles).
struct XmlTag {
  std::string_view name;  // local name
  std::string_view attributes;
  bool closing = false;
  bool self_closing = false;
};

class TagCursor {
 public:
  explicit TagCursor(std::string_view doc) : doc_(doc) {}
  /// Advances to the next element tag; comments and declarations are skipped.
  bool next(XmlTag& tag);
  /// True when the previous next() stopped because the document ended mid-tag.
  bool truncated() const noexcept { return truncated_; }
  std::size_t offset() const noexcept { return pos_; }

 private:
  std::string_view doc_;
  std::size_t pos_ = 0;
  bool truncated_ = false;
};

/// Value of the attribute with the given local name, entity-decoded.
std::optional<std::string> xml_attribute(std::string_view attributes, std::string_view local_name);

}  // namespace sheetreader
