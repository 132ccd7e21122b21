#pragma once

#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include "sheetreader/engine.hpp"

namespace sheetreader::detail {

struct SheetContext {
  WorkbookMeta meta;
  SheetInfo sheet;
  std::vector<bool> date_styles;
};

SheetContext open_sheet_context(const Archive& archive, std::string_view selector);

/// Shared-strings parsing: its own thread when parallel, otherwise deferred to take().
class StringsTask {
 public:
  StringsTask(const Archive& archive, const WorkbookMeta& meta, const EngineOptions& options);
  ~StringsTask();
  StringsTask(const StringsTask&) = delete;
  StringsTask& operator=(const StringsTask&) = delete;

  std::shared_ptr<SharedStrings> take();

 private:
  void run();

  const Archive& archive_;
  std::optional<std::string> path_;
  std::optional<std::uint64_t> count_;
  PhaseLog* phases_;
  std::thread thread_;
  std::shared_ptr<SharedStrings> result_;
  std::exception_ptr error_;
};

/// Keeps the first exception raised by any worker.
class ErrorSlot {
 public:
  void capture() {
    std::lock_guard lock(mutex_);
    if (!error_) error_ = std::current_exception();
  }
  bool failed() const {
    std::lock_guard lock(mutex_);
    return error_ != nullptr;
  }
  void rethrow() {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  mutable std::mutex mutex_;
  std::exception_ptr error_;
};

/// Joins strings, resolves them and finalizes the frame.
ColumnFrame complete_frame(FrameBuilder& builder, StringsTask& strings,
                           const EngineOptions& options);

}  // namespace sheetreader::detail
