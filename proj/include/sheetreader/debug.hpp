#pragma once

// Instrumentation hooks. Test binaries that replace the global allocator consult
// in_hot_path() to count allocations made on the decompression/parse path.

namespace sheetreader::debug {

inline thread_local int hot_path_depth = 0;
inline thread_local int frame_depth = 0;

inline bool in_hot_path() noexcept { return hot_path_depth > 0; }
/// True while allocating storage that belongs to the frame under construction.
inline bool in_frame() noexcept { return frame_depth > 0; }

class HotPathScope {
 public:
  HotPathScope() noexcept { ++hot_path_depth; }
  ~HotPathScope() { --hot_path_depth; }
  HotPathScope(const HotPathScope&) = delete;
  HotPathScope& operator=(const HotPathScope&) = delete;
};

// Frame growth and string copies are data-dependent by design and excluded from the count.
class FrameScope {
 public:
  FrameScope() noexcept : saved_(hot_path_depth) {
    hot_path_depth = 0;
    ++frame_depth;
  }
  ~FrameScope() {
    --frame_depth;
    hot_path_depth = saved_;
  }
  FrameScope(const FrameScope&) = delete;
  FrameScope& operator=(const FrameScope&) = delete;

 private:
  int saved_;
};

}  // namespace sheetreader::debug
