#pragma once

// Global allocator replacement that keeps live and peak byte counts, split into frame storage
// and everything else, and counts allocations made on the instrumented hot path.

#include <atomic>
#include <cstdint>

namespace acceptance {

struct MemorySnapshot {
  std::int64_t peak_total = 0;
  std::int64_t peak_aux = 0;
  std::int64_t peak_frame = 0;
  std::uint64_t hot_allocations = 0;
  std::uint64_t allocations = 0;
};

/// Restarts peak tracking from the current live counts.
void reset_tracking();
MemorySnapshot snapshot();
std::int64_t live_bytes();

}  // namespace acceptance
