#pragma once

#include <atomic>
#include <cstdint>

#include "pmtx/interleaver.hpp"
#include "pmtx/pmem/memory.hpp"

namespace pmtx::tx {

/// Test-and-test-and-set lock. Release drains the holder's outstanding
/// flushes so the next holder never observes unpersisted effects.
class Spinlock {
 public:
  void acquire(ThreadId t, Interleaver* il = nullptr);
  void release(ThreadId t, pmem::MemoryImage& mem);
  bool held() const { return holder_.load(std::memory_order_acquire) != -1; }
  int holder() const { return holder_.load(std::memory_order_acquire); }
  /// Acquisitions that found the lock taken at least once.
  std::uint64_t contended() const { return contended_.load(std::memory_order_relaxed); }

 private:
  std::atomic<int> holder_{-1};
  std::atomic<std::uint64_t> contended_{0};
};

}  // namespace pmtx::tx
