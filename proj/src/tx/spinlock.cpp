#include "pmtx/tx/spinlock.hpp"

#include <string>

namespace pmtx::tx {

void Spinlock::acquire(ThreadId t, Interleaver* il) {
  bool waited = false;
  for (;;) {
    int expected = -1;
    if (holder_.load(std::memory_order_relaxed) == -1 &&
        holder_.compare_exchange_weak(expected, static_cast<int>(t), std::memory_order_acquire)) {
      if (waited) contended_.fetch_add(1, std::memory_order_relaxed);
      return;
    }
    waited = true;
    if (il) {
      il->yield(t);
      continue;
    }
    for (int i = 0; i < 64 && holder_.load(std::memory_order_relaxed) != -1; ++i) {
#if defined(__x86_64__) || defined(__i386__)
      __builtin_ia32_pause();
#endif
    }
    relax(nullptr, t);
  }
}

void Spinlock::release(ThreadId t, pmem::MemoryImage& mem) {
  if (holder_.load(std::memory_order_relaxed) != static_cast<int>(t)) {
    throw UsageError("spinlock not held by thread " + std::to_string(t));
  }
  mem.drain(t);
  holder_.store(-1, std::memory_order_release);
}

}  // namespace pmtx::tx
