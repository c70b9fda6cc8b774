#pragma once

#include <thread>

#include "pmtx/common.hpp"

namespace pmtx {

/// Hook invoked at transaction operation boundaries and inside wait loops.
/// A deterministic scheduler implements it to run one thread at a time.
class Interleaver {
 public:
  virtual ~Interleaver() = default;
  virtual void yield(ThreadId t) = 0;
};

/// Operation boundary: only a scheduler cares.
inline void boundary(Interleaver* il, ThreadId t) {
  if (il) il->yield(t);
}

/// Wait loop iteration: must let the owner of the awaited resource run.
inline void relax(Interleaver* il, ThreadId t) {
  if (il) {
    il->yield(t);
  } else {
    std::this_thread::yield();
  }
}

}  // namespace pmtx
