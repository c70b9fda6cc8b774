#pragma once

#include <cstdint>
#include <functional>

#include "pmtx/common.hpp"

namespace pmtx {

/// Word-granular view of the heap inside one transaction attempt.
/// Addresses are 8-byte aligned. Any call may throw TxAbort.
class TxContext {
 public:
  virtual ~TxContext() = default;
  virtual std::uint64_t read(Addr addr) = 0;
  virtual void write(Addr addr, std::uint64_t value) = 0;
  virtual ThreadId thread() const = 0;
};

/// A transaction body. It may run more than once, so it must be a
/// deterministic function of the values it reads.
using TxBody = std::function<void(TxContext&)>;

}  // namespace pmtx
