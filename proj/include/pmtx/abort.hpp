#pragma once

#include <string>

#include "pmtx/common.hpp"

namespace pmtx {

enum class AbortCode { Conflict, Capacity, Explicit, LockHeld, NoLogSpace };

inline constexpr int kAbortCodeCount = 5;

const char* to_string(AbortCode c);

/// Thrown out of a transaction body when the enclosing attempt aborted.
/// Retry drivers catch it; it never escapes a completed run.
class TxAbort : public Error {
 public:
  explicit TxAbort(AbortCode code) : Error(std::string("transaction aborted: ") + to_string(code)), code_(code) {}
  AbortCode code() const { return code_; }

 private:
  AbortCode code_;
};

}  // namespace pmtx
