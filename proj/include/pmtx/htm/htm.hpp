#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "pmtx/abort.hpp"
#include "pmtx/interleaver.hpp"
#include "pmtx/pmem/memory.hpp"
#include "pmtx/tx_context.hpp"
#include "pmtx/wal/log_writer.hpp"
#include "pmtx/wal/wal_engine.hpp"

namespace pmtx::htm {

struct HtmConfig {
  std::size_t capacity_lines = 1024;  // 64 KiB L1, 64 B lines, 8-way (associativity not modeled)
  unsigned max_retries = 8;
  bool cc_enabled = false;
  wal::TxMode fallback_mode = wal::TxMode::Undo;
  bool retry_explicit = true;  // Explicit aborts retry in hardware before falling back

  void validate() const;
};

enum class HwStatus { Idle, Active, Committed, Aborted };

struct HwTx {
  std::uint64_t tx_id = 0;
  ThreadId thread = 0;
  HwStatus status = HwStatus::Idle;
  std::optional<AbortCode> abort_code;
  std::map<Addr, Bytes> spec_buffer;  // speculative copies of written lines
  std::set<Addr> read_set;
  std::set<Addr> write_set;
  std::uint64_t log_cursor = 0;
};

struct HtmStats {
  std::uint64_t commits = 0;    // fast path
  std::uint64_t fallbacks = 0;  // completed under the fallback lock
  std::array<std::uint64_t, kAbortCodeCount> aborts{};

  std::uint64_t total_aborts() const;
  std::uint64_t aborts_of(AbortCode c) const { return aborts[static_cast<int>(c)]; }
  double success_rate() const;
};

struct ExecResult {
  std::uint64_t stamp = 0;
  bool fast_path = false;
  std::uint64_t attempts = 0;  // hardware attempts
};

/// Best-effort HTM over a MemoryImage. Requester wins on every conflict;
/// every transaction subscribes to the fallback lock. With cc_enabled each
/// speculative write also streams a redo entry into the thread's log
/// region with non-temporal stores.
///
/// All operations serialize on one internal mutex, which also makes the
/// publication of a committing write set atomic for every reader.
class HtmSystem {
 public:
  /// `regions`: one fast-path log region per thread, required when cc is on.
  HtmSystem(pmem::MemoryImage& mem, std::size_t threads, HtmConfig cfg, std::vector<wal::LogRegion> regions = {});

  const HtmConfig& config() const { return cfg_; }

  HwTx& begin(ThreadId t);
  std::uint64_t read(HwTx& tx, Addr addr);
  void write(HwTx& tx, Addr addr, std::uint64_t value);
  /// Returns the commit stamp.
  std::uint64_t commit(HwTx& tx);
  /// Self abort (xabort). Always throws TxAbort.
  [[noreturn]] void abort(HwTx& tx, AbortCode code);

  /// Spins until the fallback lock is free, takes it and dooms every
  /// running hardware transaction.
  void acquire_fallback(ThreadId t, Interleaver* il = nullptr);
  /// Returns the commit stamp of the fallback transaction.
  std::uint64_t release_fallback(ThreadId t);
  bool fallback_held() const;

  /// Retry driver: up to 1 + max_retries hardware attempts, then the body
  /// runs under the fallback lock through `fallback` in fallback_mode.
  ExecResult execute(ThreadId t, const TxBody& body, wal::WalEngine& fallback, Interleaver* il = nullptr);

  /// Consulted at every commit; returning true aborts with Explicit.
  void set_abort_injector(std::function<bool(ThreadId)> f);

  HtmStats stats() const;
  std::uint64_t log_bytes() const;

 private:
  struct LineOwners {
    std::uint64_t readers = 0;
    int writer = -1;
  };
  struct ThreadLog {
    wal::LogWriter writer;
    std::uint32_t next_id;
  };

  void require_active(HwTx& tx);
  void doom(ThreadId victim, AbortCode code);
  void release_lines(HwTx& tx);
  [[noreturn]] void abort_locked(HwTx& tx, AbortCode code);
  void check_capacity(HwTx& tx);

  pmem::MemoryImage& mem_;
  HtmConfig cfg_;
  mutable std::mutex mu_;
  std::vector<HwTx> txs_;
  std::vector<std::unique_ptr<ThreadLog>> logs_;
  std::unordered_map<Addr, LineOwners> owners_;
  int fallback_holder_ = -1;
  std::uint64_t clock_ = 0;
  std::uint64_t next_tx_ = 1;
  HtmStats stats_;
  std::function<bool(ThreadId)> injector_;
};

}  // namespace pmtx::htm
