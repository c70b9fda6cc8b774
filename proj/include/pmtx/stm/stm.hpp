#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "pmtx/abort.hpp"
#include "pmtx/interleaver.hpp"
#include "pmtx/pmem/memory.hpp"
#include "pmtx/tx_context.hpp"
#include "pmtx/wal/wal_engine.hpp"
#include "pmtx/wal/recovery.hpp"

namespace pmtx::stm {

inline constexpr std::size_t kStripeCount = 1 << 16;

/// Versioned lock words over hashed 8-byte stripes. A word is
/// (version << 1) | locked; the owner is kept alongside while locked.
class OwnershipTable {
 public:
  OwnershipTable();

  static std::size_t stripe(Addr a) { return (a >> 3) & (kStripeCount - 1); }
  static bool locked(std::uint64_t w) { return (w & 1) != 0; }
  static std::uint64_t version(std::uint64_t w) { return w >> 1; }

  std::uint64_t word(std::size_t s) const { return words_[s].load(std::memory_order_acquire); }
  std::uint64_t owner(std::size_t s) const { return owners_[s].load(std::memory_order_acquire); }

  bool try_lock(std::size_t s, std::uint64_t owner_tx);
  /// Clears the lock; `bump` advances the version.
  void unlock(std::size_t s, bool bump);

 private:
  std::unique_ptr<std::atomic<std::uint64_t>[]> words_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> owners_;
};

enum class TxStatus { Active, Committed, Aborted };

struct StmTx {
  std::uint64_t tx_id = 0;
  ThreadId thread = 0;
  bool persistent = false;
  TxStatus status = TxStatus::Active;
  std::map<Addr, std::uint64_t> read_set;   // addr -> observed version
  std::map<Addr, std::uint64_t> write_set;  // addr -> pending value
  std::uint64_t snapshot = 0;               // commit clock at last full validation
};

inline constexpr unsigned kMaxBackoffSpins = 1u << 10;

struct ExecResult {
  std::uint64_t stamp = 0;
  std::uint64_t attempts = 0;
};

struct StmStats {
  std::uint64_t commits = 0;
  std::uint64_t aborts = 0;
};

/// Word-based write-back STM. With `persistent` set on a transaction the
/// write set goes through the thread's redo log region before write-back.
/// Addresses must be 8-byte aligned.
class Stm {
 public:
  /// `regions` is either empty (volatile only) or one log region per thread.
  Stm(pmem::MemoryImage& mem, std::size_t threads, std::vector<wal::LogRegion> regions = {},
      std::uint64_t seed = 0);

  StmTx begin(ThreadId t, bool persistent);
  std::uint64_t read(StmTx& tx, Addr addr);
  void write(StmTx& tx, Addr addr, std::uint64_t value);
  /// Returns the commit stamp: even for writers, odd for read-only.
  /// Stamps order transactions consistently with reads-from.
  std::uint64_t commit(StmTx& tx);
  void abort(StmTx& tx);

  /// Runs `body` until it commits, backing off exponentially between
  /// conflicting attempts.
  ExecResult execute(ThreadId t, bool persistent, const TxBody& body, Interleaver* il = nullptr);

  StmStats stats() const { return {commits_.load(), aborts_.load()}; }
  std::size_t threads() const { return active_.size(); }

 private:
  struct ThreadLog {
    wal::LogWriter writer;
    std::uint32_t next_id;
  };

  [[noreturn]] void fail(StmTx& tx);
  bool validate(const StmTx& tx) const;
  void check_active(const StmTx& tx) const;
  void finish(StmTx& tx, TxStatus s);

  pmem::MemoryImage& mem_;
  OwnershipTable table_;
  std::atomic<std::uint64_t> clock_{0};
  std::atomic<std::uint64_t> next_tx_{1};
  std::vector<std::unique_ptr<ThreadLog>> logs_;
  std::vector<std::uint8_t> active_;
  std::vector<std::mt19937_64> rngs_;
  std::atomic<std::uint64_t> commits_{0};
  std::atomic<std::uint64_t> aborts_{0};
};

/// Same contract as redo-mode wal recovery.
inline pmem::ByteImage stm_recover(const pmem::ByteImage& snapshot, std::span<const wal::LogRegion> regions) {
  return wal::wal_recover(snapshot, regions);
}

}  // namespace pmtx::stm
