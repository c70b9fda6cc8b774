#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "pmtx/pmem/memory.hpp"
#include "pmtx/wal/log_writer.hpp"

namespace pmtx::wal {

/// The log region has no room for the next entry. The transaction has been
/// aborted and its effects undone by the time this is thrown.
class LogFull : public Error {
 public:
  using Error::Error;
};

/// Deliberate protocol breakage for mutation testing of the crash checker.
struct WalFaults {
  /// Undo: omit the sfence between the log append and the in-place store.
  bool skip_undo_append_fence = false;
  /// Undo: persist the commit record before the write set.
  bool commit_before_writeset_persist = false;
};

struct TxHandle {
  std::uint64_t tx_id = 0;
  TxMode mode = TxMode::Undo;
};

/// Persists `writes` through an already-appended redo log: flush entries,
/// commit the tail, replay home locations, persist them, truncate. Under
/// persistent caches the same stores are issued without clwb/sfence.
void redo_commit(LogWriter& log, std::uint32_t tx_id, std::span<const pmem::Fragment> writes);

/// Undo or redo write-ahead logging on one thread's log region.
/// Not thread-safe; callers provide isolation.
class WalEngine {
 public:
  WalEngine(pmem::MemoryImage& mem, ThreadId thread, LogRegion region, WalFaults faults = {});

  TxHandle begin(TxMode mode);
  void write(const TxHandle& tx, Addr addr, std::span<const std::uint8_t> value);
  Bytes read(const TxHandle& tx, Addr addr, std::size_t len);
  void commit(const TxHandle& tx);
  void abort(const TxHandle& tx);

  void write_u64(const TxHandle& tx, Addr addr, std::uint64_t v);
  std::uint64_t read_u64(const TxHandle& tx, Addr addr);

  bool active() const { return state_ == State::Active; }
  ThreadId thread() const { return log_.thread(); }
  const LogRegion& region() const { return log_.region(); }
  std::uint64_t log_bytes() const { return log_.bytes_appended(); }

 private:
  enum class State { Idle, Active, Aborted };
  struct UndoRecord {
    Addr addr;
    Bytes old_value;
  };

  void require_active(const TxHandle& tx) const;
  bool transient() const;
  void write_fragment(Addr addr, std::span<const std::uint8_t> value);
  void rollback_and_truncate();
  void reset();

  pmem::MemoryImage& mem_;
  LogWriter log_;
  WalFaults faults_;
  State state_ = State::Idle;
  TxHandle current_;
  std::uint32_t next_tx_id_;

  std::set<Addr> home_lines_;
  std::vector<UndoRecord> undo_set_;
  std::vector<pmem::Fragment> redo_writes_;
  std::map<Addr, std::uint8_t> redo_view_;
};

}  // namespace pmtx::wal
