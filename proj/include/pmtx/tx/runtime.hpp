#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "pmtx/abort.hpp"
#include "pmtx/htm/htm.hpp"
#include "pmtx/interleaver.hpp"
#include "pmtx/pmem/memory.hpp"
#include "pmtx/stm/stm.hpp"
#include "pmtx/tx/config.hpp"
#include "pmtx/tx/spinlock.hpp"
#include "pmtx/tx_context.hpp"
#include "pmtx/wal/wal_engine.hpp"

namespace pmtx::tx {

struct RunResult {
  /// Total order of committed transactions within one runtime; consistent
  /// with reads-from and with each thread's program order.
  std::uint64_t stamp = 0;
  /// False when the transaction completed on a lock-based fallback path.
  bool fast_path = true;
};

struct TxStats {
  std::uint64_t commits = 0;
  std::array<std::uint64_t, kAbortCodeCount> aborts{};
  std::uint64_t fallbacks = 0;
  std::uint64_t sfences = 0;
  std::uint64_t clwbs = 0;
  std::uint64_t nt_stores = 0;
  std::uint64_t log_bytes = 0;
  std::uint64_t lock_contended = 0;

  std::uint64_t total_aborts() const;
  /// HTM: share of transactions that committed in hardware; otherwise 1.
  double success_rate = 1.0;
};

/// One mechanism instantiated over a simulated memory image.
class Runtime {
 public:
  explicit Runtime(MechanismConfig cfg, const pmem::ByteImage& initial = pmem::ByteImage(), bool record_events = true);

  /// Runs `body` as one failure-atomic transaction on thread `t`.
  /// A log region overflow surfaces as ConfigError.
  RunResult run(ThreadId t, const TxBody& body);

  void set_interleaver(Interleaver* il) { il_ = il; }
  Interleaver* interleaver() const { return il_; }

  pmem::MemoryImage& memory() { return *mem_; }
  const MechanismConfig& config() const { return cfg_; }
  const Layout& layout() const { return layout_; }
  std::vector<wal::LogRegion> log_regions() const { return layout_.all_regions(); }
  /// Test hook forwarded to the HTM commit path.
  void set_abort_injector(std::function<bool(ThreadId)> f);

  TxStats stats() const;

 private:
  RunResult run_locked(ThreadId t, const TxBody& body, wal::TxMode mode);

  MechanismConfig cfg_;
  Layout layout_;
  std::unique_ptr<pmem::MemoryImage> mem_;
  std::vector<std::unique_ptr<wal::WalEngine>> wal_;
  std::unique_ptr<stm::Stm> stm_;
  std::unique_ptr<htm::HtmSystem> htm_;
  Spinlock lock_;
  std::atomic<std::uint64_t> clock_{0};
  std::atomic<std::uint64_t> commits_{0};
  Interleaver* il_ = nullptr;
};

/// Restores a crash image to a transaction-consistent state using the
/// mechanism's log regions. The sequential and volatile-STM baselines keep
/// no log, so their recovery is the identity.
pmem::ByteImage global_recover(const MechanismConfig& cfg, const pmem::ByteImage& snapshot);

}  // namespace pmtx::tx
