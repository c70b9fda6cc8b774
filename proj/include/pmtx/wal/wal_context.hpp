#pragma once

#include "pmtx/interleaver.hpp"
#include "pmtx/tx_context.hpp"
#include "pmtx/wal/wal_engine.hpp"

namespace pmtx::wal {

/// Adapts one active WalEngine transaction to TxContext.
class WalTxContext : public TxContext {
 public:
  WalTxContext(WalEngine& engine, const TxHandle& tx, Interleaver* il = nullptr)
      : engine_(engine), tx_(tx), il_(il) {}

  std::uint64_t read(Addr addr) override {
    check(addr);
    boundary(il_, engine_.thread());
    return engine_.read_u64(tx_, addr);
  }
  void write(Addr addr, std::uint64_t value) override {
    check(addr);
    boundary(il_, engine_.thread());
    engine_.write_u64(tx_, addr, value);
  }
  ThreadId thread() const override { return engine_.thread(); }

 private:
  static void check(Addr addr) {
    if (addr % kWordSize != 0) throw UsageError("unaligned transactional access");
  }

  WalEngine& engine_;
  TxHandle tx_;
  Interleaver* il_;
};

}  // namespace pmtx::wal
