#include "pmtx/tx/runtime.hpp"

#include "pmtx/wal/recovery.hpp"
#include "pmtx/wal/wal_context.hpp"

namespace pmtx::tx {

namespace {

class DirectContext : public TxContext {
 public:
  DirectContext(pmem::MemoryImage& mem, ThreadId t, Interleaver* il) : mem_(mem), t_(t), il_(il) {}
  std::uint64_t read(Addr addr) override {
    check(addr);
    boundary(il_, t_);
    return mem_.load_u64(t_, addr);
  }
  void write(Addr addr, std::uint64_t value) override {
    check(addr);
    boundary(il_, t_);
    mem_.store_u64(t_, addr, value);
  }
  ThreadId thread() const override { return t_; }

 private:
  static void check(Addr addr) {
    if (addr % kWordSize != 0) throw UsageError("unaligned transactional access");
  }
  pmem::MemoryImage& mem_;
  ThreadId t_;
  Interleaver* il_;
};

pmem::MemoryConfig memory_config(const MechanismConfig& cfg, const Layout& l, bool record_events) {
  pmem::MemoryConfig m;
  m.size = l.total;
  m.line_size = cfg.line_size;
  m.domain = cfg.domain;
  m.record_events = record_events;
  m.crash_seed = cfg.seed;
  return m;
}

}  // namespace

std::uint64_t TxStats::total_aborts() const {
  std::uint64_t n = 0;
  for (auto a : aborts) n += a;
  return n;
}

Runtime::Runtime(MechanismConfig cfg, const pmem::ByteImage& initial, bool record_events)
    : cfg_(cfg), layout_(layout_for(cfg)) {
  cfg_.validate();
  mem_ = std::make_unique<pmem::MemoryImage>(memory_config(cfg_, layout_, record_events), initial);
  for (std::size_t t = 0; t < layout_.wal.size(); ++t) {
    wal_.push_back(std::make_unique<wal::WalEngine>(*mem_, static_cast<ThreadId>(t), layout_.wal[t], cfg_.faults));
  }
  if (cfg_.mechanism == Mechanism::Stm) stm_ = std::make_unique<stm::Stm>(*mem_, cfg_.threads, std::vector<wal::LogRegion>{}, cfg_.seed);
  if (cfg_.mechanism == Mechanism::CcStm) stm_ = std::make_unique<stm::Stm>(*mem_, cfg_.threads, layout_.wal, cfg_.seed);
  if (uses_htm(cfg_.mechanism)) htm_ = std::make_unique<htm::HtmSystem>(*mem_, cfg_.threads, cfg_.effective_htm(), layout_.htm);
}

void Runtime::set_abort_injector(std::function<bool(ThreadId)> f) {
  if (htm_) htm_->set_abort_injector(std::move(f));
}

RunResult Runtime::run_locked(ThreadId t, const TxBody& body, wal::TxMode mode) {
  lock_.acquire(t, il_);
  wal::WalEngine& e = *wal_[t];
  wal::TxHandle h;
  RunResult r;
  try {
    h = e.begin(mode);
    wal::WalTxContext ctx(e, h, il_);
    body(ctx);
    boundary(il_, t);
    e.commit(h);
    r.stamp = ++clock_;
  } catch (...) {
    if (e.active()) e.abort(h);
    lock_.release(t, *mem_);
    throw;
  }
  lock_.release(t, *mem_);
  return r;
}

RunResult Runtime::run(ThreadId t, const TxBody& body) {
  if (t >= cfg_.threads) throw UsageError("thread " + std::to_string(t) + " out of range");
  boundary(il_, t);
  RunResult r;
  try {
    switch (cfg_.mechanism) {
      case Mechanism::Seq: {
        DirectContext ctx(*mem_, t, il_);
        body(ctx);
        r.stamp = ++clock_;
        break;
      }
      case Mechanism::SpinUndo:
        r = run_locked(t, body, wal::TxMode::Undo);
        break;
      case Mechanism::SpinRedo:
        r = run_locked(t, body, wal::TxMode::Redo);
        break;
      case Mechanism::Stm:
      case Mechanism::CcStm:
        r.stamp = stm_->execute(t, cfg_.mechanism == Mechanism::CcStm, body, il_).stamp;
        break;
      case Mechanism::Htm:
      case Mechanism::CcHtmUndoFb:
      case Mechanism::CcHtmRedoFb: {
        const auto e = htm_->execute(t, body, *wal_[t], il_);
        r.stamp = e.stamp;
        r.fast_path = e.fast_path;
        break;
      }
    }
  } catch (const wal::LogFull& e) {
    throw ConfigError(std::string("log capacity exceeded: ") + e.what());
  }
  ++commits_;
  return r;
}

TxStats Runtime::stats() const {
  TxStats s;
  s.commits = commits_.load();
  const pmem::Counts c = mem_->counters().total();
  s.sfences = c.sfences;
  s.clwbs = c.clwbs;
  s.nt_stores = c.nt_stores;
  for (const auto& e : wal_) s.log_bytes += e->log_bytes();
  s.lock_contended = lock_.contended();
  if (stm_) {
    const auto st = stm_->stats();
    s.aborts[static_cast<int>(AbortCode::Conflict)] = st.aborts;
  }
  if (htm_) {
    const auto h = htm_->stats();
    s.aborts = h.aborts;
    s.fallbacks = h.fallbacks;
    s.log_bytes += htm_->log_bytes();
    s.success_rate = h.success_rate();
  }
  return s;
}

pmem::ByteImage global_recover(const MechanismConfig& cfg, const pmem::ByteImage& snapshot) {
  if (!uses_wal(cfg.mechanism)) return snapshot;
  return wal::wal_recover(snapshot, layout_for(cfg).all_regions());
}

}  // namespace pmtx::tx
