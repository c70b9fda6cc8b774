#include "pmtx/stm/stm.hpp"

#include <set>

#include "pmtx/wal/wal_engine.hpp"

namespace pmtx::stm {

namespace {

class StmContext : public TxContext {
 public:
  StmContext(Stm& stm, StmTx& tx, Interleaver* il) : stm_(stm), tx_(tx), il_(il) {}
  std::uint64_t read(Addr addr) override {
    boundary(il_, tx_.thread);
    return stm_.read(tx_, addr);
  }
  void write(Addr addr, std::uint64_t value) override {
    boundary(il_, tx_.thread);
    stm_.write(tx_, addr, value);
  }
  ThreadId thread() const override { return tx_.thread; }

 private:
  Stm& stm_;
  StmTx& tx_;
  Interleaver* il_;
};

}  // namespace

OwnershipTable::OwnershipTable()
    : words_(new std::atomic<std::uint64_t>[kStripeCount]), owners_(new std::atomic<std::uint64_t>[kStripeCount]) {
  for (std::size_t i = 0; i < kStripeCount; ++i) {
    words_[i].store(0, std::memory_order_relaxed);
    owners_[i].store(0, std::memory_order_relaxed);
  }
}

bool OwnershipTable::try_lock(std::size_t s, std::uint64_t owner_tx) {
  std::uint64_t w = words_[s].load(std::memory_order_acquire);
  if (locked(w)) return false;
  if (!words_[s].compare_exchange_strong(w, w | 1, std::memory_order_acq_rel)) return false;
  owners_[s].store(owner_tx, std::memory_order_release);
  return true;
}

void OwnershipTable::unlock(std::size_t s, bool bump) {
  const std::uint64_t w = words_[s].load(std::memory_order_acquire);
  owners_[s].store(0, std::memory_order_release);
  const std::uint64_t v = version(w) + (bump ? 1 : 0);
  words_[s].store(v << 1, std::memory_order_release);
}

Stm::Stm(pmem::MemoryImage& mem, std::size_t threads, std::vector<wal::LogRegion> regions, std::uint64_t seed)
    : mem_(mem), active_(threads, 0) {
  for (std::size_t t = 0; t < threads; ++t) rngs_.emplace_back(seed * 1000003 + t);
  if (threads == 0) throw ConfigError("stm needs at least one thread");
  if (!regions.empty() && regions.size() != threads) throw ConfigError("stm needs one log region per thread");
  for (std::size_t t = 0; t < regions.size(); ++t) {
    wal::LogWriter w(mem, static_cast<ThreadId>(t), regions[t]);
    const std::uint32_t first = w.first_safe_tx_id();
    logs_.push_back(std::make_unique<ThreadLog>(ThreadLog{std::move(w), first}));
  }
}

StmTx Stm::begin(ThreadId t, bool persistent) {
  if (t >= active_.size()) throw UsageError("thread " + std::to_string(t) + " out of range");
  if (active_[t]) throw UsageError("nested stm transaction on thread " + std::to_string(t));
  if (persistent && logs_.empty()) throw ConfigError("persistent stm transaction without log regions");
  active_[t] = 1;
  StmTx tx;
  tx.tx_id = next_tx_.fetch_add(1);
  tx.thread = t;
  tx.persistent = persistent;
  tx.snapshot = clock_.load(std::memory_order_acquire);
  return tx;
}

void Stm::check_active(const StmTx& tx) const {
  if (tx.status != TxStatus::Active) throw UsageError("stm transaction is not active");
}

void Stm::finish(StmTx& tx, TxStatus s) {
  tx.status = s;
  active_[tx.thread] = 0;
  if (s == TxStatus::Aborted) ++aborts_;
  if (s == TxStatus::Committed) ++commits_;
}

void Stm::fail(StmTx& tx) {
  finish(tx, TxStatus::Aborted);
  throw TxAbort(AbortCode::Conflict);
}

bool Stm::validate(const StmTx& tx) const {
  for (const auto& [addr, ver] : tx.read_set) {
    const std::size_t s = OwnershipTable::stripe(addr);
    const std::uint64_t w = table_.word(s);
    if (OwnershipTable::version(w) != ver) return false;
    if (OwnershipTable::locked(w) && table_.owner(s) != tx.tx_id) return false;
  }
  return true;
}

std::uint64_t Stm::read(StmTx& tx, Addr addr) {
  check_active(tx);
  if (addr % kWordSize != 0) throw UsageError("unaligned stm access");
  if (auto it = tx.write_set.find(addr); it != tx.write_set.end()) return it->second;

  const std::size_t s = OwnershipTable::stripe(addr);
  const std::uint64_t before = table_.word(s);
  if (OwnershipTable::locked(before)) fail(tx);
  const std::uint64_t value = mem_.load_u64(tx.thread, addr);
  if (table_.word(s) != before) fail(tx);

  const std::uint64_t ver = OwnershipTable::version(before);
  auto [it, fresh] = tx.read_set.emplace(addr, ver);
  if (!fresh && it->second != ver) fail(tx);

  const std::uint64_t now = clock_.load(std::memory_order_acquire);
  if (now != tx.snapshot) {
    if (!validate(tx)) fail(tx);
    tx.snapshot = now;
  }
  return value;
}

void Stm::write(StmTx& tx, Addr addr, std::uint64_t value) {
  check_active(tx);
  if (addr % kWordSize != 0) throw UsageError("unaligned stm access");
  tx.write_set[addr] = value;
}

std::uint64_t Stm::commit(StmTx& tx) {
  check_active(tx);
  const ThreadId t = tx.thread;
  if (tx.write_set.empty()) {
    finish(tx, TxStatus::Committed);
    return 2 * tx.snapshot + 1;
  }

  std::vector<std::size_t> held;
  auto release = [&](bool bump) {
    for (std::size_t s : held) table_.unlock(s, bump);
  };
  std::set<std::size_t> stripes;
  for (const auto& [addr, v] : tx.write_set) stripes.insert(OwnershipTable::stripe(addr));
  for (std::size_t s : stripes) {
    if (!table_.try_lock(s, tx.tx_id)) {
      release(false);
      fail(tx);
    }
    held.push_back(s);
  }
  if (!validate(tx)) {
    release(false);
    fail(tx);
  }
  const std::uint64_t stamp = clock_.fetch_add(1, std::memory_order_acq_rel) + 1;

  if (tx.persistent) {
    ThreadLog& log = *logs_[t];
    log.writer.rewind();
    const std::uint32_t id = log.next_id++;
    std::vector<pmem::Fragment> frags;
    for (const auto& [addr, v] : tx.write_set) {
      const Bytes b = word_bytes(v);
      if (!log.writer.fits(b.size())) {
        release(false);
        finish(tx, TxStatus::Aborted);
        throw wal::LogFull("stm log region full (capacity " + std::to_string(log.writer.region().capacity) +
                           " bytes)");
      }
      log.writer.append(id, addr, b, false);
      frags.push_back({addr, b});
    }
    wal::redo_commit(log.writer, id, frags);
  } else {
    for (const auto& [addr, v] : tx.write_set) mem_.store_u64(t, addr, v);
  }

  release(true);
  mem_.drain(t);
  finish(tx, TxStatus::Committed);
  return 2 * stamp;
}

ExecResult Stm::execute(ThreadId t, bool persistent, const TxBody& body, Interleaver* il) {
  ExecResult r;
  for (unsigned round = 0;; ++round) {
    ++r.attempts;
    StmTx tx = begin(t, persistent);
    try {
      StmContext ctx(*this, tx, il);
      body(ctx);
      boundary(il, t);
      r.stamp = commit(tx);
      return r;
    } catch (const TxAbort&) {
      const unsigned window = std::min(kMaxBackoffSpins, 1u << std::min(round, 10u));
      const auto spins = rngs_[t]() % window;
      for (std::uint64_t i = 0; i <= spins; ++i) relax(il, t);
    } catch (...) {
      if (tx.status == TxStatus::Active) abort(tx);
      throw;
    }
  }
}

void Stm::abort(StmTx& tx) {
  check_active(tx);
  finish(tx, TxStatus::Aborted);
}

}  // namespace pmtx::stm
