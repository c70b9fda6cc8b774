#include "pmtx/htm/htm.hpp"

#include <algorithm>

#include "pmtx/wal/wal_context.hpp"

namespace pmtx::htm {

namespace {

class HtmContext : public TxContext {
 public:
  HtmContext(HtmSystem& sys, HwTx& tx, Interleaver* il) : sys_(sys), tx_(tx), il_(il) {}
  std::uint64_t read(Addr addr) override {
    boundary(il_, tx_.thread);
    return sys_.read(tx_, addr);
  }
  void write(Addr addr, std::uint64_t value) override {
    boundary(il_, tx_.thread);
    sys_.write(tx_, addr, value);
  }
  ThreadId thread() const override { return tx_.thread; }

 private:
  HtmSystem& sys_;
  HwTx& tx_;
  Interleaver* il_;
};

}  // namespace

void HtmConfig::validate() const {
  if (capacity_lines < 1) throw ConfigError("capacity_lines must be at least 1");
}

std::uint64_t HtmStats::total_aborts() const {
  std::uint64_t n = 0;
  for (auto a : aborts) n += a;
  return n;
}

double HtmStats::success_rate() const {
  const std::uint64_t total = commits + fallbacks;
  return total == 0 ? 1.0 : static_cast<double>(commits) / static_cast<double>(total);
}

HtmSystem::HtmSystem(pmem::MemoryImage& mem, std::size_t threads, HtmConfig cfg, std::vector<wal::LogRegion> regions)
    : mem_(mem), cfg_(cfg), txs_(threads) {
  cfg_.validate();
  if (threads == 0 || threads > 64) throw ConfigError("htm supports 1 to 64 threads");
  if (cfg_.cc_enabled) {
    if (mem.domain() == PersistenceDomain::PersistentCaches) {
      throw ConfigError("crash-consistent htm is not applicable under persistent caches");
    }
    if (regions.size() != threads) throw ConfigError("crash-consistent htm needs one log region per thread");
    for (std::size_t t = 0; t < threads; ++t) {
      wal::LogWriter w(mem, static_cast<ThreadId>(t), regions[t]);
      const std::uint32_t first = w.first_safe_tx_id();
      logs_.push_back(std::make_unique<ThreadLog>(ThreadLog{std::move(w), first}));
    }
  }
  for (std::size_t t = 0; t < threads; ++t) txs_[t].thread = static_cast<ThreadId>(t);
}

void HtmSystem::set_abort_injector(std::function<bool(ThreadId)> f) {
  std::lock_guard lk(mu_);
  injector_ = std::move(f);
}

void HtmSystem::release_lines(HwTx& tx) {
  const std::uint64_t bit = 1ULL << tx.thread;
  auto drop = [&](Addr line) {
    auto it = owners_.find(line);
    if (it == owners_.end()) return;
    it->second.readers &= ~bit;
    if (it->second.writer == static_cast<int>(tx.thread)) it->second.writer = -1;
    if (it->second.readers == 0 && it->second.writer == -1) owners_.erase(it);
  };
  for (Addr l : tx.read_set) drop(l);
  for (Addr l : tx.write_set) drop(l);
}

void HtmSystem::doom(ThreadId victim, AbortCode code) {
  HwTx& tx = txs_[victim];
  if (tx.status != HwStatus::Active) return;
  release_lines(tx);
  tx.status = HwStatus::Aborted;
  tx.abort_code = code;
  tx.spec_buffer.clear();
  ++stats_.aborts[static_cast<int>(code)];
}

void HtmSystem::abort_locked(HwTx& tx, AbortCode code) {
  doom(tx.thread, code);
  throw TxAbort(code);
}

void HtmSystem::abort(HwTx& tx, AbortCode code) {
  std::lock_guard lk(mu_);
  require_active(tx);
  abort_locked(tx, code);
}

void HtmSystem::require_active(HwTx& tx) {
  if (tx.status == HwStatus::Aborted) throw TxAbort(*tx.abort_code);
  if (tx.status != HwStatus::Active) throw UsageError("hardware transaction is not active");
}

HwTx& HtmSystem::begin(ThreadId t) {
  std::lock_guard lk(mu_);
  if (t >= txs_.size()) throw UsageError("thread " + std::to_string(t) + " out of range");
  HwTx& tx = txs_[t];
  if (tx.status == HwStatus::Active) throw UsageError("nested hardware transaction on thread " + std::to_string(t));
  tx.tx_id = next_tx_++;
  tx.status = HwStatus::Active;
  tx.abort_code.reset();
  tx.spec_buffer.clear();
  tx.read_set.clear();
  tx.write_set.clear();
  tx.log_cursor = 0;
  if (cfg_.cc_enabled) {
    logs_[t]->writer.rewind();
    tx.log_cursor = logs_[t]->writer.head();
  }
  if (fallback_holder_ != -1) abort_locked(tx, AbortCode::LockHeld);
  return tx;
}

void HtmSystem::check_capacity(HwTx& tx) {
  std::size_t lines = tx.write_set.size();
  for (Addr l : tx.read_set) {
    if (!tx.write_set.count(l)) ++lines;
  }
  if (lines > cfg_.capacity_lines) abort_locked(tx, AbortCode::Capacity);
}

std::uint64_t HtmSystem::read(HwTx& tx, Addr addr) {
  std::lock_guard lk(mu_);
  require_active(tx);
  if (addr % kWordSize != 0) throw UsageError("unaligned transactional access");
  const std::size_t ls = mem_.line_size();
  const Addr line = line_base(addr, ls);
  if (auto it = tx.spec_buffer.find(line); it != tx.spec_buffer.end()) return load_le64(it->second.data() + (addr - line));

  if (auto it = owners_.find(line); it != owners_.end() && it->second.writer != -1 &&
                                    it->second.writer != static_cast<int>(tx.thread)) {
    doom(static_cast<ThreadId>(it->second.writer), AbortCode::Conflict);
  }
  tx.read_set.insert(line);
  owners_[line].readers |= 1ULL << tx.thread;
  check_capacity(tx);
  return mem_.load_u64(tx.thread, addr);
}

void HtmSystem::write(HwTx& tx, Addr addr, std::uint64_t value) {
  std::lock_guard lk(mu_);
  require_active(tx);
  if (addr % kWordSize != 0) throw UsageError("unaligned transactional access");
  const std::size_t ls = mem_.line_size();
  const Addr line = line_base(addr, ls);

  if (auto it = owners_.find(line); it != owners_.end()) {
    const LineOwners o = it->second;
    if (o.writer != -1 && o.writer != static_cast<int>(tx.thread)) doom(static_cast<ThreadId>(o.writer), AbortCode::Conflict);
    for (ThreadId v = 0; v < txs_.size(); ++v) {
      if (v != tx.thread && (o.readers >> v) & 1) doom(v, AbortCode::Conflict);
    }
  }

  auto [it, fresh] = tx.spec_buffer.try_emplace(line);
  if (fresh) it->second = mem_.load(tx.thread, line, ls);
  store_le64(it->second.data() + (addr - line), value);
  tx.write_set.insert(line);
  owners_[line].writer = static_cast<int>(tx.thread);
  check_capacity(tx);

  if (cfg_.cc_enabled) {
    ThreadLog& log = *logs_[tx.thread];
    const Bytes b = word_bytes(value);
    if (!log.writer.fits(b.size())) abort_locked(tx, AbortCode::NoLogSpace);
    log.writer.append(log.next_id, addr, b, true);
    tx.log_cursor = log.writer.head();
  }
}

std::uint64_t HtmSystem::commit(HwTx& tx) {
  std::lock_guard lk(mu_);
  require_active(tx);
  const ThreadId t = tx.thread;
  if (injector_ && injector_(t)) abort_locked(tx, AbortCode::Explicit);

  if (!tx.write_set.empty()) {
    std::vector<pmem::Fragment> lines;
    for (auto& [line, data] : tx.spec_buffer) lines.push_back({line, data});
    if (cfg_.cc_enabled) {
      ThreadLog& log = *logs_[t];
      const std::uint32_t id = log.next_id++;
      mem_.sfence(t);
      log.writer.write_commit_word({id, wal::TxMode::Redo, static_cast<std::uint32_t>(tx.log_cursor)}, true);
      mem_.sfence(t);
      mem_.store_group(t, lines);
      for (const auto& f : lines) mem_.clwb(t, f.addr);
      mem_.sfence(t);
      log.writer.write_commit_word({id, wal::TxMode::Redo, 0}, true);
      mem_.sfence(t);
      log.writer.rewind();
    } else {
      mem_.store_group(t, lines);
    }
    mem_.drain(t);
  }
  release_lines(tx);
  tx.status = HwStatus::Committed;
  tx.spec_buffer.clear();
  ++stats_.commits;
  return ++clock_;
}

void HtmSystem::acquire_fallback(ThreadId t, Interleaver* il) {
  for (;;) {
    {
      std::lock_guard lk(mu_);
      if (fallback_holder_ == -1) {
        fallback_holder_ = static_cast<int>(t);
        for (ThreadId v = 0; v < txs_.size(); ++v) doom(v, AbortCode::LockHeld);
        return;
      }
    }
    relax(il, t);
  }
}

std::uint64_t HtmSystem::release_fallback(ThreadId t) {
  std::lock_guard lk(mu_);
  if (fallback_holder_ != static_cast<int>(t)) throw UsageError("fallback lock not held by thread " + std::to_string(t));
  mem_.drain(t);
  fallback_holder_ = -1;
  ++stats_.fallbacks;
  return ++clock_;
}

bool HtmSystem::fallback_held() const {
  std::lock_guard lk(mu_);
  return fallback_holder_ != -1;
}

ExecResult HtmSystem::execute(ThreadId t, const TxBody& body, wal::WalEngine& fallback, Interleaver* il) {
  ExecResult r;
  for (unsigned attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    ++r.attempts;
    try {
      HwTx& tx = begin(t);
      HtmContext ctx(*this, tx, il);
      body(ctx);
      boundary(il, t);
      r.stamp = commit(tx);
      r.fast_path = true;
      return r;
    } catch (const TxAbort& e) {
      const AbortCode c = e.code();
      if (c == AbortCode::Capacity || c == AbortCode::NoLogSpace) break;
      if (c == AbortCode::Explicit && !cfg_.retry_explicit) break;
      if (c == AbortCode::LockHeld) {
        while (fallback_held()) relax(il, t);
      } else {
        for (unsigned i = 0; i < (1u << std::min(attempt, 4u)); ++i) relax(il, t);
      }
    } catch (...) {
      std::lock_guard lk(mu_);
      doom(t, AbortCode::Explicit);
      throw;
    }
  }

  acquire_fallback(t, il);
  wal::TxHandle h;
  try {
    h = fallback.begin(cfg_.fallback_mode);
    wal::WalTxContext ctx(fallback, h, il);
    body(ctx);
    boundary(il, t);
    fallback.commit(h);
  } catch (...) {
    if (fallback.active()) fallback.abort(h);
    std::lock_guard lk(mu_);
    mem_.drain(t);
    fallback_holder_ = -1;
    throw;
  }
  r.stamp = release_fallback(t);
  return r;
}

HtmStats HtmSystem::stats() const {
  std::lock_guard lk(mu_);
  return stats_;
}

std::uint64_t HtmSystem::log_bytes() const {
  std::lock_guard lk(mu_);
  std::uint64_t n = 0;
  for (const auto& l : logs_) n += l->writer.bytes_appended();
  return n;
}

}  // namespace pmtx::htm
