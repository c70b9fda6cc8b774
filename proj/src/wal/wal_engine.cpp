#include "pmtx/wal/wal_engine.hpp"

#include <algorithm>

namespace pmtx::wal {

namespace {

bool is_transient(const pmem::MemoryImage& mem) { return mem.domain() == PersistenceDomain::TransientCaches; }

void flush_lines(pmem::MemoryImage& mem, ThreadId t, const std::set<Addr>& lines) {
  for (Addr a : lines) mem.clwb(t, a);
}

}  // namespace

void redo_commit(LogWriter& log, std::uint32_t tx_id, std::span<const pmem::Fragment> writes) {
  pmem::MemoryImage& mem = log.memory();
  const ThreadId t = log.thread();
  const bool tc = is_transient(mem);
  const std::uint32_t tail = static_cast<std::uint32_t>(log.head());

  if (tc) {
    log.clwb_range(kHeaderBytes, log.head());
    mem.sfence(t);
  }
  log.write_commit_word({tx_id, TxMode::Redo, tail}, tc);
  if (tc) mem.sfence(t);

  std::set<Addr> home;
  for (const auto& w : writes) {
    mem.store(t, w.addr, w.data);
    const std::size_t ls = mem.line_size();
    for (Addr a = line_base(w.addr, ls); a < w.addr + w.data.size(); a += ls) home.insert(a);
  }
  if (tc) {
    flush_lines(mem, t, home);
    mem.sfence(t);
  }
  log.write_commit_word({tx_id, TxMode::Redo, 0}, tc);
  if (tc) mem.sfence(t);
  log.rewind();
}

WalEngine::WalEngine(pmem::MemoryImage& mem, ThreadId thread, LogRegion region, WalFaults faults)
    : mem_(mem), log_(mem, thread, region), faults_(faults) {
  next_tx_id_ = log_.first_safe_tx_id();
}

bool WalEngine::transient() const { return is_transient(mem_); }

TxHandle WalEngine::begin(TxMode mode) {
  if (state_ == State::Active) throw UsageError("nested wal transaction on thread " + std::to_string(thread()));
  if (next_tx_id_ > kMaxTxId) throw Error("transaction id space exhausted");
  reset();
  current_ = TxHandle{next_tx_id_++, mode};
  state_ = State::Active;
  return current_;
}

void WalEngine::require_active(const TxHandle& tx) const {
  if (state_ == State::Aborted && tx.tx_id == current_.tx_id) throw UsageError("transaction already aborted");
  if (state_ != State::Active || tx.tx_id != current_.tx_id) throw UsageError("no such active wal transaction");
}

void WalEngine::reset() {
  home_lines_.clear();
  undo_set_.clear();
  redo_writes_.clear();
  redo_view_.clear();
  log_.rewind();
}

void WalEngine::write(const TxHandle& tx, Addr addr, std::span<const std::uint8_t> value) {
  require_active(tx);
  const std::size_t ls = mem_.line_size();
  std::size_t done = 0;
  while (done < value.size()) {
    const Addr a = addr + done;
    const std::size_t n = std::min(value.size() - done, ls - (a - line_base(a, ls)));
    write_fragment(a, value.subspan(done, n));
    done += n;
  }
}

void WalEngine::write_fragment(Addr addr, std::span<const std::uint8_t> value) {
  const auto id = static_cast<std::uint32_t>(current_.tx_id);
  const bool tc = transient();
  if (!log_.fits(value.size())) {
    rollback_and_truncate();
    state_ = State::Aborted;
    throw LogFull("log region full (capacity " + std::to_string(log_.region().capacity) + " bytes)");
  }

  if (current_.mode == TxMode::Undo) {
    Bytes old = mem_.load(thread(), addr, value.size());
    const auto [begin, end] = log_.append(id, addr, old, false);
    log_.write_commit_word({id, TxMode::Undo, static_cast<std::uint32_t>(end)}, false);
    if (tc) {
      log_.clwb_range(begin, end);
      log_.clwb_header();
      if (!faults_.skip_undo_append_fence) mem_.sfence(thread());
    }
    undo_set_.push_back({addr, std::move(old)});
    mem_.store(thread(), addr, value);
    home_lines_.insert(line_base(addr, mem_.line_size()));
    return;
  }

  log_.append(id, addr, value, false);
  redo_writes_.push_back({addr, Bytes(value.begin(), value.end())});
  for (std::size_t i = 0; i < value.size(); ++i) redo_view_[addr + i] = value[i];
}

Bytes WalEngine::read(const TxHandle& tx, Addr addr, std::size_t len) {
  require_active(tx);
  Bytes out = mem_.load(thread(), addr, len);
  if (current_.mode == TxMode::Redo && !redo_view_.empty()) {
    for (auto it = redo_view_.lower_bound(addr); it != redo_view_.end() && it->first < addr + len; ++it) {
      out[it->first - addr] = it->second;
    }
  }
  return out;
}

void WalEngine::write_u64(const TxHandle& tx, Addr addr, std::uint64_t v) {
  const Bytes b = word_bytes(v);
  write(tx, addr, b);
}

std::uint64_t WalEngine::read_u64(const TxHandle& tx, Addr addr) {
  const Bytes b = read(tx, addr, 8);
  return load_le64(b.data());
}

void WalEngine::commit(const TxHandle& tx) {
  require_active(tx);
  const auto id = static_cast<std::uint32_t>(current_.tx_id);
  const bool tc = transient();

  if (current_.mode == TxMode::Redo) {
    if (!redo_writes_.empty()) redo_commit(log_, id, redo_writes_);
  } else if (!undo_set_.empty()) {
    const CommitWord done{id, TxMode::Undo, 0};
    if (!tc) {
      log_.write_commit_word(done, false);
    } else if (faults_.commit_before_writeset_persist) {
      log_.write_commit_word(done, true);
      mem_.sfence(thread());
      flush_lines(mem_, thread(), home_lines_);
      mem_.sfence(thread());
    } else {
      flush_lines(mem_, thread(), home_lines_);
      mem_.sfence(thread());
      log_.write_commit_word(done, true);
      mem_.sfence(thread());
    }
  }
  state_ = State::Idle;
  reset();
}

void WalEngine::abort(const TxHandle& tx) {
  require_active(tx);
  rollback_and_truncate();
  state_ = State::Aborted;
}

void WalEngine::rollback_and_truncate() {
  if (current_.mode == TxMode::Undo && !undo_set_.empty()) {
    const bool tc = transient();
    for (auto it = undo_set_.rbegin(); it != undo_set_.rend(); ++it) mem_.store(thread(), it->addr, it->old_value);
    if (tc) {
      flush_lines(mem_, thread(), home_lines_);
      mem_.sfence(thread());
    }
    log_.write_commit_word({static_cast<std::uint32_t>(current_.tx_id), TxMode::Undo, 0}, tc);
    if (tc) mem_.sfence(thread());
  }
  reset();
}

}  // namespace pmtx::wal
