#include "pmtx/pmem/memory.hpp"

namespace pmtx::pmem {

MemoryImage::MemoryImage(MemoryConfig cfg, ByteImage initial) : cfg_(cfg), volatile_(cfg.line_size) {
  if (cfg_.line_size == 0 || cfg_.line_size % kWordSize != 0) throw ConfigError("line size must be a multiple of 8");
  if (initial.line_size() != cfg_.line_size) throw ConfigError("initial image line size mismatch");
  for (const auto& [base, data] : initial.lines()) {
    if (base + cfg_.line_size > cfg_.size) throw AddressFault(base);
  }
  volatile_ = initial;
  if (cfg_.record_events) tracker_ = std::make_unique<PersistTracker>(cfg_.domain, std::move(initial));
}

void MemoryImage::check_range(Addr addr, std::size_t len) const {
  if (addr >= cfg_.size || len > cfg_.size - addr) throw AddressFault(addr);
}

void MemoryImage::check_live() const {
  if (crashed_) throw UsageError("memory image has crashed; only analysis is allowed");
}

Counts& MemoryImage::counts(ThreadId t) {
  if (t >= counts_.size()) counts_.resize(t + 1);
  return counts_[t];
}

void MemoryImage::record(ThreadId t, EventKind kind, std::optional<Addr> addr, Bytes value, std::uint32_t group) {
  if (!cfg_.record_events) return;
  PersistEvent e{next_seq_++, t, kind, addr, std::move(value), group};
  tracker_->apply(e);
  events_.push_back(std::move(e));
}

void MemoryImage::store(ThreadId t, Addr addr, std::span<const std::uint8_t> value) {
  std::lock_guard lk(mu_);
  check_live();
  check_range(addr, value.size());
  volatile_.write(addr, value);
  ++counts(t).stores;
  record(t, EventKind::Store, addr, Bytes(value.begin(), value.end()));
}

void MemoryImage::store_u64(ThreadId t, Addr addr, std::uint64_t v) {
  const Bytes b = word_bytes(v);
  store(t, addr, b);
}

void MemoryImage::nt_store(ThreadId t, Addr addr, std::span<const std::uint8_t> value) {
  std::lock_guard lk(mu_);
  check_live();
  check_range(addr, value.size());
  volatile_.write(addr, value);
  ++counts(t).nt_stores;
  record(t, EventKind::NtStore, addr, Bytes(value.begin(), value.end()));
}

void MemoryImage::nt_store_u64(ThreadId t, Addr addr, std::uint64_t v) {
  const Bytes b = word_bytes(v);
  nt_store(t, addr, b);
}

void MemoryImage::store_group(ThreadId t, std::span<const Fragment> frags) {
  std::lock_guard lk(mu_);
  check_live();
  for (const auto& f : frags) check_range(f.addr, f.data.size());
  const std::uint32_t group = next_group_++;
  for (const auto& f : frags) {
    volatile_.write(f.addr, f.data);
    ++counts(t).stores;
    record(t, EventKind::Store, f.addr, f.data, group);
  }
}

Bytes MemoryImage::load(ThreadId t, Addr addr, std::size_t len) {
  std::lock_guard lk(mu_);
  check_range(addr, len);
  ++counts(t).loads;
  return volatile_.read(addr, len);
}

std::uint64_t MemoryImage::load_u64(ThreadId t, Addr addr) {
  std::lock_guard lk(mu_);
  check_range(addr, 8);
  ++counts(t).loads;
  return volatile_.read_u64(addr);
}

void MemoryImage::clwb(ThreadId t, Addr addr) {
  std::lock_guard lk(mu_);
  check_live();
  check_range(addr, 1);
  ++counts(t).clwbs;
  record(t, EventKind::Clwb, addr, {});
}

void MemoryImage::sfence(ThreadId t) {
  std::lock_guard lk(mu_);
  check_live();
  ++counts(t).sfences;
  record(t, EventKind::Sfence, std::nullopt, {});
}

void MemoryImage::drain(ThreadId t) {
  std::lock_guard lk(mu_);
  check_live();
  ++counts(t).drains;
  record(t, EventKind::Drain, std::nullopt, {});
}

void MemoryImage::crash() {
  std::lock_guard lk(mu_);
  check_live();
  crashed_ = true;
  record(0, EventKind::Crash, std::nullopt, {});
}

bool MemoryImage::crashed() const {
  std::lock_guard lk(mu_);
  return crashed_;
}

const PersistTracker& MemoryImage::tracker() const {
  if (!tracker_) throw UsageError("event recording is disabled for this memory image");
  return *tracker_;
}

std::vector<CrashState> MemoryImage::crash_states(std::size_t max_states) const {
  return crash_states(max_states, cfg_.crash_seed);
}

std::vector<CrashState> MemoryImage::crash_states(std::size_t max_states, std::uint64_t seed) const {
  std::lock_guard lk(mu_);
  if (!crashed_) throw UsageError("crash_states requires a finalized trace (call crash() first)");
  return tracker().states(max_states, seed);
}

ByteImage MemoryImage::volatile_image() const {
  std::lock_guard lk(mu_);
  return volatile_;
}

CacheLine MemoryImage::line(Addr addr) const {
  std::lock_guard lk(mu_);
  check_range(addr, 1);
  const Addr base = line_base(addr, cfg_.line_size);
  CacheLine l;
  l.base_addr = base;
  l.line_size = cfg_.line_size;
  l.volatile_data = volatile_.line(base);
  l.persistent_data = tracker().guaranteed_line(base);
  l.dirty = l.volatile_data != l.persistent_data;
  l.flush_pending = tracker().flush_pending(base);
  return l;
}

EventCounters MemoryImage::counters() const {
  std::lock_guard lk(mu_);
  return EventCounters{counts_};
}

Counts MemoryImage::counters(ThreadId t) const {
  std::lock_guard lk(mu_);
  return t < counts_.size() ? counts_[t] : Counts{};
}

std::vector<PersistEvent> MemoryImage::events() const {
  std::lock_guard lk(mu_);
  return events_;
}

std::size_t MemoryImage::event_count() const {
  std::lock_guard lk(mu_);
  return events_.size();
}

}  // namespace pmtx::pmem
