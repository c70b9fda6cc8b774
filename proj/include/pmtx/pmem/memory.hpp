#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "pmtx/common.hpp"
#include "pmtx/pmem/byte_image.hpp"
#include "pmtx/pmem/events.hpp"
#include "pmtx/pmem/persist_tracker.hpp"

namespace pmtx::pmem {

struct MemoryConfig {
  std::uint64_t size = 1 << 20;
  std::size_t line_size = kDefaultLineSize;
  PersistenceDomain domain = PersistenceDomain::TransientCaches;
  /// Keep the event log and crash model. Benchmarks turn this off and rely on
  /// counters only.
  bool record_events = true;
  /// Seed for sampled crash-state generation.
  std::uint64_t crash_seed = 0;
};

/// Introspection view of one cache line.
struct CacheLine {
  Addr base_addr = 0;
  std::size_t line_size = 0;
  Bytes volatile_data;
  Bytes persistent_data;
  bool dirty = false;
  bool flush_pending = false;
};

struct Fragment {
  Addr addr;
  Bytes data;
};

/// Simulated NVM behind a cache hierarchy.
///
/// Every operation is atomic with respect to every other and is appended to
/// a totally ordered event log. Loads always see the latest store; what a
/// crash may leave behind is answered by crash_states().
class MemoryImage {
 public:
  explicit MemoryImage(MemoryConfig cfg, ByteImage initial = ByteImage());

  MemoryImage(const MemoryImage&) = delete;
  MemoryImage& operator=(const MemoryImage&) = delete;

  const MemoryConfig& config() const { return cfg_; }
  PersistenceDomain domain() const { return cfg_.domain; }
  std::size_t line_size() const { return cfg_.line_size; }
  std::uint64_t size() const { return cfg_.size; }

  void store(ThreadId t, Addr addr, std::span<const std::uint8_t> value);
  void store_u64(ThreadId t, Addr addr, std::uint64_t v);
  void nt_store(ThreadId t, Addr addr, std::span<const std::uint8_t> value);
  void nt_store_u64(ThreadId t, Addr addr, std::uint64_t v);
  /// Stores that become visible together and, under persistent caches,
  /// persist together.
  void store_group(ThreadId t, std::span<const Fragment> frags);

  Bytes load(ThreadId t, Addr addr, std::size_t len);
  std::uint64_t load_u64(ThreadId t, Addr addr);

  void clwb(ThreadId t, Addr addr);
  void sfence(ThreadId t);
  void drain(ThreadId t);

  /// Appends the Crash event; afterwards the image only answers queries.
  void crash();
  bool crashed() const;

  std::vector<CrashState> crash_states(std::size_t max_states) const;
  std::vector<CrashState> crash_states(std::size_t max_states, std::uint64_t seed) const;
  ByteImage snapshot_persistent(const CrashState& s) const { return s.persisted; }

  ByteImage volatile_image() const;
  CacheLine line(Addr addr) const;
  EventCounters counters() const;
  Counts counters(ThreadId t) const;
  std::vector<PersistEvent> events() const;
  std::size_t event_count() const;

 private:
  void check_range(Addr addr, std::size_t len) const;
  void check_live() const;
  Counts& counts(ThreadId t);
  void record(ThreadId t, EventKind kind, std::optional<Addr> addr, Bytes value, std::uint32_t group = 0);
  const PersistTracker& tracker() const;

  MemoryConfig cfg_;
  mutable std::mutex mu_;
  ByteImage volatile_;
  std::vector<PersistEvent> events_;
  std::unique_ptr<PersistTracker> tracker_;
  std::vector<Counts> counts_;
  Seq next_seq_ = 1;
  std::uint32_t next_group_ = 1;
  bool crashed_ = false;
};

}  // namespace pmtx::pmem
