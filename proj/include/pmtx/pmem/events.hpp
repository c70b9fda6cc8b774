#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmtx/common.hpp"

namespace pmtx::pmem {

enum class EventKind {
  Store,
  NtStore,
  Clwb,
  Sfence,
  /// Serializing instruction (locked RMW, xend). Drains the store buffer
  /// without flushing caches; never counted as an sfence.
  Drain,
  Crash,
};

const char* to_string(EventKind k);
EventKind parse_event_kind(const std::string& s);

struct PersistEvent {
  Seq seq = 0;
  ThreadId thread = 0;
  EventKind kind = EventKind::Store;
  std::optional<Addr> addr;
  Bytes value;
  /// Non-zero for stores that belong to one atomically persisted group.
  std::uint32_t group = 0;

  bool is_store() const { return kind == EventKind::Store || kind == EventKind::NtStore; }
  friend bool operator==(const PersistEvent&, const PersistEvent&) = default;
};

struct Counts {
  std::uint64_t stores = 0;
  std::uint64_t nt_stores = 0;
  std::uint64_t clwbs = 0;
  std::uint64_t sfences = 0;
  std::uint64_t drains = 0;
  std::uint64_t loads = 0;

  Counts& operator+=(const Counts& o);
  friend Counts operator-(Counts a, const Counts& b);
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct EventCounters {
  std::vector<Counts> per_thread;

  Counts total() const;
  Counts thread(ThreadId t) const { return t < per_thread.size() ? per_thread[t] : Counts{}; }
};

}  // namespace pmtx::pmem
