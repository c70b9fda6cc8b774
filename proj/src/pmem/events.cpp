#include "pmtx/pmem/events.hpp"

namespace pmtx::pmem {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Store: return "store";
    case EventKind::NtStore: return "ntstore";
    case EventKind::Clwb: return "clwb";
    case EventKind::Sfence: return "sfence";
    case EventKind::Drain: return "drain";
    case EventKind::Crash: return "crash";
  }
  return "?";
}

EventKind parse_event_kind(const std::string& s) {
  if (s == "store") return EventKind::Store;
  if (s == "ntstore") return EventKind::NtStore;
  if (s == "clwb") return EventKind::Clwb;
  if (s == "sfence") return EventKind::Sfence;
  if (s == "drain") return EventKind::Drain;
  if (s == "crash") return EventKind::Crash;
  throw UsageError("unknown event kind '" + s + "'");
}

Counts& Counts::operator+=(const Counts& o) {
  stores += o.stores;
  nt_stores += o.nt_stores;
  clwbs += o.clwbs;
  sfences += o.sfences;
  drains += o.drains;
  loads += o.loads;
  return *this;
}

Counts operator-(Counts a, const Counts& b) {
  a.stores -= b.stores;
  a.nt_stores -= b.nt_stores;
  a.clwbs -= b.clwbs;
  a.sfences -= b.sfences;
  a.drains -= b.drains;
  a.loads -= b.loads;
  return a;
}

Counts EventCounters::total() const {
  Counts sum;
  for (const auto& c : per_thread) sum += c;
  return sum;
}

}  // namespace pmtx::pmem
