#pragma once

// Crash-point sweep for single-threaded runs: after every event prefix and
// for every admissible crash state, recovery must yield the heap observed
// after some commit j with durable <= j <= started.

#include <algorithm>
#include <functional>
#include <span>
#include <vector>

#include "pmtx/pmem/memory.hpp"
#include "pmtx/pmem/trace_io.hpp"

namespace pmtx::oracle {

struct SweepResult {
  std::size_t crash_points = 0;
  std::size_t states = 0;
  std::size_t violations = 0;
};

using Recover = std::function<pmem::ByteImage(const pmem::ByteImage&)>;

inline SweepResult prefix_sweep(pmem::MemoryImage& m, Addr heap_hi, int txs, const std::function<void(int)>& run_tx,
                                const Recover& recover, std::size_t max_states = 4096,
                                const pmem::ByteImage& initial = pmem::ByteImage()) {
  std::vector<pmem::ByteImage> committed{m.volatile_image().slice(0, heap_hi)};
  std::vector<std::size_t> commit_event;
  std::vector<Seq> commit_store;
  for (int k = 0; k < txs; ++k) {
    run_tx(k);
    committed.push_back(m.volatile_image().slice(0, heap_hi));
    commit_event.push_back(m.event_count());
    const auto evs = m.events();
    auto it = std::find_if(evs.rbegin(), evs.rend(), [](const auto& e) { return e.is_store(); });
    commit_store.push_back(it == evs.rend() ? 0 : it->seq);
  }
  const auto events = m.events();
  SweepResult out;
  pmem::PersistTracker tracker(m.domain(), initial);
  for (std::size_t cut = 0; cut <= events.size(); ++cut) {
    if (cut > 0) tracker.apply(events[cut - 1]);
    if (cut < events.size() && cut > 0 && events[cut].group != 0 && events[cut].group == events[cut - 1].group) {
      continue;
    }
    const auto done = static_cast<std::size_t>(
        std::upper_bound(commit_event.begin(), commit_event.end(), cut) - commit_event.begin());
    std::size_t durable = 0;
    while (durable < done && (commit_store[durable] == 0 || tracker.guaranteed(commit_store[durable]))) ++durable;
    const std::size_t started = std::min(done + 1, committed.size() - 1);
    ++out.crash_points;
    for (const auto& s : tracker.states(max_states, cut)) {
      ++out.states;
      const auto heap = recover(s.persisted).slice(0, heap_hi);
      bool ok = false;
      for (std::size_t j = durable; j <= started && !ok; ++j) ok = heap == committed[j];
      if (!ok) ++out.violations;
    }
  }
  return out;
}

}  // namespace pmtx::oracle
