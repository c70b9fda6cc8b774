#pragma once

#include <iosfwd>
#include <vector>

#include "pmtx/pmem/events.hpp"
#include "pmtx/pmem/persist_tracker.hpp"

namespace pmtx::pmem {

// One event per line:
//
//   seq thread kind addr len hexbytes [g=<group>]
//
// addr is 0x-prefixed hex or '-', hexbytes is '-' when empty. Lines starting
// with '#' and blank lines are ignored on input.

void write_trace(std::ostream& os, const std::vector<PersistEvent>& events);
std::vector<PersistEvent> read_trace(std::istream& is);

/// Feeds events into a fresh tracker.
PersistTracker replay_trace(const std::vector<PersistEvent>& events, PersistenceDomain domain,
                            ByteImage initial = ByteImage());

}  // namespace pmtx::pmem
