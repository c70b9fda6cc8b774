#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "pmtx/common.hpp"
#include "pmtx/pmem/byte_image.hpp"
#include "pmtx/pmem/events.hpp"

namespace pmtx::pmem {

/// One admissible post-crash persistent image.
struct CrashState {
  /// Complete image: initial contents overlaid with every persisted store.
  ByteImage persisted;
  /// Seq numbers of the Store/NtStore events whose effect is persisted.
  std::vector<Seq> witness;
  /// Position in the tracker's choice space; replaying the same event
  /// prefix and choice reproduces the state exactly.
  std::vector<std::uint32_t> choice;
};

/// Incremental model of what may survive a crash at the current point of an
/// event stream.
///
/// Transient caches: every line keeps its store history. A line persists at
/// some prefix of that history, never below its floor; the floor advances
/// when a thread's sfence completes an earlier clwb or nt-store of the line.
///
/// Persistent caches: every thread's stores persist as a program-order
/// prefix, in units (a store group is one unit). Sfence and drain make the
/// issuing thread's stores guaranteed.
class PersistTracker {
 public:
  PersistTracker(PersistenceDomain domain, ByteImage initial);

  PersistenceDomain domain() const { return domain_; }
  std::size_t line_size() const { return initial_.line_size(); }

  void apply(const PersistEvent& e);

  /// Number of independent choice dimensions and their sizes.
  std::vector<std::uint32_t> radix() const;
  /// Number of admissible states, saturating at UINT64_MAX.
  std::uint64_t state_count() const;

  CrashState state(std::span<const std::uint32_t> choice) const;
  CrashState minimal() const;
  CrashState maximal() const;

  /// Exhaustive when state_count() <= max_states, otherwise a deterministic
  /// sample of max_states distinct states that includes minimal and maximal.
  std::vector<CrashState> states(std::size_t max_states, std::uint64_t seed) const;

  /// Store events not yet persist-guaranteed, in seq order.
  std::vector<Seq> candidates() const;
  bool guaranteed(Seq s) const;

  /// Line value every crash state is guaranteed to contain.
  Bytes guaranteed_line(Addr base) const;
  bool flush_pending(Addr base) const;

 private:
  struct Version {
    Seq seq;
    Bytes value;
  };
  struct LineHistory {
    std::vector<Version> versions;  // versions[0] is the initial content
    std::size_t floor = 0;
  };
  struct PcStore {
    Seq seq;
    ThreadId thread;
    Addr addr;
    Bytes value;
  };
  struct PcWindow {
    std::vector<std::size_t> stores;    // indices into pc_stores_
    std::vector<std::size_t> unit_end;  // cumulative store count per unit
    std::vector<std::uint32_t> unit_group;
    std::size_t guaranteed_units = 0;
  };

  void apply_transient(const PersistEvent& e);
  void apply_persistent(const PersistEvent& e);
  LineHistory& history(Addr base);
  std::vector<Addr> open_lines() const;
  std::vector<ThreadId> open_threads() const;
  void fill_witness(CrashState& s) const;

  PersistenceDomain domain_;
  ByteImage initial_;

  // transient caches
  std::map<Addr, LineHistory> lines_;
  std::map<ThreadId, std::vector<std::pair<Addr, std::size_t>>> pending_;
  std::map<Seq, std::uint32_t> fragments_;

  // persistent caches
  std::vector<PcStore> pc_stores_;
  std::map<ThreadId, PcWindow> windows_;
};

}  // namespace pmtx::pmem
