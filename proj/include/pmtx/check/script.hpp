#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmtx/pmem/byte_image.hpp"
#include "pmtx/tx/op_list.hpp"
#include "pmtx/tx/runtime.hpp"

namespace pmtx::check {

struct CrashPolicy {
  enum class Kind { EveryEvent, SampledK, AtEvent };
  Kind kind = Kind::EveryEvent;
  std::uint64_t seed = 0;    // SampledK
  std::size_t k = 0;         // SampledK: number of crash points
  Seq at = 0;                // AtEvent: crash right after this event
  std::size_t max_states = 4096;

  static CrashPolicy every_event() { return {}; }
  static CrashPolicy sampled(std::uint64_t seed, std::size_t k) { return {Kind::SampledK, seed, k, 0}; }
  static CrashPolicy at_event(Seq s) { return {Kind::AtEvent, 0, 0, s}; }
};

/// Per-thread transaction lists plus how to interleave and where to crash.
///
/// Text form, one directive per line ('#' comments):
///   init ADDR VALUE
///   T<n>: OPS            one transaction appended to thread n
///   schedule 0 1 1 0     explicit yield choices
///   schedule-seed 7      random choices once the schedule runs out
///   crash every | crash sample SEED K | crash at SEQ
///   max-states N
struct WorkloadScript {
  std::vector<std::vector<tx::OpList>> threads;
  std::map<Addr, std::uint64_t> initial;
  std::vector<ThreadId> schedule;
  std::optional<std::uint64_t> schedule_seed;
  CrashPolicy crash;

  std::size_t tx_count() const;
  pmem::ByteImage initial_image(std::size_t line_size) const;
  /// Every address read or written by some op, plus initialized ones.
  std::vector<Addr> addresses() const;
};

WorkloadScript parse_script(const std::string& text);
std::string format_script(const WorkloadScript& s);

/// T1 writes pA and pB; T2 reads pA, writes pD only if it saw T1's pA, then
/// writes pC. T1 runs to completion before T2 starts.
struct DependencyScript {
  static constexpr Addr pA = 0x000, pB = 0x040, pC = 0x080, pD = 0x0c0;
  static constexpr std::uint64_t x = 1, y = 2, z = 3, w = 4;
  static WorkloadScript make();
};

/// What one committed transaction did on its final attempt.
struct TxRecord {
  ThreadId thread = 0;
  std::size_t index = 0;
  /// Values read from memory before any own write to the address.
  std::map<Addr, std::uint64_t> reads;
  /// Last value written per address.
  std::map<Addr, std::uint64_t> writes;
  /// Event-log length when the first attempt started and when it returned.
  std::size_t begin_event = 0;
  std::size_t done_event = 0;
  std::uint64_t stamp = 0;
  bool fast_path = true;
};

struct Execution {
  tx::MechanismConfig config;
  std::unique_ptr<tx::Runtime> runtime;
  std::vector<TxRecord> txs;
  std::vector<ThreadId> schedule;  // realized choices; replays the run
  pmem::ByteImage initial;
};

/// Runs the script under the cooperative scheduler. `cfg.threads` is taken
/// from the script. Throws UsageError for addresses outside the heap.
Execution execute_script(const WorkloadScript& script, tx::MechanismConfig cfg,
                         std::optional<std::vector<ThreadId>> schedule_override = std::nullopt);

}  // namespace pmtx::check
