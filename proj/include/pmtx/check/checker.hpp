#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pmtx/check/script.hpp"
#include "pmtx/pmem/persist_tracker.hpp"

namespace pmtx::check {

enum class Property { Atomicity, Dependency, Serializability };

const char* to_string(Property p);
Property parse_property(const std::string& s);

struct Counterexample {
  Property property = Property::Atomicity;
  Seq crash_seq = 0;                // crash right after this event
  std::string witness;              // hex bitmask over the unguaranteed stores at the crash point
  std::vector<std::uint32_t> choice;
  std::string expected;             // digest of the closest admissible heap
  std::string actual;               // digest of the recovered (or final) heap
  std::vector<ThreadId> schedule;   // realized schedule of the failing run
  pmem::ByteImage recovered;        // not serialized
};

struct Verdict {
  bool pass = true;
  Property property = Property::Atomicity;
  std::size_t crash_points = 0;
  std::size_t states = 0;
  std::optional<Counterexample> counterexample;
};

/// One record per line: "verdict=pass property=... crash_points=N states=M"
/// or "verdict=fail property=... crash_seq=... witness=... choice=...
/// expected=... actual=... schedule=...".
std::string format_verdict(const Verdict& v);
Verdict parse_verdict(const std::string& line);

/// Calls `visit` for every crash point and admissible crash state selected by
/// the policy, with the recovered heap. Stops early when `visit` returns false.
struct CrashVisit {
  Seq cut = 0;
  const pmem::PersistTracker* tracker = nullptr;
  const pmem::CrashState* state = nullptr;
  const pmem::ByteImage* heap = nullptr;
};
void for_each_crash(const Execution& ex, const CrashPolicy& policy, const std::function<bool(const CrashVisit&)>& visit,
                    std::size_t* crash_points = nullptr, std::size_t* states = nullptr);

/// Recovered heap == initial + S in stamp order, S per-thread prefix-closed,
/// containing every transaction finished before the crash and only ones
/// started before it.
Verdict check_atomicity(const WorkloadScript& script, const tx::MechanismConfig& cfg);
Verdict check_atomicity(const Execution& ex, const CrashPolicy& policy);

/// Additionally S must be closed under reads-from.
Verdict check_dependency_order(const WorkloadScript& script, const tx::MechanismConfig& cfg);
Verdict check_dependency_order(const Execution& ex, const CrashPolicy& policy);

inline constexpr std::size_t kSerialMaxThreads = 3;
inline constexpr std::size_t kSerialMaxTxs = 3;
inline constexpr std::size_t kSerialMaxAddrs = 4;

/// Crash-free final heap equals some per-thread-order-preserving serial
/// execution. Throws UsageError above 3 threads, 3 transactions per thread
/// or 4 addresses.
Verdict check_serializable(const WorkloadScript& script, const tx::MechanismConfig& cfg);

/// Re-runs the script on the counterexample's schedule, rebuilds the crash
/// state from its choice and re-evaluates the property.
Verdict replay(const WorkloadScript& script, const tx::MechanismConfig& cfg, const Counterexample& cx);

}  // namespace pmtx::check
