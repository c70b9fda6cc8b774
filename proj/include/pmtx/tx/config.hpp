#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "pmtx/common.hpp"
#include "pmtx/htm/htm.hpp"
#include "pmtx/wal/log_format.hpp"
#include "pmtx/wal/wal_engine.hpp"

namespace pmtx::tx {

enum class Mechanism { Seq, SpinUndo, SpinRedo, Stm, CcStm, Htm, CcHtmUndoFb, CcHtmRedoFb };

inline constexpr Mechanism kAllMechanisms[] = {Mechanism::Seq,  Mechanism::SpinUndo,    Mechanism::SpinRedo,
                                               Mechanism::Stm,  Mechanism::CcStm,       Mechanism::Htm,
                                               Mechanism::CcHtmUndoFb, Mechanism::CcHtmRedoFb};

const char* to_string(Mechanism m);
inline std::ostream& operator<<(std::ostream& os, Mechanism v) { return os << to_string(v); }
Mechanism parse_mechanism(const std::string& s);

bool uses_htm(Mechanism m);
bool uses_cc_htm(Mechanism m);
bool uses_stm(Mechanism m);
/// Mechanisms that keep a write-ahead log region per thread.
bool uses_wal(Mechanism m);

struct MechanismConfig {
  Mechanism mechanism = Mechanism::SpinUndo;
  PersistenceDomain domain = PersistenceDomain::TransientCaches;
  htm::HtmConfig htm;  // cc_enabled and, for ccHTM, fallback_mode follow the mechanism
  std::uint64_t log_capacity = wal::kDefaultLogCapacity;
  std::uint64_t htm_log_capacity = 0;  // 0: same as log_capacity
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::uint64_t heap_size = 1 << 20;
  std::size_t line_size = kDefaultLineSize;
  /// Protocol mutations for checker sensitivity tests.
  wal::WalFaults faults;

  /// Throws ConfigError on invalid combinations.
  void validate() const;
  /// HtmConfig with the mechanism-derived fields filled in.
  htm::HtmConfig effective_htm() const;
};

/// Address-space layout: heap at [0, heap_size), then per thread a wal
/// region and, for ccHTM, a fast-path log region.
struct Layout {
  std::uint64_t heap_size = 0;
  std::vector<wal::LogRegion> wal;
  std::vector<wal::LogRegion> htm;
  std::uint64_t total = 0;

  std::vector<wal::LogRegion> all_regions() const;
};

Layout layout_for(const MechanismConfig& cfg);

/// key=value lines; '#' starts a comment.
std::map<std::string, std::string> parse_key_values(std::istream& in);

/// Applies the mechanism keys found in `kv` onto `base` and erases them
/// from `kv`; whatever remains belongs to the caller (workload keys).
MechanismConfig apply_config(MechanismConfig base, std::map<std::string, std::string>& kv);

}  // namespace pmtx::tx
