#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmtx/tx/config.hpp"
#include "pmtx/tx/runtime.hpp"

namespace pmtx::bench {

enum class WorkloadKind { Hashmap, CritBitTree, Synthetic };

const char* to_string(WorkloadKind k);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::Synthetic;
  std::uint64_t ops = 1000;           // transactions per thread
  std::uint64_t key_space = 4096;     // keys, or cache-line slots for Synthetic
  double read_fraction = 0.0;         // lookups, or read-only transactions for Synthetic
  std::uint64_t tx_reads = 10;        // Synthetic
  std::uint64_t tx_writes = 2;        // Synthetic
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  std::string preset;                 // name when built from a preset

  void validate() const;
};

/// Approximate transaction shapes: "small" (10 reads, 2 writes), "moderate"
/// (2000 reads, 1200 writes) and "labyrinth" (read sets far beyond the
/// hardware capacity).
WorkloadSpec preset(const std::string& name);
const std::vector<std::string>& preset_names();

/// Accepts hashmap, ctree/critbit, synthetic, or a preset name.
WorkloadSpec parse_workload(const std::string& name);

/// Applies workload keys (workload, ops, key_space, read_fraction, tx_reads,
/// tx_writes) and erases them from `kv`.
WorkloadSpec apply_workload(WorkloadSpec base, std::map<std::string, std::string>& kv);

/// Heap bytes the workload needs for its structure or slots.
std::uint64_t heap_bytes(const WorkloadSpec& spec, std::size_t line_size);

struct ThreadReport {
  std::uint64_t commits = 0;
  std::uint64_t fast_path = 0;
  std::uint64_t hits = 0;  // successful lookups
};

struct RunReport {
  WorkloadSpec spec;
  tx::MechanismConfig config;
  double wall_ms = 0;
  tx::TxStats stats;
  double success_rate = 1.0;
  std::vector<ThreadReport> per_thread;
  bool invariants_ok = true;
};

struct RunOptions {
  /// Cooperative single-stepper seeded from spec.seed: reports become
  /// reproducible at the price of speed.
  bool deterministic = false;
};

/// Runs the workload through the mechanism. Structure setup runs before the
/// timed region and is excluded from the counters; the structure invariants
/// are verified afterwards.
RunReport run_workload(const WorkloadSpec& spec, tx::MechanismConfig cfg, RunOptions opts = {});

std::string csv_header();
std::string csv_row(const RunReport& r);
/// One JSON object; wall_ms is the only field that varies between
/// deterministic runs.
std::string to_json(const RunReport& r, bool include_wall_time = true);

}  // namespace pmtx::bench
