#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pmtx/common.hpp"
#include "pmtx/tx_context.hpp"

namespace pmtx::bench {

/// Crit-bit tree over 8-byte keys and values with a transactional bump
/// allocator. Nodes are four words:
///   leaf:     {1, key, value, 0}
///   internal: {2, child0, child1, bit}
/// Internal bits strictly decrease from the root down.
class CritBitTree {
 public:
  static constexpr Addr kHeader = 64;  // root, next free node, count
  static constexpr std::uint64_t kNodeBytes = 32;

  CritBitTree(Addr base, std::uint64_t max_nodes);

  static std::uint64_t footprint(std::uint64_t max_nodes) { return kHeader + max_nodes * kNodeBytes; }

  void format(TxContext& tx) const;
  /// Returns true when the key was absent. Throws Error when out of nodes.
  bool insert(TxContext& tx, std::uint64_t key, std::uint64_t value) const;
  std::optional<std::uint64_t> lookup(TxContext& tx, std::uint64_t key) const;
  std::uint64_t size(TxContext& tx) const;

  /// Keys in order; bits decrease along every path and each leaf sits on the
  /// side its key selects. Returns nullopt when the shape is broken.
  std::optional<std::vector<std::uint64_t>> check_invariants(TxContext& tx) const;

 private:
  Addr alloc(TxContext& tx) const;

  Addr base_;
  std::uint64_t max_nodes_;
};

}  // namespace pmtx::bench
