#pragma once

#include <cstdint>
#include <optional>

#include "pmtx/common.hpp"
#include "pmtx/tx_context.hpp"

namespace pmtx::bench {

/// Open-addressing hash map with linear probing over 16-byte buckets
/// {key, value}. Key 0 marks an empty bucket. Every method runs inside the
/// caller's transaction. The bucket count is fixed at format time.
class PersistentHashmap {
 public:
  static constexpr Addr kHeader = 64;
  static constexpr std::uint64_t kBucketBytes = 16;

  PersistentHashmap(Addr base, std::uint64_t buckets);

  static std::uint64_t footprint(std::uint64_t buckets) { return kHeader + buckets * kBucketBytes; }
  /// Smallest power of two keeping the load factor at or below one half.
  static std::uint64_t buckets_for(std::uint64_t keys);

  void format(TxContext& tx) const;
  /// Returns true when the key was absent. Throws Error when the table is full.
  bool insert(TxContext& tx, std::uint64_t key, std::uint64_t value) const;
  std::optional<std::uint64_t> lookup(TxContext& tx, std::uint64_t key) const;
  std::uint64_t size(TxContext& tx) const;

  /// Stored count matches occupied buckets and every key is reachable from
  /// its home bucket without crossing an empty one.
  bool check_invariants(TxContext& tx) const;

  std::uint64_t buckets() const { return buckets_; }

 private:
  Addr bucket(std::uint64_t i) const { return base_ + kHeader + (i & (buckets_ - 1)) * kBucketBytes; }
  std::uint64_t home(std::uint64_t key) const;

  Addr base_;
  std::uint64_t buckets_;
};

}  // namespace pmtx::bench
