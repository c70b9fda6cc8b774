#include "pmtx/bench/hashmap.hpp"

#include <bit>

namespace pmtx::bench {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

PersistentHashmap::PersistentHashmap(Addr base, std::uint64_t buckets) : base_(base), buckets_(buckets) {
  if (buckets == 0 || !std::has_single_bit(buckets)) throw ConfigError("hashmap bucket count must be a power of two");
}

std::uint64_t PersistentHashmap::buckets_for(std::uint64_t keys) { return std::bit_ceil(std::max<std::uint64_t>(2 * keys, 2)); }

std::uint64_t PersistentHashmap::home(std::uint64_t key) const { return mix(key) & (buckets_ - 1); }

void PersistentHashmap::format(TxContext& tx) const {
  tx.write(base_, buckets_);
  tx.write(base_ + 8, 0);
}

bool PersistentHashmap::insert(TxContext& tx, std::uint64_t key, std::uint64_t value) const {
  if (key == 0) throw UsageError("hashmap key 0 is reserved");
  const std::uint64_t h = home(key);
  for (std::uint64_t i = 0; i < buckets_; ++i) {
    const Addr b = bucket(h + i);
    const std::uint64_t k = tx.read(b);
    if (k == key) {
      tx.write(b + 8, value);
      return false;
    }
    if (k == 0) {
      tx.write(b, key);
      tx.write(b + 8, value);
      tx.write(base_ + 8, tx.read(base_ + 8) + 1);
      return true;
    }
  }
  throw Error("hashmap full");
}

std::optional<std::uint64_t> PersistentHashmap::lookup(TxContext& tx, std::uint64_t key) const {
  if (key == 0) return std::nullopt;
  const std::uint64_t h = home(key);
  for (std::uint64_t i = 0; i < buckets_; ++i) {
    const Addr b = bucket(h + i);
    const std::uint64_t k = tx.read(b);
    if (k == key) return tx.read(b + 8);
    if (k == 0) return std::nullopt;
  }
  return std::nullopt;
}

std::uint64_t PersistentHashmap::size(TxContext& tx) const { return tx.read(base_ + 8); }

bool PersistentHashmap::check_invariants(TxContext& tx) const {
  if (tx.read(base_) != buckets_) return false;
  std::uint64_t used = 0;
  for (std::uint64_t i = 0; i < buckets_; ++i) {
    const std::uint64_t k = tx.read(bucket(i));
    if (k == 0) continue;
    ++used;
    for (std::uint64_t j = home(k); (j & (buckets_ - 1)) != i; ++j) {
      if (tx.read(bucket(j)) == 0) return false;
    }
  }
  return used == size(tx);
}

}  // namespace pmtx::bench
