#include "pmtx/bench/critbit.hpp"

#include <bit>
#include <functional>

namespace pmtx::bench {

namespace {

constexpr std::uint64_t kLeaf = 1;
constexpr std::uint64_t kInternal = 2;

unsigned direction(std::uint64_t key, std::uint64_t bit) { return static_cast<unsigned>((key >> bit) & 1); }

}  // namespace

CritBitTree::CritBitTree(Addr base, std::uint64_t max_nodes) : base_(base), max_nodes_(max_nodes) {
  if (max_nodes == 0) throw ConfigError("crit-bit tree needs at least one node");
}

void CritBitTree::format(TxContext& tx) const {
  tx.write(base_, 0);
  tx.write(base_ + 8, base_ + kHeader);
  tx.write(base_ + 16, 0);
}

Addr CritBitTree::alloc(TxContext& tx) const {
  const Addr n = tx.read(base_ + 8);
  if (n + kNodeBytes > base_ + footprint(max_nodes_)) throw Error("crit-bit tree out of nodes");
  tx.write(base_ + 8, n + kNodeBytes);
  return n;
}

bool CritBitTree::insert(TxContext& tx, std::uint64_t key, std::uint64_t value) const {
  auto new_leaf = [&] {
    const Addr l = alloc(tx);
    tx.write(l, kLeaf);
    tx.write(l + 8, key);
    tx.write(l + 16, value);
    return l;
  };
  const Addr root = tx.read(base_);
  if (root == 0) {
    tx.write(base_, new_leaf());
    tx.write(base_ + 16, 1);
    return true;
  }
  Addr p = root;
  while (tx.read(p) == kInternal) p = tx.read(p + 8 + 8 * direction(key, tx.read(p + 24)));
  const std::uint64_t found = tx.read(p + 8);
  if (found == key) {
    tx.write(p + 16, value);
    return false;
  }
  const std::uint64_t crit = 63 - static_cast<std::uint64_t>(std::countl_zero(found ^ key));

  Addr slot = base_;
  Addr node = root;
  while (tx.read(node) == kInternal) {
    const std::uint64_t bit = tx.read(node + 24);
    if (bit < crit) break;
    slot = node + 8 + 8 * direction(key, bit);
    node = tx.read(slot);
  }
  const Addr leaf = new_leaf();
  const Addr inner = alloc(tx);
  const unsigned d = direction(key, crit);
  tx.write(inner, kInternal);
  tx.write(inner + 8 + 8 * d, leaf);
  tx.write(inner + 8 + 8 * (1 - d), node);
  tx.write(inner + 24, crit);
  tx.write(slot, inner);
  tx.write(base_ + 16, tx.read(base_ + 16) + 1);
  return true;
}

std::optional<std::uint64_t> CritBitTree::lookup(TxContext& tx, std::uint64_t key) const {
  Addr p = tx.read(base_);
  if (p == 0) return std::nullopt;
  while (tx.read(p) == kInternal) p = tx.read(p + 8 + 8 * direction(key, tx.read(p + 24)));
  if (tx.read(p + 8) != key) return std::nullopt;
  return tx.read(p + 16);
}

std::uint64_t CritBitTree::size(TxContext& tx) const { return tx.read(base_ + 16); }

std::optional<std::vector<std::uint64_t>> CritBitTree::check_invariants(TxContext& tx) const {
  std::vector<std::uint64_t> keys;
  const Addr lo = base_ + kHeader;
  const Addr hi = tx.read(base_ + 8);
  // Returns one key of the subtree. Both subtrees of an internal node must
  // agree above its bit and take the side their bit selects.
  std::function<std::optional<std::uint64_t>(Addr, std::uint64_t)> walk =
      [&](Addr node, std::uint64_t above) -> std::optional<std::uint64_t> {
    if (node < lo || node >= hi || (node - lo) % kNodeBytes != 0) return std::nullopt;
    const std::uint64_t kind = tx.read(node);
    if (kind == kLeaf) {
      keys.push_back(tx.read(node + 8));
      return keys.back();
    }
    if (kind != kInternal) return std::nullopt;
    const std::uint64_t bit = tx.read(node + 24);
    if (bit >= above) return std::nullopt;
    const auto l = walk(tx.read(node + 8), bit);
    if (!l) return std::nullopt;
    const auto r = walk(tx.read(node + 16), bit);
    if (!r) return std::nullopt;
    const bool same_prefix = bit == 63 || (*l >> (bit + 1)) == (*r >> (bit + 1));
    if (!same_prefix || direction(*l, bit) != 0 || direction(*r, bit) != 1) return std::nullopt;
    return l;
  };
  const Addr root = tx.read(base_);
  if (root != 0 && !walk(root, 64)) return std::nullopt;
  if (keys.size() != size(tx)) return std::nullopt;
  return keys;
}

}  // namespace pmtx::bench
