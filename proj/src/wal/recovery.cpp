#include "pmtx/wal/recovery.hpp"

#include <vector>

namespace pmtx::wal {

void recover_region(pmem::ByteImage& image, const LogRegion& region, RecoveryStats* stats) {
  const CommitWord cw = CommitWord::decode(image.read_u64(region.base));
  if (cw.tail == 0) return;
  if (cw.tail < kHeaderBytes || cw.tail > region.capacity) {
    throw CorruptLog("log tail " + std::to_string(cw.tail) + " outside region");
  }

  std::vector<LogEntry> entries;
  const Addr limit = region.base + cw.tail;
  Addr at = region.base + kHeaderBytes;
  while (at < limit) {
    auto e = decode_entry(image, at, limit);
    const bool valid = e && e->tx_id == cw.tx_id;
    if (!valid) {
      if (cw.mode == TxMode::Undo) break;
      throw CorruptLog("redo entry at offset " + std::to_string(at - region.base) + " fails verification");
    }
    at += entry_size(e->payload.size());
    entries.push_back(std::move(*e));
  }

  if (cw.mode == TxMode::Redo) {
    for (const auto& e : entries) image.write(e.addr, e.payload);
    if (stats) ++stats->rolled_forward;
  } else {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) image.write(it->addr, it->payload);
    if (stats) ++stats->rolled_back;
  }
  if (stats) stats->entries_applied += entries.size();
  image.write_u64(region.base, CommitWord{cw.tx_id, cw.mode, 0}.encode());
}

pmem::ByteImage wal_recover(const pmem::ByteImage& snapshot, std::span<const LogRegion> regions,
                            RecoveryStats* stats) {
  pmem::ByteImage out = snapshot;
  for (const auto& r : regions) recover_region(out, r, stats);
  return out;
}

}  // namespace pmtx::wal
