#pragma once

#include <cstddef>
#include <span>

#include "pmtx/pmem/byte_image.hpp"
#include "pmtx/wal/log_format.hpp"

namespace pmtx::wal {

struct RecoveryStats {
  std::size_t rolled_back = 0;   // undo regions with a live transaction
  std::size_t rolled_forward = 0;  // redo regions with a committed transaction
  std::size_t entries_applied = 0;
};

/// Brings one region's live transaction to a consistent end and truncates
/// the region. Undo: entries under the tail that belong to the logged
/// transaction are applied newest first; a torn final append is ignored.
/// Redo: every entry under the tail is replayed in order, and any entry that
/// fails verification is corruption.
void recover_region(pmem::ByteImage& image, const LogRegion& region, RecoveryStats* stats = nullptr);

/// Recovers every region on a copy of `snapshot`. Idempotent.
pmem::ByteImage wal_recover(const pmem::ByteImage& snapshot, std::span<const LogRegion> regions,
                            RecoveryStats* stats = nullptr);

}  // namespace pmtx::wal
