#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "pmtx/pmem/memory.hpp"
#include "pmtx/wal/log_format.hpp"

namespace pmtx::wal {

/// Store-level access to one thread's log region. Issues exactly the memory
/// operations it is asked for; ordering policy belongs to the callers.
class LogWriter {
 public:
  LogWriter(pmem::MemoryImage& mem, ThreadId thread, LogRegion region);

  const LogRegion& region() const { return region_; }
  ThreadId thread() const { return thread_; }
  pmem::MemoryImage& memory() const { return mem_; }

  /// Append cursor, as an offset from the region base.
  std::uint64_t head() const { return head_; }
  bool fits(std::size_t payload_len) const;

  /// Writes one entry at the cursor and returns its [begin, end) offsets.
  std::pair<std::uint64_t, std::uint64_t> append(std::uint64_t tx_id, Addr addr, std::span<const std::uint8_t> payload,
                                                 bool non_temporal);
  void clwb_range(std::uint64_t from, std::uint64_t to);
  void write_commit_word(const CommitWord& w, bool non_temporal);
  void clwb_header();
  void rewind() { head_ = kHeaderBytes; }

  /// First tx id that cannot collide with any entry already in the region.
  std::uint32_t first_safe_tx_id();

  std::uint64_t bytes_appended() const { return bytes_appended_; }

 private:
  pmem::MemoryImage& mem_;
  ThreadId thread_;
  LogRegion region_;
  std::uint64_t head_ = kHeaderBytes;
  std::uint64_t bytes_appended_ = 0;
};

}  // namespace pmtx::wal
