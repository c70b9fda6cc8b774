#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>

#include "pmtx/common.hpp"
#include "pmtx/pmem/byte_image.hpp"

namespace pmtx::wal {

enum class TxMode { Undo, Redo };

const char* to_string(TxMode m);
inline std::ostream& operator<<(std::ostream& os, TxMode v) { return os << to_string(v); }
TxMode parse_tx_mode(const std::string& s);

// Region layout (offsets relative to the region base):
//
//   [0, 64)    header line; the commit word lives at offset 0
//   [64, cap)  entries, each 8-byte aligned:
//                tx_id:u64 addr:u64 len:u32 checksum:u32 payload[len] pad
//
// Commit word: bits 0..31 tail (end offset of the valid entries, 0 = empty),
// bits 32..62 tx id of the transaction the entries belong to, bit 63 set for
// redo. It is one aligned 8-byte word, so it persists atomically.

inline constexpr std::uint64_t kHeaderBytes = 64;
inline constexpr std::uint64_t kEntryHeaderBytes = 24;
inline constexpr std::uint64_t kDefaultLogCapacity = 10ULL << 20;  // per thread
inline constexpr std::uint64_t kMaxTxId = (1ULL << 31) - 1;

struct LogRegion {
  Addr base = 0;
  std::uint64_t capacity = kDefaultLogCapacity;
};

struct CommitWord {
  std::uint32_t tx_id = 0;
  TxMode mode = TxMode::Undo;
  std::uint32_t tail = 0;

  std::uint64_t encode() const;
  static CommitWord decode(std::uint64_t w);
};

struct LogEntry {
  std::uint64_t tx_id = 0;
  Addr addr = 0;
  Bytes payload;
};

std::uint32_t entry_checksum(std::uint64_t tx_id, Addr addr, std::span<const std::uint8_t> payload);
std::uint64_t entry_size(std::size_t payload_len);
Bytes encode_entry(std::uint64_t tx_id, Addr addr, std::span<const std::uint8_t> payload);

/// Parses the entry at absolute address `at`; nullopt when it does not fit
/// below `limit` or its checksum does not verify.
std::optional<LogEntry> decode_entry(const pmem::ByteImage& img, Addr at, Addr limit);

/// Bytes a region of `entries` entries of `payload_len` bytes needs.
std::uint64_t capacity_for_entries(std::size_t entries, std::size_t payload_len = kWordSize);

}  // namespace pmtx::wal
