#include "pmtx/wal/log_format.hpp"

#include <boost/crc.hpp>

namespace pmtx::wal {

const char* to_string(TxMode m) { return m == TxMode::Undo ? "undo" : "redo"; }

TxMode parse_tx_mode(const std::string& s) {
  if (s == "undo") return TxMode::Undo;
  if (s == "redo") return TxMode::Redo;
  throw ConfigError("unknown logging mode '" + s + "'");
}

std::uint64_t CommitWord::encode() const {
  return (mode == TxMode::Redo ? 1ULL << 63 : 0) | (static_cast<std::uint64_t>(tx_id & kMaxTxId) << 32) | tail;
}

CommitWord CommitWord::decode(std::uint64_t w) {
  CommitWord c;
  c.tail = static_cast<std::uint32_t>(w);
  c.tx_id = static_cast<std::uint32_t>((w >> 32) & kMaxTxId);
  c.mode = (w >> 63) != 0 ? TxMode::Redo : TxMode::Undo;
  return c;
}

std::uint32_t entry_checksum(std::uint64_t tx_id, Addr addr, std::span<const std::uint8_t> payload) {
  std::uint8_t hdr[20];
  store_le64(hdr, tx_id);
  store_le64(hdr + 8, addr);
  const auto len = static_cast<std::uint32_t>(payload.size());
  for (int i = 0; i < 4; ++i) hdr[16 + i] = static_cast<std::uint8_t>(len >> (8 * i));
  boost::crc_32_type crc;
  crc.process_bytes(hdr, sizeof hdr);
  crc.process_bytes(payload.data(), payload.size());
  return crc.checksum();
}

std::uint64_t entry_size(std::size_t payload_len) {
  return (kEntryHeaderBytes + payload_len + 7) & ~std::uint64_t{7};
}

Bytes encode_entry(std::uint64_t tx_id, Addr addr, std::span<const std::uint8_t> payload) {
  Bytes out(entry_size(payload.size()), 0);
  store_le64(out.data(), tx_id);
  store_le64(out.data() + 8, addr);
  const auto len = static_cast<std::uint32_t>(payload.size());
  const std::uint32_t sum = entry_checksum(tx_id, addr, payload);
  for (int i = 0; i < 4; ++i) {
    out[16 + i] = static_cast<std::uint8_t>(len >> (8 * i));
    out[20 + i] = static_cast<std::uint8_t>(sum >> (8 * i));
  }
  std::copy(payload.begin(), payload.end(), out.begin() + kEntryHeaderBytes);
  return out;
}

std::optional<LogEntry> decode_entry(const pmem::ByteImage& img, Addr at, Addr limit) {
  if (at + kEntryHeaderBytes > limit) return std::nullopt;
  const Bytes hdr = img.read(at, kEntryHeaderBytes);
  LogEntry e;
  e.tx_id = load_le64(hdr.data());
  e.addr = load_le64(hdr.data() + 8);
  std::uint32_t len = 0;
  std::uint32_t sum = 0;
  for (int i = 3; i >= 0; --i) {
    len = len << 8 | hdr[16 + i];
    sum = sum << 8 | hdr[20 + i];
  }
  if (len == 0 || at + entry_size(len) > limit) return std::nullopt;
  e.payload = img.read(at + kEntryHeaderBytes, len);
  if (entry_checksum(e.tx_id, e.addr, e.payload) != sum) return std::nullopt;
  return e;
}

std::uint64_t capacity_for_entries(std::size_t entries, std::size_t payload_len) {
  return kHeaderBytes + entries * entry_size(payload_len);
}

}  // namespace pmtx::wal
