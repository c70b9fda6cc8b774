#include "pmtx/wal/log_writer.hpp"

namespace pmtx::wal {

LogWriter::LogWriter(pmem::MemoryImage& mem, ThreadId thread, LogRegion region)
    : mem_(mem), thread_(thread), region_(region) {
  if (region_.base % mem_.line_size() != 0) throw ConfigError("log region must be line aligned");
  if (region_.capacity < capacity_for_entries(1)) throw ConfigError("log region too small for a single entry");
  if (region_.capacity > 0xffffffffULL) throw ConfigError("log region larger than 4 GiB");
  if (region_.base + region_.capacity > mem_.size()) throw ConfigError("log region outside of mapped memory");
}

bool LogWriter::fits(std::size_t payload_len) const { return head_ + entry_size(payload_len) <= region_.capacity; }

std::pair<std::uint64_t, std::uint64_t> LogWriter::append(std::uint64_t tx_id, Addr addr,
                                                          std::span<const std::uint8_t> payload, bool non_temporal) {
  const Bytes entry = encode_entry(tx_id, addr, payload);
  const std::uint64_t begin = head_;
  if (non_temporal) {
    mem_.nt_store(thread_, region_.base + begin, entry);
  } else {
    mem_.store(thread_, region_.base + begin, entry);
  }
  head_ += entry.size();
  bytes_appended_ += entry.size();
  return {begin, head_};
}

void LogWriter::clwb_range(std::uint64_t from, std::uint64_t to) {
  const std::size_t ls = mem_.line_size();
  for (Addr a = line_base(region_.base + from, ls); a < region_.base + to; a += ls) mem_.clwb(thread_, a);
}

void LogWriter::write_commit_word(const CommitWord& w, bool non_temporal) {
  if (non_temporal) {
    mem_.nt_store_u64(thread_, region_.base, w.encode());
  } else {
    mem_.store_u64(thread_, region_.base, w.encode());
  }
}

void LogWriter::clwb_header() { mem_.clwb(thread_, region_.base); }

std::uint32_t LogWriter::first_safe_tx_id() {
  // Entries of at most one transaction newer than the header's can exist.
  const CommitWord w = CommitWord::decode(mem_.load_u64(thread_, region_.base));
  return w.tx_id + 2;
}

}  // namespace pmtx::wal
