#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "pmtx/common.hpp"

namespace pmtx::pmem {

/// Sparse, zero-filled, byte-addressable image stored as whole lines.
///
/// Used for initial heap contents, persisted crash images and recovery
/// output. Lines that were never written read as zero and compare equal to
/// explicitly zeroed lines.
class ByteImage {
 public:
  explicit ByteImage(std::size_t line_size = kDefaultLineSize) : line_size_(line_size) {}

  std::size_t line_size() const { return line_size_; }

  void read(Addr addr, std::span<std::uint8_t> out) const;
  Bytes read(Addr addr, std::size_t len) const;
  std::uint64_t read_u64(Addr addr) const;

  void write(Addr addr, std::span<const std::uint8_t> data);
  void write_u64(Addr addr, std::uint64_t v);

  /// Line content (zeros if absent).
  Bytes line(Addr base) const;
  void set_line(Addr base, std::span<const std::uint8_t> data);

  const std::map<Addr, Bytes>& lines() const { return lines_; }

  /// Copy of the lines that intersect [lo, hi).
  ByteImage slice(Addr lo, Addr hi) const;

  /// FNV-1a over the non-zero lines in [lo, hi), stable across sparse layouts.
  std::uint64_t digest(Addr lo = 0, Addr hi = ~Addr{0}) const;
  std::string digest_hex(Addr lo = 0, Addr hi = ~Addr{0}) const;

  bool equal_range(const ByteImage& other, Addr lo, Addr hi) const;
  friend bool operator==(const ByteImage& a, const ByteImage& b);

 private:
  Bytes& line_mut(Addr base);

  std::size_t line_size_;
  std::map<Addr, Bytes> lines_;
};

}  // namespace pmtx::pmem
