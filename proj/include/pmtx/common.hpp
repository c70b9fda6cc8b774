#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmtx {

using Addr = std::uint64_t;
using ThreadId = std::uint32_t;
using Seq = std::uint64_t;
using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kWordSize = 8;
inline constexpr std::size_t kDefaultLineSize = 64;

enum class PersistenceDomain { TransientCaches, PersistentCaches };

const char* to_string(PersistenceDomain d);
inline std::ostream& operator<<(std::ostream& os, PersistenceDomain v) { return os << to_string(v); }
PersistenceDomain parse_domain(const std::string& s);

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Access outside the mapped NVM range.
class AddressFault : public Error {
 public:
  explicit AddressFault(Addr addr);
  Addr addr() const { return addr_; }

 private:
  Addr addr_;
};

/// API misuse: nested begin, commit after abort, analysis before crash, ...
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Invalid mechanism/domain/parameter combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A log region holds bytes that no admissible crash can produce.
class CorruptLog : public Error {
 public:
  using Error::Error;
};

inline std::uint64_t load_le64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline void store_le64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    p[i] = static_cast<std::uint8_t>(v);
    v >>= 8;
  }
}

inline Bytes word_bytes(std::uint64_t v) {
  Bytes b(8);
  store_le64(b.data(), v);
  return b;
}

inline Addr line_base(Addr a, std::size_t line_size) { return a - a % line_size; }

std::string to_hex(const std::uint8_t* data, std::size_t len);
inline std::string to_hex(const Bytes& b) { return to_hex(b.data(), b.size()); }
Bytes from_hex(const std::string& s);

}  // namespace pmtx
