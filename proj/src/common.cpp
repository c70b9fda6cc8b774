#include "pmtx/common.hpp"
#include "pmtx/abort.hpp"

#include <cctype>
#include <sstream>

namespace pmtx {

const char* to_string(PersistenceDomain d) {
  return d == PersistenceDomain::TransientCaches ? "transient" : "persistent";
}

PersistenceDomain parse_domain(const std::string& s) {
  if (s == "transient" || s == "tc" || s == "TransientCaches") return PersistenceDomain::TransientCaches;
  if (s == "persistent" || s == "pc" || s == "PersistentCaches") return PersistenceDomain::PersistentCaches;
  throw ConfigError("unknown persistence domain '" + s + "'");
}

namespace {

std::string fault_message(Addr addr) {
  std::ostringstream os;
  os << "address fault at 0x" << std::hex << addr;
  return os.str();
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

AddressFault::AddressFault(Addr addr) : Error(fault_message(addr)), addr_(addr) {}

std::string to_hex(const std::uint8_t* data, std::size_t len) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 0xf]);
  }
  return out;
}

Bytes from_hex(const std::string& s) {
  if (s.size() % 2 != 0) throw UsageError("odd-length hex string");
  Bytes out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = hex_value(s[2 * i]);
    const int lo = hex_value(s[2 * i + 1]);
    if (hi < 0 || lo < 0) throw UsageError("invalid hex string '" + s + "'");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

}  // namespace pmtx

namespace pmtx {

const char* to_string(AbortCode c) {
  switch (c) {
    case AbortCode::Conflict: return "conflict";
    case AbortCode::Capacity: return "capacity";
    case AbortCode::Explicit: return "explicit";
    case AbortCode::LockHeld: return "lock_held";
    case AbortCode::NoLogSpace: return "no_log_space";
  }
  return "?";
}

}  // namespace pmtx
