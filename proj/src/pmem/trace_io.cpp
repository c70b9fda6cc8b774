#include "pmtx/pmem/trace_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace pmtx::pmem {

void write_trace(std::ostream& os, const std::vector<PersistEvent>& events) {
  for (const auto& e : events) {
    os << e.seq << ' ' << e.thread << ' ' << to_string(e.kind) << ' ';
    if (e.addr) {
      os << "0x" << std::hex << *e.addr << std::dec;
    } else {
      os << '-';
    }
    os << ' ' << e.value.size() << ' ' << (e.value.empty() ? "-" : to_hex(e.value));
    if (e.group != 0) os << " g=" << e.group;
    os << '\n';
  }
}

std::vector<PersistEvent> read_trace(std::istream& is) {
  std::vector<PersistEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    PersistEvent e;
    std::string kind, addr, hex, extra;
    std::size_t len = 0;
    if (!(ls >> e.seq >> e.thread >> kind >> addr >> len >> hex)) {
      throw UsageError("malformed trace line " + std::to_string(lineno));
    }
    e.kind = parse_event_kind(kind);
    if (addr != "-") e.addr = std::stoull(addr, nullptr, 16);
    if (hex != "-") e.value = from_hex(hex);
    if (e.value.size() != len) throw UsageError("length mismatch on trace line " + std::to_string(lineno));
    if (ls >> extra) {
      if (extra.rfind("g=", 0) != 0) throw UsageError("unexpected field on trace line " + std::to_string(lineno));
      e.group = static_cast<std::uint32_t>(std::stoul(extra.substr(2)));
    }
    if (e.is_store() != e.addr.has_value() && e.kind != EventKind::Clwb) {
      throw UsageError("address presence does not match kind on trace line " + std::to_string(lineno));
    }
    if (!out.empty() && e.seq <= out.back().seq) {
      throw UsageError("non-increasing seq on trace line " + std::to_string(lineno));
    }
    out.push_back(std::move(e));
  }
  return out;
}

PersistTracker replay_trace(const std::vector<PersistEvent>& events, PersistenceDomain domain, ByteImage initial) {
  PersistTracker t(domain, std::move(initial));
  for (const auto& e : events) t.apply(e);
  return t;
}

}  // namespace pmtx::pmem
