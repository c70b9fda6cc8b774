#include "pmtx/tx/config.hpp"

#include <algorithm>
#include <charconv>

namespace pmtx::tx {

const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::Seq: return "seq";
    case Mechanism::SpinUndo: return "undo";
    case Mechanism::SpinRedo: return "redo";
    case Mechanism::Stm: return "stm";
    case Mechanism::CcStm: return "ccstm";
    case Mechanism::Htm: return "htm";
    case Mechanism::CcHtmUndoFb: return "cchtm-undo";
    case Mechanism::CcHtmRedoFb: return "cchtm-redo";
  }
  return "?";
}

Mechanism parse_mechanism(const std::string& s) {
  static const std::map<std::string, Mechanism> names{
      {"seq", Mechanism::Seq},
      {"undo", Mechanism::SpinUndo},
      {"spin-undo", Mechanism::SpinUndo},
      {"redo", Mechanism::SpinRedo},
      {"spin-redo", Mechanism::SpinRedo},
      {"stm", Mechanism::Stm},
      {"ccstm", Mechanism::CcStm},
      {"htm", Mechanism::Htm},
      {"cchtm", Mechanism::CcHtmUndoFb},
      {"cchtm-undo", Mechanism::CcHtmUndoFb},
      {"cchtm-redo", Mechanism::CcHtmRedoFb},
  };
  std::string k = s;
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
  auto it = names.find(k);
  if (it == names.end()) throw ConfigError("unknown mechanism '" + s + "'");
  return it->second;
}

bool uses_htm(Mechanism m) { return m == Mechanism::Htm || uses_cc_htm(m); }
bool uses_cc_htm(Mechanism m) { return m == Mechanism::CcHtmUndoFb || m == Mechanism::CcHtmRedoFb; }
bool uses_stm(Mechanism m) { return m == Mechanism::Stm || m == Mechanism::CcStm; }
bool uses_wal(Mechanism m) { return m != Mechanism::Seq && m != Mechanism::Stm; }

void MechanismConfig::validate() const {
  if (uses_cc_htm(mechanism) && domain == PersistenceDomain::PersistentCaches) {
    throw ConfigError(std::string(to_string(mechanism)) + " is not applicable under persistent caches; use htm");
  }
  if (threads < 1 || threads > 64) throw ConfigError("threads must be between 1 and 64");
  if (line_size < kWordSize || (line_size & (line_size - 1)) != 0) throw ConfigError("line size must be a power of two");
  if (heap_size == 0 || heap_size % line_size != 0) throw ConfigError("heap size must be a positive multiple of the line size");
  if (uses_wal(mechanism) && log_capacity < wal::capacity_for_entries(1)) throw ConfigError("log capacity too small");
  if (log_capacity > 0xffffffffULL || htm_log_capacity > 0xffffffffULL) throw ConfigError("log capacity above 4 GiB");
  effective_htm().validate();
}

htm::HtmConfig MechanismConfig::effective_htm() const {
  htm::HtmConfig h = htm;
  h.cc_enabled = uses_cc_htm(mechanism);
  if (mechanism == Mechanism::CcHtmUndoFb) h.fallback_mode = wal::TxMode::Undo;
  if (mechanism == Mechanism::CcHtmRedoFb) h.fallback_mode = wal::TxMode::Redo;
  return h;
}

std::vector<wal::LogRegion> Layout::all_regions() const {
  std::vector<wal::LogRegion> out = wal;
  out.insert(out.end(), htm.begin(), htm.end());
  return out;
}

Layout layout_for(const MechanismConfig& cfg) {
  auto round_up = [&](std::uint64_t v) { return (v + cfg.line_size - 1) / cfg.line_size * cfg.line_size; };
  Layout l;
  l.heap_size = cfg.heap_size;
  Addr next = round_up(cfg.heap_size);
  const std::uint64_t wal_cap = round_up(cfg.log_capacity);
  const std::uint64_t htm_cap = round_up(cfg.htm_log_capacity ? cfg.htm_log_capacity : cfg.log_capacity);
  for (std::size_t t = 0; t < cfg.threads; ++t) {
    if (uses_wal(cfg.mechanism)) {
      l.wal.push_back({next, cfg.log_capacity});
      next += wal_cap;
    }
    if (uses_cc_htm(cfg.mechanism)) {
      l.htm.push_back({next, cfg.htm_log_capacity ? cfg.htm_log_capacity : cfg.log_capacity});
      next += htm_cap;
    }
  }
  l.total = next;
  return l;
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::map<std::string, std::string> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(n) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(n) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

namespace {

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  int base = 10;
  std::string_view s = v;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    s.remove_prefix(2);
    base = 16;
  }
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("bad value for " + key + ": '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("bad value for " + key + ": '" + v + "'");
}

}  // namespace

MechanismConfig apply_config(MechanismConfig c, std::map<std::string, std::string>& kv) {
  auto take = [&](const char* key, auto&& apply) {
    if (auto it = kv.find(key); it != kv.end()) {
      apply(it->second);
      kv.erase(it);
    }
  };
  take("mechanism", [&](const std::string& v) { c.mechanism = parse_mechanism(v); });
  take("domain", [&](const std::string& v) {
    try {
      c.domain = parse_domain(v);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  });
  take("capacity_lines", [&](const std::string& v) { c.htm.capacity_lines = to_u64("capacity_lines", v); });
  take("max_retries", [&](const std::string& v) {
    c.htm.max_retries = static_cast<unsigned>(to_u64("max_retries", v));
  });
  take("retry_explicit", [&](const std::string& v) { c.htm.retry_explicit = to_bool("retry_explicit", v); });
  take("fallback", [&](const std::string& v) {
    try {
      c.htm.fallback_mode = wal::parse_tx_mode(v);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  });
  take("log_capacity", [&](const std::string& v) { c.log_capacity = to_u64("log_capacity", v); });
  take("htm_log_capacity", [&](const std::string& v) { c.htm_log_capacity = to_u64("htm_log_capacity", v); });
  take("seed", [&](const std::string& v) { c.seed = to_u64("seed", v); });
  take("threads", [&](const std::string& v) { c.threads = to_u64("threads", v); });
  take("heap_size", [&](const std::string& v) { c.heap_size = to_u64("heap_size", v); });
  return c;
}

}  // namespace pmtx::tx
