#include "pmtx/check/checker.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

namespace pmtx::check {

const char* to_string(Property p) {
  switch (p) {
    case Property::Atomicity: return "atomicity";
    case Property::Dependency: return "dependency";
    case Property::Serializability: return "serializability";
  }
  return "?";
}

Property parse_property(const std::string& s) {
  if (s == "atomicity") return Property::Atomicity;
  if (s == "dependency" || s == "order") return Property::Dependency;
  if (s == "serializability" || s == "serial") return Property::Serializability;
  throw UsageError("unknown property '" + s + "'");
}

namespace {

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s.empty() ? "-" : s;
}

template <typename T>
std::vector<T> split_numbers(const std::string& s) {
  std::vector<T> out;
  if (s == "-" || s.empty()) return out;
  std::stringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');) {
    try {
      out.push_back(static_cast<T>(std::stoull(tok)));
    } catch (const std::exception&) {
      throw UsageError("bad number list '" + s + "'");
    }
  }
  return out;
}

std::string bitmask_hex(const std::vector<bool>& bits) {
  if (bits.empty()) return "0x0";
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (std::size_t nib = (bits.size() + 3) / 4; nib-- > 0;) {
    unsigned v = 0;
    for (unsigned b = 0; b < 4; ++b) {
      const std::size_t i = nib * 4 + b;
      if (i < bits.size() && bits[i]) v |= 1u << b;
    }
    out += digits[v];
  }
  const auto nz = out.find_first_not_of('0');
  return "0x" + (nz == std::string::npos ? std::string("0") : out.substr(nz));
}

std::string witness_mask(const pmem::PersistTracker& tracker, const pmem::CrashState& st) {
  const auto cands = tracker.candidates();
  std::vector<bool> bits(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    bits[i] = std::binary_search(st.witness.begin(), st.witness.end(), cands[i]);
  }
  return bitmask_hex(bits);
}

// Admissible outcomes of a crash at a given point of a recorded execution.
class Analyzer {
 public:
  explicit Analyzer(const Execution& ex) : ex_(ex), heap_hi_(ex.config.heap_size) {
    std::size_t threads = 0;
    for (const auto& r : ex.txs) threads = std::max<std::size_t>(threads, r.thread + 1);
    by_thread_.resize(threads);
    for (std::size_t i = 0; i < ex.txs.size(); ++i) by_thread_[ex.txs[i].thread].push_back(i);
    for (auto& v : by_thread_) {
      std::sort(v.begin(), v.end(), [&](auto a, auto b) { return ex.txs[a].index < ex.txs[b].index; });
    }
    order_.resize(ex.txs.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    std::sort(order_.begin(), order_.end(), [&](auto a, auto b) { return ex.txs[a].stamp < ex.txs[b].stamp; });
    preds_.resize(ex.txs.size());
    for (std::size_t i = 0; i < ex.txs.size(); ++i) {
      const TxRecord& t = ex.txs[i];
      for (const auto& [addr, v] : t.reads) {
        std::optional<std::size_t> writer;
        for (std::size_t j : order_) {
          if (ex.txs[j].stamp >= t.stamp) break;
          if (j != i && ex.txs[j].writes.count(addr)) writer = j;
        }
        if (writer) preds_[i].push_back(*writer);
      }
    }
  }

  struct Candidate {
    pmem::ByteImage heap;
    bool rf_closed = true;
  };

  const std::vector<Candidate>& candidates(Seq cut) {
    if (cached_ && cut_ == cut) return cache_;
    cache_.clear();
    const std::size_t threads = by_thread_.size();
    std::vector<std::size_t> lo(threads), hi(threads), n(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      for (std::size_t i : by_thread_[t]) {
        if (ex_.txs[i].done_event <= cut) ++lo[t];
        if (ex_.txs[i].begin_event < cut) ++hi[t];
      }
      hi[t] = std::max(hi[t], lo[t]);
      n[t] = lo[t];
    }
    for (;;) {
      std::vector<bool> in(ex_.txs.size());
      for (std::size_t t = 0; t < threads; ++t) {
        for (std::size_t k = 0; k < n[t]; ++k) in[by_thread_[t][k]] = true;
      }
      Candidate c;
      c.heap = ex_.initial.slice(0, heap_hi_);
      for (std::size_t i : order_) {
        if (!in[i]) continue;
        for (auto [a, v] : ex_.txs[i].writes) c.heap.write_u64(a, v);
        for (std::size_t p : preds_[i]) c.rf_closed &= static_cast<bool>(in[p]);
      }
      cache_.push_back(std::move(c));
      std::size_t t = 0;
      while (t < threads && n[t] == hi[t]) n[t] = lo[t], ++t;
      if (t == threads) break;
      ++n[t];
    }
    cut_ = cut;
    cached_ = true;
    return cache_;
  }

  /// Empty when the heap is admissible; otherwise the expected digest.
  std::optional<std::string> evaluate(Seq cut, const pmem::ByteImage* heap, Property p) {
    const auto& cands = candidates(cut);
    const Candidate* fallback = nullptr;
    for (const auto& c : cands) {
      const bool eligible = p == Property::Atomicity || c.rf_closed;
      if (eligible && !fallback) fallback = &c;
      if (heap && eligible && c.heap == *heap) return std::nullopt;
    }
    if (!fallback) fallback = &cands.front();
    return fallback->heap.digest_hex();
  }

  Addr heap_hi() const { return heap_hi_; }

 private:
  const Execution& ex_;
  Addr heap_hi_;
  std::vector<std::vector<std::size_t>> by_thread_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::size_t>> preds_;
  bool cached_ = false;
  Seq cut_ = 0;
  std::vector<Candidate> cache_;
};

std::vector<std::size_t> valid_cuts(const std::vector<pmem::PersistEvent>& events) {
  std::vector<std::size_t> cuts;
  for (std::size_t c = 0; c <= events.size(); ++c) {
    if (c > 0 && c < events.size() && events[c].group != 0 && events[c].group == events[c - 1].group) continue;
    cuts.push_back(c);
  }
  return cuts;
}

std::optional<pmem::ByteImage> recover_heap(const Execution& ex, const pmem::ByteImage& persisted) {
  try {
    return tx::global_recover(ex.config, persisted).slice(0, ex.config.heap_size);
  } catch (const CorruptLog&) {
    return std::nullopt;
  }
}

Verdict check_crashes(const Execution& ex, const CrashPolicy& policy, Property p) {
  Analyzer an(ex);
  Verdict v;
  v.property = p;
  for_each_crash(
      ex, policy,
      [&](const CrashVisit& cv) {
        auto bad = an.evaluate(cv.cut, cv.heap, p);
        if (!bad) return true;
        Counterexample cx;
        cx.property = p;
        cx.crash_seq = cv.cut;
        cx.witness = witness_mask(*cv.tracker, *cv.state);
        cx.choice = cv.state->choice;
        cx.expected = *bad;
        cx.actual = cv.heap ? cv.heap->digest_hex() : "corrupt-log";
        cx.schedule = ex.schedule;
        if (cv.heap) cx.recovered = *cv.heap;
        v.pass = false;
        v.counterexample = std::move(cx);
        return false;
      },
      &v.crash_points, &v.states);
  return v;
}

class MapContext : public TxContext {
 public:
  MapContext(std::map<Addr, std::uint64_t>& heap, ThreadId t) : heap_(heap), t_(t) {}
  std::uint64_t read(Addr a) override { return heap_[a]; }
  void write(Addr a, std::uint64_t v) override { heap_[a] = v; }
  ThreadId thread() const override { return t_; }

 private:
  std::map<Addr, std::uint64_t>& heap_;
  ThreadId t_;
};

Verdict serial_verdict(const WorkloadScript& script, const Execution& ex) {
  const auto actual = ex.runtime->memory().volatile_image().slice(0, ex.config.heap_size);
  const std::size_t threads = script.threads.size();
  std::vector<std::size_t> pos(threads, 0);
  std::map<Addr, std::uint64_t> heap(script.initial.begin(), script.initial.end());
  Verdict v;
  v.property = Property::Serializability;
  std::optional<std::string> first_digest;

  std::function<bool()> search = [&]() -> bool {
    bool any = false;
    for (std::size_t t = 0; t < threads; ++t) {
      if (pos[t] == script.threads[t].size()) continue;
      any = true;
      const auto saved = heap;
      MapContext ctx(heap, static_cast<ThreadId>(t));
      tx::compile(script.threads[t][pos[t]])(ctx);
      ++pos[t];
      const bool found = search();
      --pos[t];
      heap = saved;
      if (found) return true;
    }
    if (any) return false;
    ++v.states;
    pmem::ByteImage img(ex.config.line_size);
    for (auto [a, val] : heap) img.write_u64(a, val);
    if (!first_digest) first_digest = img.digest_hex();
    return img == actual;
  };

  if (!search()) {
    v.pass = false;
    Counterexample cx;
    cx.property = Property::Serializability;
    cx.expected = first_digest.value_or("-");
    cx.actual = actual.digest_hex();
    cx.schedule = ex.schedule;
    cx.recovered = actual;
    v.counterexample = std::move(cx);
  }
  return v;
}

}  // namespace

void for_each_crash(const Execution& ex, const CrashPolicy& policy, const std::function<bool(const CrashVisit&)>& visit,
                    std::size_t* crash_points, std::size_t* states) {
  const auto events = ex.runtime->memory().events();
  std::vector<std::size_t> cuts = valid_cuts(events);
  switch (policy.kind) {
    case CrashPolicy::Kind::EveryEvent: break;
    case CrashPolicy::Kind::SampledK: {
      std::vector<std::size_t> picked;
      std::mt19937_64 rng(policy.seed);
      std::sample(cuts.begin(), cuts.end(), std::back_inserter(picked), policy.k, rng);
      cuts = std::move(picked);
      break;
    }
    case CrashPolicy::Kind::AtEvent: {
      if (std::find(cuts.begin(), cuts.end(), policy.at) == cuts.end()) {
        throw UsageError("no crash point after event " + std::to_string(policy.at));
      }
      cuts = {static_cast<std::size_t>(policy.at)};
      break;
    }
  }
  pmem::PersistTracker tracker(ex.runtime->memory().domain(), ex.initial);
  std::size_t applied = 0;
  std::size_t points = 0, seen = 0;
  for (std::size_t cut : cuts) {
    while (applied < cut) tracker.apply(events[applied++]);
    ++points;
    for (const auto& st : tracker.states(policy.max_states, ex.config.seed ^ cut)) {
      ++seen;
      const auto heap = recover_heap(ex, st.persisted);
      CrashVisit cv{cut, &tracker, &st, heap ? &*heap : nullptr};
      if (!visit(cv)) {
        if (crash_points) *crash_points = points;
        if (states) *states = seen;
        return;
      }
    }
  }
  if (crash_points) *crash_points = points;
  if (states) *states = seen;
}

Verdict check_atomicity(const Execution& ex, const CrashPolicy& policy) {
  return check_crashes(ex, policy, Property::Atomicity);
}

Verdict check_atomicity(const WorkloadScript& script, const tx::MechanismConfig& cfg) {
  return check_atomicity(execute_script(script, cfg), script.crash);
}

Verdict check_dependency_order(const Execution& ex, const CrashPolicy& policy) {
  return check_crashes(ex, policy, Property::Dependency);
}

Verdict check_dependency_order(const WorkloadScript& script, const tx::MechanismConfig& cfg) {
  return check_dependency_order(execute_script(script, cfg), script.crash);
}

Verdict check_serializable(const WorkloadScript& script, const tx::MechanismConfig& cfg) {
  if (script.threads.size() > kSerialMaxThreads) throw UsageError("serializability check supports at most 3 threads");
  for (const auto& t : script.threads) {
    if (t.size() > kSerialMaxTxs) throw UsageError("serializability check supports at most 3 transactions per thread");
  }
  if (script.addresses().size() > kSerialMaxAddrs) throw UsageError("serializability check supports at most 4 addresses");
  return serial_verdict(script, execute_script(script, cfg));
}

Verdict replay(const WorkloadScript& script, const tx::MechanismConfig& cfg, const Counterexample& cx) {
  const Execution ex = execute_script(script, cfg, cx.schedule);
  if (cx.property == Property::Serializability) return serial_verdict(script, ex);
  Verdict v;
  v.property = cx.property;
  const auto events = ex.runtime->memory().events();
  if (cx.crash_seq > events.size()) throw UsageError("crash point beyond the replayed event log");
  pmem::PersistTracker tracker(ex.runtime->memory().domain(), ex.initial);
  for (std::size_t i = 0; i < cx.crash_seq; ++i) tracker.apply(events[i]);
  const pmem::CrashState st = tracker.state(cx.choice);
  const auto heap = recover_heap(ex, st.persisted);
  Analyzer an(ex);
  v.crash_points = 1;
  v.states = 1;
  if (auto bad = an.evaluate(cx.crash_seq, heap ? &*heap : nullptr, cx.property)) {
    v.pass = false;
    Counterexample out;
    out.property = cx.property;
    out.crash_seq = cx.crash_seq;
    out.witness = witness_mask(tracker, st);
    out.choice = st.choice;
    out.expected = *bad;
    out.actual = heap ? heap->digest_hex() : "corrupt-log";
    out.schedule = ex.schedule;
    if (heap) out.recovered = *heap;
    v.counterexample = std::move(out);
  }
  return v;
}

std::string format_verdict(const Verdict& v) {
  std::ostringstream o;
  o << "verdict=" << (v.pass ? "pass" : "fail") << " property=" << to_string(v.property);
  if (v.pass || !v.counterexample) {
    o << " crash_points=" << v.crash_points << " states=" << v.states;
    return o.str();
  }
  const auto& cx = *v.counterexample;
  o << " crash_seq=" << cx.crash_seq << " witness=" << cx.witness << " choice=" << join(cx.choice)
    << " expected=" << cx.expected << " actual=" << cx.actual << " schedule=" << join(cx.schedule);
  return o.str();
}

Verdict parse_verdict(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream in(line);
  for (std::string tok; in >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw UsageError("bad verdict field '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto get = [&](const char* k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw UsageError(std::string("verdict lacks ") + k);
    return it->second;
  };
  Verdict v;
  const std::string& result = get("verdict");
  if (result != "pass" && result != "fail") throw UsageError("bad verdict '" + result + "'");
  v.pass = result == "pass";
  v.property = parse_property(get("property"));
  if (v.pass) {
    v.crash_points = std::stoull(get("crash_points"));
    v.states = std::stoull(get("states"));
    return v;
  }
  Counterexample cx;
  cx.property = v.property;
  cx.crash_seq = std::stoull(get("crash_seq"));
  cx.witness = get("witness");
  cx.choice = split_numbers<std::uint32_t>(get("choice"));
  cx.expected = get("expected");
  cx.actual = get("actual");
  cx.schedule = split_numbers<ThreadId>(get("schedule"));
  v.counterexample = std::move(cx);
  return v;
}

}  // namespace pmtx::check
