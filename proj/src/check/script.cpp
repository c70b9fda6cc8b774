#include "pmtx/check/script.hpp"

#include <set>
#include <sstream>

#include "pmtx/check/scheduler.hpp"

namespace pmtx::check {

std::size_t WorkloadScript::tx_count() const {
  std::size_t n = 0;
  for (const auto& t : threads) n += t.size();
  return n;
}

pmem::ByteImage WorkloadScript::initial_image(std::size_t line_size) const {
  pmem::ByteImage img(line_size);
  for (auto [a, v] : initial) img.write_u64(a, v);
  return img;
}

std::vector<Addr> WorkloadScript::addresses() const {
  std::set<Addr> s;
  for (const auto& [a, v] : initial) s.insert(a);
  for (const auto& t : threads) {
    for (const auto& ops : t) {
      for (const auto& op : ops) s.insert(op.addr);
    }
  }
  return {s.begin(), s.end()};
}

namespace {

std::uint64_t num(const std::string& tok) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(tok, &pos, 0);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw UsageError("bad number '" + tok + "' in script");
  }
}

}  // namespace

WorkloadScript parse_script(const std::string& text) {
  WorkloadScript s;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (head.size() >= 3 && head[0] == 'T' && head.back() == ':') {
      const auto t = num(head.substr(1, head.size() - 2));
      if (t >= 64) throw UsageError("thread id out of range in script");
      if (s.threads.size() <= t) s.threads.resize(t + 1);
      std::string rest;
      std::getline(ls, rest);
      s.threads[t].push_back(tx::parse_ops(rest));
    } else if (head == "init") {
      std::string a, v;
      if (!(ls >> a >> v)) throw UsageError("init takes ADDR VALUE");
      if (num(a) % kWordSize != 0) throw UsageError("unaligned init address");
      s.initial[num(a)] = num(v);
    } else if (head == "schedule") {
      for (std::string t; ls >> t;) s.schedule.push_back(static_cast<ThreadId>(num(t)));
    } else if (head == "schedule-seed") {
      std::string v;
      if (!(ls >> v)) throw UsageError("schedule-seed takes a value");
      s.schedule_seed = num(v);
    } else if (head == "max-states") {
      std::string v;
      if (!(ls >> v)) throw UsageError("max-states takes a value");
      s.crash.max_states = num(v);
    } else if (head == "crash") {
      std::string kind;
      ls >> kind;
      const std::size_t max_states = s.crash.max_states;
      if (kind == "every") {
        s.crash = CrashPolicy::every_event();
      } else if (kind == "sample") {
        std::string seed, k;
        if (!(ls >> seed >> k)) throw UsageError("crash sample takes SEED K");
        s.crash = CrashPolicy::sampled(num(seed), num(k));
      } else if (kind == "at") {
        std::string seq;
        if (!(ls >> seq)) throw UsageError("crash at takes SEQ");
        s.crash = CrashPolicy::at_event(num(seq));
      } else {
        throw UsageError("unknown crash policy '" + kind + "'");
      }
      s.crash.max_states = max_states;
    } else {
      throw UsageError("unknown script directive '" + head + "'");
    }
  }
  return s;
}

std::string format_script(const WorkloadScript& s) {
  std::ostringstream o;
  for (auto [a, v] : s.initial) o << "init 0x" << std::hex << a << " 0x" << v << std::dec << "\n";
  for (std::size_t t = 0; t < s.threads.size(); ++t) {
    for (const auto& ops : s.threads[t]) o << "T" << t << ": " << tx::format_ops(ops) << "\n";
  }
  if (!s.schedule.empty()) {
    o << "schedule";
    for (auto t : s.schedule) o << " " << t;
    o << "\n";
  }
  if (s.schedule_seed) o << "schedule-seed " << *s.schedule_seed << "\n";
  if (s.crash.max_states != CrashPolicy{}.max_states) o << "max-states " << s.crash.max_states << "\n";
  switch (s.crash.kind) {
    case CrashPolicy::Kind::EveryEvent: o << "crash every\n"; break;
    case CrashPolicy::Kind::SampledK: o << "crash sample " << s.crash.seed << " " << s.crash.k << "\n"; break;
    case CrashPolicy::Kind::AtEvent: o << "crash at " << s.crash.at << "\n"; break;
  }
  return o.str();
}

WorkloadScript DependencyScript::make() {
  using tx::Op;
  WorkloadScript s;
  s.threads.resize(2);
  s.threads[0].push_back({Op::write(pA, x), Op::write(pB, y)});
  s.threads[1].push_back({Op::read(pA, 0), Op::write_if(pD, z, 0, x), Op::write(pC, w)});
  s.schedule.assign(64, 0);
  return s;
}

namespace {

class RecordingContext : public TxContext {
 public:
  RecordingContext(TxContext& inner, TxRecord& rec) : inner_(inner), rec_(rec) {}
  std::uint64_t read(Addr addr) override {
    const std::uint64_t v = inner_.read(addr);
    if (!rec_.writes.count(addr)) rec_.reads.try_emplace(addr, v);
    return v;
  }
  void write(Addr addr, std::uint64_t value) override {
    inner_.write(addr, value);
    rec_.writes[addr] = value;
  }
  ThreadId thread() const override { return inner_.thread(); }

 private:
  TxContext& inner_;
  TxRecord& rec_;
};

}  // namespace

Execution execute_script(const WorkloadScript& script, tx::MechanismConfig cfg,
                         std::optional<std::vector<ThreadId>> schedule_override) {
  Execution ex;
  cfg.threads = std::max<std::size_t>(1, script.threads.size());
  for (Addr a : script.addresses()) {
    if (a + kWordSize > cfg.heap_size) throw UsageError("script address outside the heap");
  }
  ex.config = cfg;
  ex.initial = script.initial_image(cfg.line_size);
  ex.runtime = std::make_unique<tx::Runtime>(cfg, ex.initial);
  tx::Runtime& rt = *ex.runtime;

  std::vector<std::vector<TxRecord>> per_thread(script.threads.size());
  for (std::size_t t = 0; t < script.threads.size(); ++t) per_thread[t].resize(script.threads[t].size());

  Scheduler::Options opts;
  opts.schedule = schedule_override ? *schedule_override : script.schedule;
  if (!schedule_override) opts.seed = script.schedule_seed;
  Scheduler sched(opts);
  rt.set_interleaver(&sched);
  sched.run(script.threads.size(), [&](ThreadId t) {
    for (std::size_t i = 0; i < script.threads[t].size(); ++i) {
      TxRecord& rec = per_thread[t][i];
      rec.thread = t;
      rec.index = i;
      const TxBody body = tx::compile(script.threads[t][i]);
      bool first = true;
      const auto r = rt.run(t, [&](TxContext& inner) {
        if (first) rec.begin_event = rt.memory().event_count();
        first = false;
        rec.reads.clear();
        rec.writes.clear();
        RecordingContext ctx(inner, rec);
        body(ctx);
      });
      rec.done_event = rt.memory().event_count();
      rec.stamp = r.stamp;
      rec.fast_path = r.fast_path;
    }
  });
  rt.set_interleaver(nullptr);
  ex.schedule = sched.realized();
  for (auto& v : per_thread) {
    for (auto& r : v) ex.txs.push_back(std::move(r));
  }
  return ex;
}

}  // namespace pmtx::check
