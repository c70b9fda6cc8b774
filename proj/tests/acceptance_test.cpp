// Acceptance suite: one line per criterion. `--criterion N` runs one of them,
// no argument runs all eleven. Exit status is nonzero if any selected
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pmtx/bench/workload.hpp"
#include "pmtx/check/checker.hpp"
#include "pmtx/htm/htm.hpp"
#include "pmtx/wal/recovery.hpp"
#include "pmtx/wal/wal_engine.hpp"

namespace pmtx {
namespace {

using tx::Mechanism;
using tx::Op;
using tx::OpList;

constexpr auto TC = PersistenceDomain::TransientCaches;
constexpr auto PC = PersistenceDomain::PersistentCaches;

// Crash points whose state space exceeds this are reported as not exhaustive.
constexpr std::size_t kExhaustiveCap = 1 << 16;

struct Outcome {
  bool pass = true;
  std::string detail;
};

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

struct Cell {
  Mechanism m;
  PersistenceDomain d;
  std::size_t capacity_lines = 1024;
};

tx::MechanismConfig config_of(const Cell& c) {
  tx::MechanismConfig cfg;
  cfg.mechanism = c.m;
  cfg.domain = c.d;
  cfg.htm.capacity_lines = c.capacity_lines;
  if (c.capacity_lines < 4) cfg.htm.max_retries = 1;
  return cfg;
}

std::string name_of(const Cell& c) {
  std::string s = std::string(tx::to_string(c.m)) + "/" + (c.d == TC ? "tc" : "pc");
  if (c.capacity_lines != 1024) s += fmt("/cap%zu", c.capacity_lines);
  return s;
}

// Independent interpreter: the heap is a word map, registers per transaction.
using Words = std::map<Addr, std::uint64_t>;

Words run_ops(Words mem, const OpList& ops) {
  std::array<std::uint64_t, tx::kRegisters> regs{};
  auto get = [&](Addr a) {
    auto it = mem.find(a);
    return it == mem.end() ? 0 : it->second;
  };
  for (const Op& op : ops) {
    switch (op.kind) {
      case Op::Kind::Read: regs[op.reg] = get(op.addr); break;
      case Op::Kind::Write: mem[op.addr] = op.value; break;
      case Op::Kind::WriteReg: mem[op.addr] = regs[op.reg] + op.value; break;
      case Op::Kind::WriteIf:
        if (regs[op.reg] == op.equals) mem[op.addr] = op.value;
        break;
    }
  }
  return mem;
}

pmem::ByteImage image_of(const Words& w) {
  pmem::ByteImage img;
  for (const auto& [a, v] : w) img.write_u64(a, v);
  return img;
}

// Appends one transaction with exactly `writes` writing ops over `pool`.
OpList random_tx(std::mt19937_64& rng, std::span<const Addr> pool, int writes) {
  std::uniform_int_distribution<std::size_t> addr(0, pool.size() - 1);
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_int_distribution<std::uint64_t> val(1, 999);
  OpList ops;
  unsigned next_reg = 0;
  for (int w = 0; w < writes; ++w) {
    const int k = kind(rng);
    if (k == 0 || next_reg >= tx::kRegisters) {
      ops.push_back(Op::write(pool[addr(rng)], val(rng)));
      continue;
    }
    const unsigned r = next_reg++;
    ops.push_back(Op::read(pool[addr(rng)], r));
    if (k == 1 || k == 2) {
      ops.push_back(Op::write_reg(pool[addr(rng)], r, val(rng)));
    } else {
      ops.push_back(Op::write_if(pool[addr(rng)], val(rng), r, rng() % 2 ? 0 : ops.size() % 3));
    }
  }
  if (rng() % 3 == 0) ops.push_back(Op::read(pool[addr(rng)], 7));
  return ops;
}

check::WorkloadScript single_thread_script(std::mt19937_64& rng, int txs, int max_writes, bool exact) {
  static constexpr Addr pool[] = {0x0, 0x8, 0x40, 0x48, 0x80, 0x140};
  check::WorkloadScript s;
  s.threads.resize(1);
  if (rng() % 2) s.initial[pool[rng() % 6]] = 1 + rng() % 999;
  for (int i = 0; i < txs; ++i) {
    const int w = exact ? max_writes : 1 + static_cast<int>(rng() % max_writes);
    s.threads[0].push_back(random_tx(rng, pool, w));
  }
  return s;
}

check::WorkloadScript concurrent_script(std::mt19937_64& rng) {
  static constexpr Addr pool[] = {0x0, 0x8, 0x40, 0x80};
  check::WorkloadScript s;
  const std::size_t threads = 1 + rng() % check::kSerialMaxThreads;
  s.threads.resize(threads);
  for (auto& t : s.threads) {
    const std::size_t txs = 1 + rng() % check::kSerialMaxTxs;
    for (std::size_t i = 0; i < txs; ++i) t.push_back(random_tx(rng, pool, 1 + static_cast<int>(rng() % 3)));
  }
  if (rng() % 2) s.initial[pool[rng() % 4]] = 1 + rng() % 999;
  s.schedule_seed = rng();
  return s;
}

check::CrashPolicy exhaustive_policy() {
  auto p = check::CrashPolicy::every_event();
  p.max_states = kExhaustiveCap;
  return p;
}

struct SweepStats {
  std::size_t scripts = 0;
  std::size_t crash_points = 0;
  std::size_t states = 0;
  std::size_t oracle_violations = 0;
  std::size_t checker_failures = 0;
  std::uint64_t max_state_count = 0;
  std::optional<check::Counterexample> cx;
  check::WorkloadScript cx_script;
};

// Every crash point and every admissible state of a single-threaded script:
// the recovered heap must equal the interpreter's heap after j transactions,
// j between the number finished and the number started at the crash.
void sweep_script(const check::WorkloadScript& s, const tx::MechanismConfig& cfg, SweepStats& st) {
  auto ex = check::execute_script(s, cfg);
  std::vector<pmem::ByteImage> prefix;
  Words w = s.initial;
  prefix.push_back(image_of(w));
  for (const auto& ops : s.threads[0]) {
    w = run_ops(w, ops);
    prefix.push_back(image_of(w));
  }
  std::vector<const check::TxRecord*> recs;
  for (const auto& r : ex.txs) recs.push_back(&r);
  std::sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->index < b->index; });

  const auto policy = exhaustive_policy();
  std::size_t points = 0, states = 0;
  check::for_each_crash(
      ex, policy,
      [&](const check::CrashVisit& v) {
        st.max_state_count = std::max(st.max_state_count, v.tracker->state_count());
        std::size_t done = 0, begun = 0;
        for (const auto* r : recs) {
          done += r->done_event <= v.cut;
          begun += r->begin_event < v.cut;
        }
        bool ok = false;
        if (v.heap) {
          for (std::size_t j = done; j <= std::max(done, begun) && !ok; ++j) {
            ok = v.heap->equal_range(prefix[j], 0, cfg.heap_size);
          }
        }
        st.oracle_violations += !ok;
        return true;
      },
      &points, &states);
  st.crash_points += points;
  st.states += states;
  ++st.scripts;
  const auto verdict = check::check_atomicity(ex, policy);
  if (!verdict.pass) {
    ++st.checker_failures;
    if (!st.cx) {
      st.cx = verdict.counterexample;
      st.cx_script = s;
    }
  }
}

// Scripts of 1..5 transactions with up to 1..4 writes each.
SweepStats sweep_family(const tx::MechanismConfig& cfg, std::uint64_t seed, int variants) {
  SweepStats st;
  std::mt19937_64 rng(seed);
  for (int txs = 1; txs <= 5; ++txs) {
    for (int writes = 1; writes <= 4; ++writes) {
      for (int v = 0; v < variants; ++v) sweep_script(single_thread_script(rng, txs, writes, v == 0), cfg, st);
    }
  }
  return st;
}

const std::vector<Cell>& protected_cells() {
  static const std::vector<Cell> cells{
      {Mechanism::SpinUndo, TC},        {Mechanism::SpinUndo, PC},       {Mechanism::SpinRedo, TC},
      {Mechanism::SpinRedo, PC},        {Mechanism::Htm, PC},            {Mechanism::Htm, PC, 1},
      {Mechanism::CcHtmUndoFb, TC},     {Mechanism::CcHtmUndoFb, TC, 1}, {Mechanism::CcHtmRedoFb, TC},
      {Mechanism::CcHtmRedoFb, TC, 1},  {Mechanism::CcStm, TC},          {Mechanism::CcStm, PC},
  };
  return cells;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome exhaustive_atomicity() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  std::size_t scripts = 0, states = 0;
  std::uint64_t max_count = 0;
  for (const auto& cell : protected_cells()) {
    const auto st = sweep_family(config_of(cell), 0xa70 + static_cast<int>(cell.m), 10);
    scripts += st.scripts;
    states += st.states;
    max_count = std::max(max_count, st.max_state_count);
    if (st.oracle_violations || st.checker_failures) {
      o.pass = false;
      o.detail += fmt("%s: %zu oracle / %zu checker failures; ", name_of(cell).c_str(), st.oracle_violations,
                      st.checker_failures);
    }
  }
  const double secs = seconds_since(t0);
  if (max_count > kExhaustiveCap) {
    o.pass = false;
    o.detail += fmt("state space %llu above cap; ", static_cast<unsigned long long>(max_count));
  }
  if (secs >= 300) {
    o.pass = false;
    o.detail += "runtime over 5 min; ";
  }
  o.detail += fmt("%zu cells, %zu scripts, %zu crash states, largest space %llu, %.1fs", protected_cells().size(),
                  scripts, states, static_cast<unsigned long long>(max_count), secs);
  return o;
}

Outcome negative_controls() {
  Outcome o;
  check::WorkloadScript s;
  s.threads = {{{Op::write(0x0, 0x11), Op::write(0x40, 0x22)}}};
  const Words after = run_ops({}, s.threads[0][0]);
  for (const Cell& cell : {Cell{Mechanism::Seq, TC}, Cell{Mechanism::Seq, PC}, Cell{Mechanism::Htm, TC}}) {
    const auto cfg = config_of(cell);
    const auto v = check::check_atomicity(s, cfg);
    std::string why;
    if (v.pass || !v.counterexample) {
      why = "no counterexample";
    } else {
      const auto& cx = *v.counterexample;
      const auto torn = cx.recovered;
      if (torn.equal_range(image_of({}), 0, cfg.heap_size) || torn.equal_range(image_of(after), 0, cfg.heap_size)) {
        why = "witness heap is not torn";
      }
      const auto parsed = check::parse_verdict(check::format_verdict(v));
      const auto again = check::replay(s, cfg, *parsed.counterexample);
      if (again.pass || again.counterexample->actual != cx.actual) why = "witness does not replay";
    }
    if (!why.empty()) {
      o.pass = false;
      o.detail += name_of(cell) + ": " + why + "; ";
    } else {
      o.detail += name_of(cell) + " torn+replayed; ";
    }
  }
  return o;
}

std::uint64_t fences_of_one_tx(Mechanism m, int writes, bool* fast = nullptr) {
  tx::MechanismConfig cfg;
  cfg.mechanism = m;
  cfg.domain = TC;
  tx::Runtime rt(cfg, pmem::ByteImage(), false);
  OpList ops;
  for (int i = 0; i < writes; ++i) ops.push_back(Op::write(64 * i, i + 1));
  const auto before = rt.stats().sfences;
  const auto r = rt.run(0, tx::compile(ops));
  if (fast) *fast = r.fast_path;
  return rt.stats().sfences - before;
}

Outcome fence_formulas() {
  Outcome o;
  const auto redo1 = fences_of_one_tx(Mechanism::SpinRedo, 1);
  for (int w = 1; w <= 32; ++w) {
    const auto undo = fences_of_one_tx(Mechanism::SpinUndo, w);
    const auto redo = fences_of_one_tx(Mechanism::SpinRedo, w);
    bool fast = false;
    const auto cc = fences_of_one_tx(Mechanism::CcHtmUndoFb, w, &fast);
    bool fast_r = false;
    const auto cc_r = fences_of_one_tx(Mechanism::CcHtmRedoFb, w, &fast_r);
    if (undo != static_cast<std::uint64_t>(w) + 2 || redo != redo1 || !fast || cc != 4 || !fast_r || cc_r != 4) {
      o.pass = false;
      o.detail += fmt("W=%d undo=%llu redo=%llu cchtm=%llu; ", w, (unsigned long long)undo, (unsigned long long)redo,
                      (unsigned long long)cc);
    }
  }
  o.detail += fmt("W=1..32: undo=W+2, redo=%llu, cchtm fast path=4", (unsigned long long)redo1);
  return o;
}

Outcome persistent_cache_elision() {
  Outcome o;
  std::size_t runs = 0;
  const Mechanism mechs[] = {Mechanism::SpinUndo, Mechanism::SpinRedo, Mechanism::Stm, Mechanism::CcStm};
  std::vector<bench::WorkloadSpec> specs;
  for (auto kind : {bench::WorkloadKind::Hashmap, bench::WorkloadKind::CritBitTree, bench::WorkloadKind::Synthetic}) {
    for (std::size_t threads : {1, 4}) {
      for (double rf : {0.0, 0.5}) {
        bench::WorkloadSpec s;
        s.kind = kind;
        s.threads = threads;
        s.read_fraction = rf;
        s.ops = 200;
        s.key_space = 512;
        specs.push_back(s);
      }
    }
  }
  for (const char* p : {"small", "moderate", "labyrinth"}) {
    auto s = bench::preset(p);
    s.ops = 10;
    specs.push_back(s);
  }
  for (auto m : mechs) {
    for (const auto& s : specs) {
      tx::MechanismConfig cfg;
      cfg.mechanism = m;
      cfg.domain = PC;
      const auto r = bench::run_workload(s, cfg);
      ++runs;
      if (r.stats.sfences + r.stats.clwbs != 0 || !r.invariants_ok) {
        o.pass = false;
        o.detail += fmt("%s/%s: %llu fences %llu flushes; ", tx::to_string(m), bench::to_string(s.kind),
                        (unsigned long long)r.stats.sfences, (unsigned long long)r.stats.clwbs);
      }
    }
    // Whole-runtime counters, setup included, over random transactions.
    tx::MechanismConfig cfg;
    cfg.mechanism = m;
    cfg.domain = PC;
    tx::Runtime rt(cfg, pmem::ByteImage(), false);
    std::mt19937_64 rng(static_cast<int>(m));
    static constexpr Addr pool[] = {0x0, 0x8, 0x40, 0x80, 0x1000, 0x2040};
    for (int i = 0; i < 2000; ++i) rt.run(0, tx::compile(random_tx(rng, pool, 1 + i % 6)));
    const auto st = rt.stats();
    if (st.sfences + st.clwbs != 0) {
      o.pass = false;
      o.detail += fmt("%s random: nonzero; ", tx::to_string(m));
    }
  }
  o.detail += fmt("%zu workload runs + 4x2000 random transactions, sfences+clwbs=0", runs);
  return o;
}

Outcome redo_read_indirection() {
  Outcome o;
  std::mt19937_64 rng(5);
  constexpr Addr kLog = 0x8000;
  static constexpr Addr pool[] = {0x0, 0x8, 0x40, 0x48, 0x80, 0xc0, 0xc8, 0x100};
  std::size_t failures = 0, raw_reads = 0;
  constexpr int kCases = 100000;
  for (auto d : {TC, PC}) {
    pmem::MemoryConfig mc;
    mc.size = 64 * 1024;
    mc.domain = d;
    mc.record_events = false;
    pmem::MemoryImage m(mc);
    wal::WalEngine e(m, 0, {kLog, 16 * 1024});
    for (int c = 0; c < kCases / 2; ++c) {
      Words home;
      for (Addr a : pool) home[a] = m.load_u64(0, a);
      Words pending;
      auto tx = e.begin(wal::TxMode::Redo);
      const int n = 1 + static_cast<int>(rng() % 12);
      bool ok = true;
      for (int i = 0; i < n; ++i) {
        const Addr a = pool[rng() % 8];
        if (rng() % 2) {
          const std::uint64_t v = rng();
          e.write_u64(tx, a, v);
          pending[a] = v;
        } else {
          const auto it = pending.find(a);
          raw_reads += it != pending.end();
          ok &= e.read_u64(tx, a) == (it == pending.end() ? home[a] : it->second);
        }
        for (Addr h : pool) ok &= m.load_u64(0, h) == home[h];
      }
      const bool commit = rng() % 4 != 0;
      if (commit) {
        e.commit(tx);
      } else {
        e.abort(tx);
      }
      for (Addr h : pool) {
        const auto it = pending.find(h);
        ok &= m.load_u64(0, h) == (commit && it != pending.end() ? it->second : home[h]);
      }
      failures += !ok;
    }
  }
  o.pass = failures == 0;
  o.detail = fmt("%d cases, %zu read-after-write reads, %zu failures", kCases, raw_reads, failures);
  return o;
}

Outcome dependency_ordering() {
  using DS = check::DependencyScript;
  Outcome o;
  const std::vector<Cell> cells{
      {Mechanism::CcStm, TC},          {Mechanism::CcStm, PC},          {Mechanism::CcHtmUndoFb, TC},
      {Mechanism::CcHtmUndoFb, TC, 1}, {Mechanism::CcHtmUndoFb, TC, 2}, {Mechanism::CcHtmRedoFb, TC},
      {Mechanism::CcHtmRedoFb, TC, 1}, {Mechanism::CcHtmRedoFb, TC, 2}, {Mechanism::SpinUndo, TC},
      {Mechanism::SpinUndo, PC},       {Mechanism::SpinRedo, TC},       {Mechanism::SpinRedo, PC},
  };
  std::size_t total = 0, with_pd = 0;
  for (const auto& cell : cells) {
    const auto cfg = config_of(cell);
    const auto script = DS::make();
    auto ex = check::execute_script(script, cfg);
    bool saw_x = false;
    for (const auto& r : ex.txs) saw_x |= r.thread == 1 && r.reads.count(DS::pA) && r.reads.at(DS::pA) == DS::x;
    std::size_t bad = 0, pd = 0, n = 0;
    std::uint64_t max_count = 0;
    check::for_each_crash(ex, exhaustive_policy(), [&](const check::CrashVisit& v) {
      max_count = std::max(max_count, v.tracker->state_count());
      ++n;
      if (!v.heap) {
        ++bad;
        return true;
      }
      const bool d_new = v.heap->read_u64(DS::pD) == DS::z;
      pd += d_new;
      bad += d_new && v.heap->read_u64(DS::pA) != DS::x;
      return true;
    });
    const auto verdict = check::check_dependency_order(ex, exhaustive_policy());
    total += n;
    with_pd += pd;
    if (bad || !verdict.pass || !saw_x || pd == 0 || max_count > kExhaustiveCap) {
      o.pass = false;
      o.detail += fmt("%s: %zu violations, checker %s, pD-new states %zu; ", name_of(cell).c_str(), bad,
                      verdict.pass ? "pass" : "fail", pd);
    }
  }
  o.detail += fmt("%zu cells, %zu crash states, %zu with pD new", cells.size(), total, with_pd);
  return o;
}

Outcome serializability_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const Mechanism mechs[] = {Mechanism::Stm,         Mechanism::CcStm,    Mechanism::Htm,     Mechanism::CcHtmUndoFb,
                             Mechanism::CcHtmRedoFb, Mechanism::SpinUndo, Mechanism::SpinRedo};
  std::size_t scripts = 0;
  for (auto m : mechs) {
    std::mt19937_64 rng(0x5e71a1 + static_cast<int>(m));
    std::size_t failures = 0, fallbacks = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto s = concurrent_script(rng);
      Cell cell{m, TC, tx::uses_htm(m) && i % 3 == 0 ? std::size_t{1} : std::size_t{1024}};
      const auto v = check::check_serializable(s, config_of(cell));
      failures += !v.pass;
      fallbacks += cell.capacity_lines == 1;
      ++scripts;
    }
    if (failures) {
      o.pass = false;
      o.detail += fmt("%s: %zu of 1000 not serializable; ", tx::to_string(m), failures);
    }
  }
  // Control: the unsynchronized baseline must be caught on the same family.
  std::mt19937_64 rng(0x5e71a1);
  std::size_t caught = 0;
  for (int i = 0; i < 1000; ++i) caught += !check::check_serializable(concurrent_script(rng), config_of({Mechanism::Seq, TC})).pass;
  if (caught == 0) {
    o.pass = false;
    o.detail += "seq control never caught; ";
  }
  const double secs = seconds_since(t0);
  if (secs >= 600) {
    o.pass = false;
    o.detail += "runtime over 10 min; ";
  }
  o.detail += fmt("%zu mechanisms x 1000 scripts, seq control caught %zu/1000, %.1fs", std::size(mechs), caught, secs);
  return o;
}

Outcome htm_behaviour() {
  Outcome o;
  // Over-capacity transactions all take the fallback; at capacity they do not.
  for (const Cell& base : {Cell{Mechanism::Htm, TC}, Cell{Mechanism::Htm, PC}, Cell{Mechanism::CcHtmUndoFb, TC},
                           Cell{Mechanism::CcHtmRedoFb, TC}}) {
    for (std::size_t cap : {1, 4, 16}) {
      for (std::size_t lines : {cap, cap + 1}) {
        auto cfg = config_of(base);
        cfg.htm.capacity_lines = cap;
        tx::Runtime rt(cfg, pmem::ByteImage(), false);
        OpList ops;
        for (std::size_t i = 0; i < lines; ++i) ops.push_back(Op::write(64 * i, i + 1));
        for (int n = 0; n < 20; ++n) rt.run(0, tx::compile(ops));
        const auto st = rt.stats();
        const double want = lines > cap ? 0.0 : 1.0;
        if (st.success_rate != want || (lines > cap && st.fallbacks != 20)) {
          o.pass = false;
          o.detail += fmt("%s cap=%zu lines=%zu success=%.3f; ", name_of(base).c_str(), cap, lines, st.success_rate);
        }
      }
    }
  }
  // Workload level: every transaction one line over capacity.
  {
    bench::WorkloadSpec s;
    s.tx_reads = 0;
    s.tx_writes = 9;
    s.ops = 50;
    tx::MechanismConfig cfg;
    cfg.mechanism = Mechanism::CcHtmUndoFb;
    cfg.htm.capacity_lines = 8;
    const auto r = bench::run_workload(s, cfg);
    if (r.success_rate != 0.0) {
      o.pass = false;
      o.detail += fmt("workload success %.3f; ", r.success_rate);
    }
  }
  // Requester wins: the accessing transaction dooms exactly the holder.
  pmem::MemoryConfig mc;
  mc.size = 64 * 1024;
  for (int scenario = 0; scenario < 3; ++scenario) {
    pmem::MemoryImage m(mc);
    htm::HtmSystem h(m, 3, {});
    auto& holder = h.begin(0);
    auto& bystander = h.begin(2);
    if (scenario == 1) {
      h.read(holder, 0x40);
    } else {
      h.write(holder, 0x40, 1);
    }
    h.read(bystander, 0x200);
    auto& requester = h.begin(1);
    if (scenario == 0) {
      h.read(requester, 0x48);
    } else {
      h.write(requester, 0x40, 2);
    }
    const bool ok = holder.status == htm::HwStatus::Aborted && holder.abort_code == AbortCode::Conflict &&
                    requester.status == htm::HwStatus::Active && bystander.status == htm::HwStatus::Active &&
                    h.stats().total_aborts() == 1;
    h.commit(requester);
    h.commit(bystander);
    if (!ok || m.load_u64(0, 0x40) != (scenario == 0 ? 0u : 2u)) {
      o.pass = false;
      o.detail += fmt("requester-wins scenario %d; ", scenario);
    }
  }
  // Log exhaustion: the default region, then regions of k entries.
  auto exhaust = [&](std::uint64_t capacity, std::size_t* written) {
    constexpr Addr kLog = 0x10000;
    pmem::MemoryConfig big;
    big.size = kLog + capacity + 4096;
    big.record_events = false;
    pmem::MemoryImage m(big);
    htm::HtmConfig hc;
    hc.cc_enabled = true;
    hc.capacity_lines = 1 << 20;
    htm::HtmSystem h(m, 1, hc, {{kLog, capacity}});
    auto& tx = h.begin(0);
    *written = 0;
    try {
      for (;;) {
        h.write(tx, 0x40, *written);
        ++*written;
      }
    } catch (const TxAbort& e) {
      return e.code() == AbortCode::NoLogSpace && h.stats().aborts_of(AbortCode::NoLogSpace) == 1;
    }
  };
  auto fits = [](std::uint64_t capacity) {
    std::size_t n = 0;
    while (wal::capacity_for_entries(n + 1) <= capacity) ++n;
    return n;
  };
  std::size_t written = 0;
  const bool big_ok = exhaust(wal::kDefaultLogCapacity, &written);
  if (wal::kDefaultLogCapacity != 10ULL << 20 || !big_ok || written != fits(wal::kDefaultLogCapacity)) {
    o.pass = false;
    o.detail += fmt("default region: %zu writes before NO_LOG_SPACE; ", written);
  }
  const std::size_t default_entries = written;
  for (std::size_t k = 1; k <= 8; ++k) {
    if (!exhaust(wal::capacity_for_entries(k), &written) || written != k) {
      o.pass = false;
      o.detail += fmt("k=%zu: %zu writes; ", k, written);
    }
  }
  // Through the runtime: the fallback completes the transaction.
  {
    tx::MechanismConfig cfg;
    cfg.mechanism = Mechanism::CcHtmRedoFb;
    cfg.htm_log_capacity = wal::capacity_for_entries(2);
    tx::Runtime rt(cfg, pmem::ByteImage(), false);
    rt.run(0, tx::compile({Op::write(0, 1), Op::write(64, 2), Op::write(128, 3)}));
    const auto st = rt.stats();
    if (st.aborts[static_cast<int>(AbortCode::NoLogSpace)] == 0 || st.fallbacks != 1 ||
        rt.memory().load_u64(0, 128) != 3) {
      o.pass = false;
      o.detail += "runtime NO_LOG_SPACE fallback; ";
    }
  }
  o.detail += fmt("capacity fallback, 3 requester-wins scenarios, NO_LOG_SPACE after %zu default-region entries and k=1..8",
                  default_entries);
  return o;
}

Outcome ordering_proxy() {
  Outcome o;
  auto fences = [](Mechanism m, PersistenceDomain d) {
    auto s = bench::preset("small");
    s.tx_writes = 8;
    s.threads = 1;
    s.ops = 200;
    tx::MechanismConfig cfg;
    cfg.mechanism = m;
    cfg.domain = d;
    bench::RunOptions opts;
    opts.deterministic = true;
    return bench::run_workload(s, cfg, opts).stats.sfences;
  };
  const auto cc = fences(Mechanism::CcHtmUndoFb, TC);
  const auto redo = fences(Mechanism::SpinRedo, TC);
  const auto undo = fences(Mechanism::SpinUndo, TC);
  const bool transient_ok = cc < redo && redo < undo;
  std::uint64_t pc_total = 0;
  for (auto m : {Mechanism::Htm, Mechanism::SpinRedo, Mechanism::SpinUndo, Mechanism::CcStm}) pc_total += fences(m, PC);
  o.pass = transient_ok && pc_total == 0;
  o.detail = fmt("transient: cchtm=%llu redo=%llu undo=%llu (need cchtm<redo<undo: %s); persistent total=%llu",
                 (unsigned long long)cc, (unsigned long long)redo, (unsigned long long)undo,
                 transient_ok ? "yes" : "no", (unsigned long long)pc_total);
  return o;
}

Outcome recovery_idempotence() {
  Outcome o;
  const std::vector<Cell> cells{
      {Mechanism::SpinUndo, TC},        {Mechanism::SpinUndo, PC},        {Mechanism::SpinRedo, TC},
      {Mechanism::SpinRedo, PC},        {Mechanism::CcStm, TC},           {Mechanism::CcStm, PC},
      {Mechanism::Htm, PC, 1},          {Mechanism::Htm, TC, 1},          {Mechanism::CcHtmUndoFb, TC, 2},
      {Mechanism::CcHtmRedoFb, TC, 2},
  };
  constexpr std::size_t kTotal = 10000;
  const std::size_t quota = kTotal / cells.size();
  std::size_t sampled = 0, changed = 0, failures = 0;
  for (const auto& cell : cells) {
    std::mt19937_64 rng(0x1de + static_cast<int>(cell.m) * 7 + static_cast<int>(cell.d));
    std::size_t n = 0;
    while (n < quota) {
      const auto s = concurrent_script(rng);
      auto ex = check::execute_script(s, config_of(cell));
      const auto total = ex.runtime->layout().total;
      auto policy = check::CrashPolicy::sampled(rng(), 6);
      policy.max_states = 32;
      check::for_each_crash(ex, policy, [&](const check::CrashVisit& v) {
        const auto& raw = v.state->persisted;
        try {
          const auto once = tx::global_recover(ex.config, raw);
          const auto twice = tx::global_recover(ex.config, once);
          failures += !twice.equal_range(once, 0, total);
          changed += !once.equal_range(raw, 0, total);
        } catch (const CorruptLog&) {
          ++failures;
        }
        return ++n < quota;
      });
    }
    sampled += n;
  }
  o.pass = failures == 0 && sampled >= kTotal && changed > 0;
  o.detail = fmt("%zu sampled states over %zu cells, %zu changed by recovery, %zu not idempotent", sampled,
                 cells.size(), changed, failures);
  return o;
}

Outcome mutation_sensitivity() {
  Outcome o;
  struct Mutant {
    const char* name;
    wal::WalFaults faults;
  };
  wal::WalFaults skip_fence, early_commit;
  skip_fence.skip_undo_append_fence = true;
  early_commit.commit_before_writeset_persist = true;
  for (const Mutant& mu : {Mutant{"undo append fence removed", skip_fence},
                           Mutant{"commit record before write set", early_commit}}) {
    for (const Cell& cell : {Cell{Mechanism::SpinUndo, TC}, Cell{Mechanism::CcHtmUndoFb, TC, 1}}) {
      auto cfg = config_of(cell);
      cfg.faults = mu.faults;
      const auto st = sweep_family(cfg, 0x307 + static_cast<int>(cell.m), 3);
      bool replayed = false;
      if (st.cx) {
        check::Verdict failing;
        failing.pass = false;
        failing.counterexample = st.cx;
        const auto parsed = check::parse_verdict(check::format_verdict(failing));
        replayed = !check::replay(st.cx_script, cfg, *parsed.counterexample).pass;
      }
      const bool caught = st.checker_failures > 0 && st.oracle_violations > 0 && replayed;
      if (!caught) o.pass = false;
      o.detail += fmt("%s on %s: %zu/%zu scripts fail%s; ", mu.name, name_of(cell).c_str(), st.checker_failures,
                      st.scripts, caught ? "" : " (NOT CAUGHT)");
    }
  }
  return o;
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "exhaustive atomicity", exhaustive_atomicity},
    {2, "negative controls", negative_controls},
    {3, "fence-count formulas", fence_formulas},
    {4, "persistent-cache elision", persistent_cache_elision},
    {5, "redo read indirection", redo_read_indirection},
    {6, "dependency ordering", dependency_ordering},
    {7, "serializability oracle", serializability_oracle},
    {8, "htm behaviour", htm_behaviour},
    {9, "fence ordering proxy", ordering_proxy},
    {10, "recovery idempotence", recovery_idempotence},
    {11, "mutation sensitivity", mutation_sensitivity},
};

}  // namespace
}  // namespace pmtx

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int which = 0;
  app.add_option("--criterion", which, "criterion number, 0 for all")->check(CLI::Range(0, 11));
  CLI11_PARSE(app, argc, argv);
  bool all_pass = true;
  for (const auto& c : pmtx::kCriteria) {
    if (which != 0 && which != c.id) continue;
    const auto t0 = std::chrono::steady_clock::now();
    pmtx::Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all_pass &= o.pass;
    std::printf("criterion %2d %-26s %s  %s (%.1fs)\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                pmtx::seconds_since(t0));
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
