#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "oracles/prefix_sweep.hpp"
#include "pmtx/tx/op_list.hpp"
#include "pmtx/tx/runtime.hpp"

namespace pmtx::tx {
namespace {

constexpr auto TC = PersistenceDomain::TransientCaches;
constexpr auto PC = PersistenceDomain::PersistentCaches;

MechanismConfig small(Mechanism m, PersistenceDomain d, std::size_t threads = 1) {
  MechanismConfig c;
  c.mechanism = m;
  c.domain = d;
  c.threads = threads;
  c.heap_size = 4096;
  c.log_capacity = 4096;
  return c;
}

bool applicable(Mechanism m, PersistenceDomain d) { return !(uses_cc_htm(m) && d == PC); }

// Reference interpreter over a plain map.
void interpret(std::map<Addr, std::uint64_t>& heap, const OpList& ops) {
  std::uint64_t regs[kRegisters] = {};
  for (const Op& op : ops) {
    switch (op.kind) {
      case Op::Kind::Read: regs[op.reg] = heap[op.addr]; break;
      case Op::Kind::Write: heap[op.addr] = op.value; break;
      case Op::Kind::WriteReg: heap[op.addr] = regs[op.reg] + op.value; break;
      case Op::Kind::WriteIf:
        if (regs[op.reg] == op.equals) heap[op.addr] = op.value;
        break;
    }
  }
}

OpList random_ops(std::mt19937_64& rng, int n, Addr words) {
  OpList ops;
  for (int i = 0; i < n; ++i) {
    const Addr a = 8 * (rng() % words);
    const unsigned r = static_cast<unsigned>(rng() % 3);
    switch (rng() % 4) {
      case 0: ops.push_back(Op::read(a, r)); break;
      case 1: ops.push_back(Op::write(a, rng() % 100)); break;
      case 2: ops.push_back(Op::write_reg(a, r, 1 + rng() % 5)); break;
      default: ops.push_back(Op::write_if(a, rng() % 100, r, rng() % 3)); break;
    }
  }
  return ops;
}

TEST(Mechanism, NamesRoundTrip) {
  for (Mechanism m : kAllMechanisms) EXPECT_EQ(parse_mechanism(to_string(m)), m);
  EXPECT_EQ(parse_mechanism("CCSTM"), Mechanism::CcStm);
  EXPECT_EQ(parse_mechanism("spin-redo"), Mechanism::SpinRedo);
  EXPECT_THROW(parse_mechanism("tl2"), ConfigError);
}

TEST(Mechanism, CcHtmIsRejectedUnderPersistentCaches) {
  EXPECT_THROW(Runtime(small(Mechanism::CcHtmUndoFb, PC)), ConfigError);
  EXPECT_THROW(Runtime(small(Mechanism::CcHtmRedoFb, PC)), ConfigError);
  EXPECT_NO_THROW(Runtime(small(Mechanism::Htm, PC)));
}

TEST(Mechanism, InvalidSizesAreRejected) {
  auto c = small(Mechanism::SpinUndo, TC);
  c.threads = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.threads = 65;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small(Mechanism::SpinUndo, TC);
  c.heap_size = 100;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small(Mechanism::SpinUndo, TC);
  c.log_capacity = 8;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, KeyValueFileAppliesKnownKeysAndKeepsTheRest) {
  std::istringstream in(
      "# lab config\n"
      "mechanism = cchtm-redo\n"
      "domain=tc\n"
      "threads = 4   # four workers\n"
      "log_capacity = 0x10000\n"
      "capacity_lines = 16\n"
      "max_retries = 3\n"
      "retry_explicit = false\n"
      "\n"
      "workload = hashmap\n");
  auto kv = parse_key_values(in);
  const auto c = apply_config(MechanismConfig{}, kv);
  EXPECT_EQ(c.mechanism, Mechanism::CcHtmRedoFb);
  EXPECT_EQ(c.domain, TC);
  EXPECT_EQ(c.threads, 4u);
  EXPECT_EQ(c.log_capacity, 0x10000u);
  EXPECT_EQ(c.htm.capacity_lines, 16u);
  EXPECT_EQ(c.htm.max_retries, 3u);
  EXPECT_FALSE(c.htm.retry_explicit);
  EXPECT_EQ(c.effective_htm().fallback_mode, wal::TxMode::Redo);
  EXPECT_TRUE(c.effective_htm().cc_enabled);
  ASSERT_EQ(kv.size(), 1u);
  EXPECT_EQ(kv.at("workload"), "hashmap");
}

TEST(Config, MalformedInputIsConfigError) {
  for (const char* text : {"mechanism\n", "=x\n", "threads = many\n", "domain = dram\n", "fallback = shadow\n",
                           "retry_explicit = maybe\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(
        {
          auto kv = parse_key_values(in);
          apply_config(MechanismConfig{}, kv);
        },
        ConfigError)
        << text;
  }
}

TEST(Layout, RegionsAreDisjointAndLineAligned) {
  auto c = small(Mechanism::CcHtmUndoFb, TC, 3);
  c.log_capacity = 1000;
  const Layout l = layout_for(c);
  ASSERT_EQ(l.wal.size(), 3u);
  ASSERT_EQ(l.htm.size(), 3u);
  auto regions = l.all_regions();
  std::sort(regions.begin(), regions.end(), [](auto& a, auto& b) { return a.base < b.base; });
  Addr prev_end = c.heap_size;
  for (const auto& r : regions) {
    EXPECT_EQ(r.base % c.line_size, 0u);
    EXPECT_GE(r.base, prev_end);
    prev_end = r.base + r.capacity;
  }
  EXPECT_LE(prev_end, l.total);
  EXPECT_TRUE(layout_for(small(Mechanism::Seq, TC, 3)).all_regions().empty());
  EXPECT_TRUE(layout_for(small(Mechanism::Stm, TC, 3)).all_regions().empty());
}

TEST(OpList, TextRoundTrip) {
  const OpList ops{Op::read(0x40, 0), Op::write(0x80, 7), Op::write_reg(0xc0, 0, 2), Op::write_if(0x100, 3, 0, 9)};
  EXPECT_EQ(parse_ops(format_ops(ops)), ops);
  EXPECT_EQ(parse_ops("r 64 r1;w 0x48 5;"), (OpList{Op::read(64, 1), Op::write(0x48, 5)}));
}

TEST(OpList, MalformedTextIsUsageError) {
  for (const char* text : {"x 0 1", "r 0", "r 0 r9", "w 3 1", "w 0x 1", "wif 0 1 r0", "wr 0 q1 1"}) {
    EXPECT_THROW(parse_ops(text), UsageError) << text;
  }
}

TEST(OpList, CompiledBodyMatchesInterpreter) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const OpList ops = random_ops(rng, 12, 6);
    std::map<Addr, std::uint64_t> expect;
    interpret(expect, ops);
    Runtime rt(small(Mechanism::Seq, TC));
    rt.run(0, compile(ops));
    for (Addr a = 0; a < 48; a += 8) EXPECT_EQ(rt.memory().load_u64(0, a), expect[a]);
  }
}

class EveryMechanism : public ::testing::TestWithParam<std::tuple<Mechanism, PersistenceDomain>> {
 protected:
  void SetUp() override {
    if (!applicable(std::get<0>(GetParam()), std::get<1>(GetParam()))) GTEST_SKIP() << "not applicable";
  }
  MechanismConfig config(std::size_t threads = 1) const {
    return small(std::get<0>(GetParam()), std::get<1>(GetParam()), threads);
  }
};

TEST_P(EveryMechanism, SequentialRunsMatchInterpreter) {
  std::mt19937_64 rng(5);
  Runtime rt(config());
  std::map<Addr, std::uint64_t> expect;
  std::uint64_t last = 0;
  for (int k = 0; k < 40; ++k) {
    const OpList ops = random_ops(rng, 1 + static_cast<int>(rng() % 10), 16);
    interpret(expect, ops);
    const auto r = rt.run(0, compile(ops));
    EXPECT_GT(r.stamp, last);
    last = r.stamp;
  }
  for (Addr a = 0; a < 128; a += 8) EXPECT_EQ(rt.memory().load_u64(0, a), expect[a]) << a;
  EXPECT_EQ(rt.stats().commits, 40u);
}

TEST_P(EveryMechanism, RecoveryOfQuiescentImageIsIdentityOnHeap) {
  Runtime rt(config());
  rt.run(0, compile({Op::write(0, 1), Op::write(64, 2)}));
  for (ThreadId t = 0; t < 1; ++t) rt.memory().drain(t);
  const auto img = rt.memory().volatile_image();
  EXPECT_EQ(global_recover(rt.config(), img).slice(0, 4096), img.slice(0, 4096));
}

TEST_P(EveryMechanism, ConcurrentIncrementsAreNotLost) {
  if (std::get<0>(GetParam()) == Mechanism::Seq) GTEST_SKIP() << "no isolation";
  Runtime rt(config(4));
  constexpr int kPerThread = 150;
  std::vector<std::thread> workers;
  for (ThreadId t = 0; t < 4; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < kPerThread; ++i) {
        rt.run(t, [](TxContext& ctx) {
          ctx.write(0x40, ctx.read(0x40) + 1);
          const Addr mine = 0x80 + 64 * ctx.thread();
          ctx.write(mine, ctx.read(mine) + 1);
        });
      }
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(rt.memory().load_u64(0, 0x40), 4u * kPerThread);
  for (ThreadId t = 0; t < 4; ++t) EXPECT_EQ(rt.memory().load_u64(0, 0x80 + 64 * t), std::uint64_t{kPerThread});
  EXPECT_EQ(rt.stats().commits, 4u * kPerThread);
}

TEST_P(EveryMechanism, LogOverflowSurfacesAsConfigError) {
  const Mechanism m = std::get<0>(GetParam());
  if (!uses_wal(m)) GTEST_SKIP() << "no log";
  auto c = config();
  c.log_capacity = wal::capacity_for_entries(2);
  c.htm.capacity_lines = 2;  // the oversized transaction reaches the logged fallback
  Runtime rt(c);
  rt.run(0, compile({Op::write(0, 1), Op::write(64, 2)}));
  EXPECT_THROW(rt.run(0, compile({Op::write(0, 1), Op::write(64, 2), Op::write(128, 3)})), ConfigError);
  EXPECT_EQ(rt.memory().load_u64(0, 0), 1u);
  EXPECT_EQ(rt.memory().load_u64(0, 128), 0u);
}

INSTANTIATE_TEST_SUITE_P(All, EveryMechanism, ::testing::Combine(::testing::ValuesIn(kAllMechanisms), ::testing::Values(TC, PC)),
                         [](const auto& info) {
                           std::string n = std::string(to_string(std::get<0>(info.param))) + "_" +
                                           to_string(std::get<1>(info.param));
                           for (char& ch : n) {
                             if (ch == '-') ch = '_';
                           }
                           return n;
                         });

TEST(Runtime, PersistentCachesDropAllFlushesAndFences) {
  for (Mechanism m : {Mechanism::SpinUndo, Mechanism::SpinRedo, Mechanism::CcStm, Mechanism::Htm}) {
    for (auto d : {TC, PC}) {
      Runtime rt(small(m, d));
      for (int k = 0; k < 5; ++k) rt.run(0, compile({Op::read(0, 0), Op::write_reg(0, 0, 1), Op::write(64, k)}));
      const auto s = rt.stats();
      if (d == PC) {
        EXPECT_EQ(s.sfences, 0u) << to_string(m);
        EXPECT_EQ(s.clwbs, 0u) << to_string(m);
      } else if (m != Mechanism::Htm) {
        EXPECT_GT(s.sfences, 0u) << to_string(m);
      }
    }
  }
}

TEST(Runtime, SpinlockMechanismNeverAborts) {
  Runtime rt(small(Mechanism::SpinUndo, TC, 2));
  std::vector<std::thread> workers;
  for (ThreadId t = 0; t < 2; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) rt.run(t, compile({Op::read(0, 0), Op::write_reg(0, 0, 1)}));
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(rt.stats().total_aborts(), 0u);
  EXPECT_EQ(rt.memory().load_u64(0, 0), 400u);
}

// Signals when the contender starts spinning.
class WaitProbe : public Interleaver {
 public:
  void yield(ThreadId) override {
    spinning.store(true);
    std::this_thread::yield();
  }
  std::atomic<bool> spinning{false};
};

TEST(Spinlock, ContendedAcquisitionIsCounted) {
  pmem::MemoryImage mem(pmem::MemoryConfig{});
  Spinlock lock;
  WaitProbe probe;
  lock.acquire(0);
  std::thread contender([&] {
    lock.acquire(1, &probe);
    lock.release(1, mem);
  });
  while (!probe.spinning.load()) std::this_thread::yield();
  EXPECT_EQ(lock.holder(), 0);
  lock.release(0, mem);
  contender.join();
  EXPECT_EQ(lock.contended(), 1u);
  EXPECT_FALSE(lock.held());
  lock.acquire(0);
  EXPECT_EQ(lock.contended(), 1u);
  EXPECT_THROW(lock.release(1, mem), UsageError);
  lock.release(0, mem);
}

TEST(Spinlock, ReleaseDrains) {
  pmem::MemoryImage mem(pmem::MemoryConfig{});
  Spinlock lock;
  lock.acquire(0);
  lock.release(0, mem);
  EXPECT_EQ(mem.counters(0).drains, 1u);
}

TEST(Runtime, SeqRecoveryIsIdentity) {
  const auto c = small(Mechanism::Seq, TC);
  pmem::ByteImage img;
  img.write_u64(0, 5);
  img.write_u64(5000, 9);
  EXPECT_EQ(global_recover(c, img), img);
}

TEST(Runtime, HtmOverCapacityUsesFallback) {
  auto c = small(Mechanism::CcHtmUndoFb, TC);
  c.htm.capacity_lines = 2;
  Runtime rt(c);
  EXPECT_TRUE(rt.run(0, compile({Op::write(0, 1)})).fast_path);
  EXPECT_FALSE(rt.run(0, compile({Op::write(0, 1), Op::write(64, 1), Op::write(128, 1)})).fast_path);
  const auto s = rt.stats();
  EXPECT_EQ(s.fallbacks, 1u);
  EXPECT_DOUBLE_EQ(s.success_rate, 0.5);
}

class RuntimeCrash : public ::testing::TestWithParam<std::tuple<Mechanism, PersistenceDomain>> {};

TEST_P(RuntimeCrash, RecoveredHeapIsACommittedPrefix) {
  const auto [m, d] = GetParam();
  if (!applicable(m, d)) GTEST_SKIP() << "not applicable";
  auto c = small(m, d);
  c.htm.capacity_lines = 3;  // some transactions take the fallback path
  Runtime rt(c);
  std::mt19937_64 rng(3);
  auto run = [&](int) {
    OpList ops;
    const int w = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < w; ++i) {
      const Addr a = 64 * (rng() % 6) + 8 * (rng() % 2);
      ops.push_back(Op::read(a, 0));
      ops.push_back(Op::write_reg(a, 0, 1 + rng() % 9));
    }
    rt.run(0, compile(ops));
  };
  const auto r = oracle::prefix_sweep(rt.memory(), c.heap_size, 5, run,
                                      [&](const pmem::ByteImage& img) { return global_recover(c, img); });
  EXPECT_GT(r.states, 0u);
  EXPECT_EQ(r.violations, 0u);
}

INSTANTIATE_TEST_SUITE_P(Protected, RuntimeCrash,
                         ::testing::Combine(::testing::Values(Mechanism::SpinUndo, Mechanism::SpinRedo, Mechanism::CcStm,
                                                              Mechanism::CcHtmUndoFb, Mechanism::CcHtmRedoFb),
                                            ::testing::Values(TC, PC)),
                         [](const auto& info) {
                           std::string n = std::string(to_string(std::get<0>(info.param))) + "_" +
                                           to_string(std::get<1>(info.param));
                           for (char& ch : n) {
                             if (ch == '-') ch = '_';
                           }
                           return n;
                         });

TEST(RuntimeCrash, UnloggedBaselineTearsUnderTransientCaches) {
  const auto c = small(Mechanism::Seq, TC);
  Runtime rt(c);
  auto run = [&](int k) { rt.run(0, compile({Op::write(0, k + 1), Op::write(64, k + 1)})); };
  const auto r = oracle::prefix_sweep(rt.memory(), c.heap_size, 3, run,
                                      [&](const pmem::ByteImage& img) { return global_recover(c, img); });
  EXPECT_GT(r.violations, 0u);
}

}  // namespace
}  // namespace pmtx::tx
