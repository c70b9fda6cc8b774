#include "pmtx/bench/workload.hpp"

#include <chrono>
#include <cstdio>
#include <random>
#include <thread>
#include <unordered_set>

#include "json.hpp"
#include "pmtx/bench/critbit.hpp"
#include "pmtx/bench/hashmap.hpp"
#include "pmtx/check/scheduler.hpp"

namespace pmtx::bench {

const char* to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::Hashmap: return "hashmap";
    case WorkloadKind::CritBitTree: return "ctree";
    case WorkloadKind::Synthetic: return "synthetic";
  }
  return "?";
}

void WorkloadSpec::validate() const {
  if (threads < 1 || threads > 64) throw ConfigError("threads must be between 1 and 64");
  if (key_space < 1) throw ConfigError("key space must be positive");
  if (!(read_fraction >= 0.0 && read_fraction <= 1.0)) throw ConfigError("read fraction must lie in [0, 1]");
  if (kind == WorkloadKind::Synthetic && (tx_reads > key_space || tx_writes > key_space)) {
    throw ConfigError("synthetic read and write sets must fit in the key space");
  }
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"small", "moderate", "labyrinth"};
  return names;
}

WorkloadSpec preset(const std::string& name) {
  WorkloadSpec s;
  s.kind = WorkloadKind::Synthetic;
  s.preset = name;
  if (name == "small") {
    s.tx_reads = 10;
    s.tx_writes = 2;
    s.key_space = 4096;
  } else if (name == "moderate") {
    s.tx_reads = 2000;
    s.tx_writes = 1200;
    s.key_space = 8192;
    s.ops = 100;
  } else if (name == "labyrinth") {
    s.tx_reads = 4096;
    s.tx_writes = 16;
    s.key_space = 8192;
    s.ops = 50;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return s;
}

WorkloadSpec parse_workload(const std::string& name) {
  WorkloadSpec s;
  if (name == "hashmap") {
    s.kind = WorkloadKind::Hashmap;
  } else if (name == "ctree" || name == "critbit") {
    s.kind = WorkloadKind::CritBitTree;
  } else if (name == "synthetic") {
    s.kind = WorkloadKind::Synthetic;
  } else {
    return preset(name);
  }
  return s;
}

WorkloadSpec apply_workload(WorkloadSpec s, std::map<std::string, std::string>& kv) {
  auto take = [&](const char* key, auto&& apply) {
    if (auto it = kv.find(key); it != kv.end()) {
      try {
        apply(it->second);
      } catch (const std::logic_error&) {
        throw ConfigError(std::string("bad value for ") + key + ": '" + it->second + "'");
      }
      kv.erase(it);
    }
  };
  take("workload", [&](const std::string& v) {
    const WorkloadSpec fresh = parse_workload(v);
    s.kind = fresh.kind;
    s.preset = fresh.preset;
    if (!fresh.preset.empty()) {
      s.tx_reads = fresh.tx_reads;
      s.tx_writes = fresh.tx_writes;
      s.key_space = fresh.key_space;
      s.ops = fresh.ops;
    }
  });
  take("ops", [&](const std::string& v) { s.ops = std::stoull(v, nullptr, 0); });
  take("key_space", [&](const std::string& v) { s.key_space = std::stoull(v, nullptr, 0); });
  take("read_fraction", [&](const std::string& v) { s.read_fraction = std::stod(v); });
  take("tx_reads", [&](const std::string& v) { s.tx_reads = std::stoull(v, nullptr, 0); });
  take("tx_writes", [&](const std::string& v) { s.tx_writes = std::stoull(v, nullptr, 0); });
  return s;
}

std::uint64_t heap_bytes(const WorkloadSpec& spec, std::size_t line_size) {
  switch (spec.kind) {
    case WorkloadKind::Hashmap: return PersistentHashmap::footprint(PersistentHashmap::buckets_for(spec.key_space));
    case WorkloadKind::CritBitTree: return CritBitTree::footprint(2 * spec.key_space);
    case WorkloadKind::Synthetic: return spec.key_space * line_size;
  }
  return 0;
}

namespace {

tx::TxStats delta(const tx::TxStats& after, const tx::TxStats& before) {
  tx::TxStats d = after;
  d.commits -= before.commits;
  for (std::size_t i = 0; i < d.aborts.size(); ++i) d.aborts[i] -= before.aborts[i];
  d.fallbacks -= before.fallbacks;
  d.sfences -= before.sfences;
  d.clwbs -= before.clwbs;
  d.nt_stores -= before.nt_stores;
  d.log_bytes -= before.log_bytes;
  d.lock_contended -= before.lock_contended;
  return d;
}

std::vector<std::uint64_t> distinct(std::mt19937_64& rng, std::uint64_t n, std::uint64_t space) {
  std::vector<std::uint64_t> out;
  out.reserve(n);
  std::unordered_set<std::uint64_t> seen;
  while (out.size() < n) {
    const std::uint64_t s = rng() % space;
    if (seen.insert(s).second) out.push_back(s);
  }
  return out;
}

}  // namespace

RunReport run_workload(const WorkloadSpec& spec, tx::MechanismConfig cfg, RunOptions opts) {
  spec.validate();
  cfg.threads = spec.threads;
  const std::uint64_t need = heap_bytes(spec, cfg.line_size);
  cfg.heap_size = (need + cfg.line_size - 1) / cfg.line_size * cfg.line_size;
  tx::Runtime rt(cfg, pmem::ByteImage(cfg.line_size), false);

  std::optional<PersistentHashmap> map;
  std::optional<CritBitTree> tree;
  if (spec.kind == WorkloadKind::Hashmap) {
    map.emplace(0, PersistentHashmap::buckets_for(spec.key_space));
    rt.run(0, [&](TxContext& ctx) { map->format(ctx); });
  } else if (spec.kind == WorkloadKind::CritBitTree) {
    tree.emplace(0, 2 * spec.key_space);
    rt.run(0, [&](TxContext& ctx) { tree->format(ctx); });
  }
  const tx::TxStats before = rt.stats();

  RunReport report;
  report.spec = spec;
  report.config = cfg;
  report.per_thread.resize(spec.threads);

  auto worker = [&](ThreadId t) {
    std::seed_seq seq{spec.seed, static_cast<std::uint64_t>(t)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    ThreadReport& mine = report.per_thread[t];
    for (std::uint64_t i = 0; i < spec.ops; ++i) {
      const bool lookup = coin(rng) < spec.read_fraction;
      bool hit = false;
      tx::RunResult r;
      switch (spec.kind) {
        case WorkloadKind::Hashmap:
        case WorkloadKind::CritBitTree: {
          const std::uint64_t key = 1 + rng() % spec.key_space;
          const std::uint64_t value = rng();
          r = rt.run(t, [&](TxContext& ctx) {
            if (lookup) {
              hit = map ? map->lookup(ctx, key).has_value() : tree->lookup(ctx, key).has_value();
            } else if (map) {
              map->insert(ctx, key, value);
            } else {
              tree->insert(ctx, key, value);
            }
          });
          break;
        }
        case WorkloadKind::Synthetic: {
          const auto reads = distinct(rng, spec.tx_reads, spec.key_space);
          const auto writes = lookup ? std::vector<std::uint64_t>{} : distinct(rng, spec.tx_writes, spec.key_space);
          const std::size_t ls = cfg.line_size;
          r = rt.run(t, [&](TxContext& ctx) {
            std::uint64_t sum = 0;
            for (auto s : reads) sum += ctx.read(s * ls);
            for (std::size_t j = 0; j < writes.size(); ++j) ctx.write(writes[j] * ls, sum + j + 1);
          });
          break;
        }
      }
      ++mine.commits;
      if (r.fast_path) ++mine.fast_path;
      if (hit) ++mine.hits;
    }
  };

  const auto start = std::chrono::steady_clock::now();
  if (opts.deterministic) {
    check::Scheduler::Options so;
    so.seed = spec.seed;
    check::Scheduler sched(so);
    rt.set_interleaver(&sched);
    sched.run(spec.threads, worker);
    rt.set_interleaver(nullptr);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    for (ThreadId t = 0; t < spec.threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          worker(t);
        } catch (...) {
          std::lock_guard lk(error_mu);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  report.stats = delta(rt.stats(), before);
  if (tx::uses_htm(cfg.mechanism) && report.stats.commits > 0) {
    report.success_rate = static_cast<double>(report.stats.commits - report.stats.fallbacks) /
                          static_cast<double>(report.stats.commits);
  }
  report.stats.success_rate = report.success_rate;

  if (map) {
    rt.run(0, [&](TxContext& ctx) { report.invariants_ok = map->check_invariants(ctx); });
  } else if (tree) {
    rt.run(0, [&](TxContext& ctx) { report.invariants_ok = tree->check_invariants(ctx).has_value(); });
  }
  return report;
}

std::string csv_header() {
  return "mechanism,domain,threads,commits,aborts,fallbacks,sfences,clwbs,nt_stores,success_rate,wall_ms";
}

std::string csv_row(const RunReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%s,%zu,%llu,%llu,%llu,%llu,%llu,%llu,%.6f,%.3f", tx::to_string(r.config.mechanism),
                pmtx::to_string(r.config.domain), r.config.threads, static_cast<unsigned long long>(r.stats.commits),
                static_cast<unsigned long long>(r.stats.total_aborts()),
                static_cast<unsigned long long>(r.stats.fallbacks), static_cast<unsigned long long>(r.stats.sfences),
                static_cast<unsigned long long>(r.stats.clwbs), static_cast<unsigned long long>(r.stats.nt_stores),
                r.success_rate, r.wall_ms);
  return buf;
}

std::string to_json(const RunReport& r, bool include_wall_time) {
  nlohmann::ordered_json j;
  const auto& c = r.config;
  j["config"] = {{"mechanism", tx::to_string(c.mechanism)},
                 {"domain", pmtx::to_string(c.domain)},
                 {"threads", c.threads},
                 {"seed", c.seed},
                 {"log_capacity", c.log_capacity},
                 {"capacity_lines", c.htm.capacity_lines},
                 {"max_retries", c.htm.max_retries}};
  j["workload"] = {{"kind", to_string(r.spec.kind)},
                   {"preset", r.spec.preset},
                   {"ops", r.spec.ops},
                   {"key_space", r.spec.key_space},
                   {"read_fraction", r.spec.read_fraction},
                   {"tx_reads", r.spec.tx_reads},
                   {"tx_writes", r.spec.tx_writes}};
  nlohmann::ordered_json aborts;
  for (std::size_t i = 0; i < kAbortCodeCount; ++i) aborts[to_string(static_cast<AbortCode>(i))] = r.stats.aborts[i];
  j["stats"] = {{"commits", r.stats.commits},     {"aborts", r.stats.total_aborts()},
                {"aborts_by_code", aborts},       {"fallbacks", r.stats.fallbacks},
                {"sfences", r.stats.sfences},     {"clwbs", r.stats.clwbs},
                {"nt_stores", r.stats.nt_stores}, {"log_bytes", r.stats.log_bytes},
                {"lock_contended", r.stats.lock_contended}};
  j["success_rate"] = r.success_rate;
  j["invariants_ok"] = r.invariants_ok;
  auto& threads = j["per_thread"] = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < r.per_thread.size(); ++t) {
    threads.push_back({{"thread", t},
                       {"commits", r.per_thread[t].commits},
                       {"fast_path", r.per_thread[t].fast_path},
                       {"hits", r.per_thread[t].hits}});
  }
  if (include_wall_time) j["wall_ms"] = r.wall_ms;
  return j.dump();
}

}  // namespace pmtx::bench
