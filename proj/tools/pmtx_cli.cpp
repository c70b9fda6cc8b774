#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pmtx/bench/workload.hpp"
#include "pmtx/check/checker.hpp"

using namespace pmtx;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFatal = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

check::CrashPolicy parse_crash(const std::string& s) {
  if (s == "every") return check::CrashPolicy::every_event();
  std::vector<std::string> parts;
  std::stringstream in(s);
  for (std::string p; std::getline(in, p, ':');) parts.push_back(p);
  try {
    if (parts.size() == 3 && parts[0] == "sample") {
      return check::CrashPolicy::sampled(std::stoull(parts[1]), std::stoull(parts[2]));
    }
    if (parts.size() == 2 && parts[0] == "at") return check::CrashPolicy::at_event(std::stoull(parts[1]));
  } catch (const std::logic_error&) {
  }
  throw UsageError("crash policy must be every, sample:SEED:K or at:SEQ");
}

void print_verdict(const check::Verdict& v, bool json) {
  if (!json) {
    std::cout << check::format_verdict(v) << "\n";
    return;
  }
  nlohmann::ordered_json j;
  j["verdict"] = v.pass ? "pass" : "fail";
  j["property"] = check::to_string(v.property);
  j["crash_points"] = v.crash_points;
  j["states"] = v.states;
  if (v.counterexample) {
    const auto& cx = *v.counterexample;
    j["counterexample"] = {{"crash_seq", cx.crash_seq}, {"witness", cx.witness}, {"choice", cx.choice},
                           {"expected", cx.expected},   {"actual", cx.actual},   {"schedule", cx.schedule},
                           {"record", check::format_verdict(v)}};
  }
  std::cout << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persistent-memory transaction lab: workloads and crash checks"};
  std::string config_file, mechanism, domain, workload, format = "csv", check_what, script_file, crash, replay_line;
  std::size_t threads = 1;
  std::uint64_t ops = 0, tx_reads = 0, tx_writes = 0, key_space = 0, seed = 0, capacity_lines = 0, log_capacity = 0;
  unsigned max_retries = 0;
  double read_frac = 0;
  bool deterministic = false;

  app.add_option("--config", config_file, "key=value configuration file");
  app.add_option("--mechanism", mechanism, "seq, undo, redo, stm, ccstm, htm, cchtm-undo, cchtm-redo");
  app.add_option("--domain", domain, "transient or persistent");
  app.add_option("--workload", workload, "hashmap, ctree, synthetic, small, moderate, labyrinth");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 64));
  auto* ops_opt = app.add_option("--ops", ops, "transactions per thread");
  auto* read_opt = app.add_option("--read-frac", read_frac, "lookup / read-only fraction")->check(CLI::Range(0.0, 1.0));
  auto* reads_opt = app.add_option("--tx-reads", tx_reads, "synthetic reads per transaction");
  auto* writes_opt = app.add_option("--tx-writes", tx_writes, "synthetic writes per transaction");
  auto* keys_opt = app.add_option("--key-space", key_space, "keys or synthetic slots");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--check", check_what, "atomicity, order, serial or all")
      ->check(CLI::IsMember({"atomicity", "order", "serial", "all"}));
  app.add_option("--script", script_file, "checker script (default: dependent writer/reader pair)");
  app.add_option("--crash", crash, "crash policy override: every, sample:SEED:K, at:SEQ");
  app.add_option("--replay", replay_line, "re-check one failing verdict record against the script");
  auto* cap_opt = app.add_option("--capacity-lines", capacity_lines, "hardware transaction capacity in lines");
  auto* retry_opt = app.add_option("--max-retries", max_retries, "hardware retries before the fallback");
  auto* log_opt = app.add_option("--log-capacity", log_capacity, "per-thread log region bytes");
  app.add_flag("--deterministic", deterministic, "cooperative seeded scheduling for reproducible reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    tx::MechanismConfig cfg;
    bench::WorkloadSpec spec;
    bool workload_requested = !workload.empty();
    if (!config_file.empty()) {
      std::istringstream in(slurp(config_file));
      auto kv = tx::parse_key_values(in);
      workload_requested |= kv.count("workload") > 0;
      cfg = tx::apply_config(cfg, kv);
      spec = bench::apply_workload(spec, kv);
      if (!kv.empty()) throw ConfigError("unknown configuration key '" + kv.begin()->first + "'");
    }
    if (!mechanism.empty()) cfg.mechanism = tx::parse_mechanism(mechanism);
    if (!domain.empty()) cfg.domain = parse_domain(domain);
    if (*threads_opt) cfg.threads = threads;
    if (*seed_opt) cfg.seed = seed;
    if (*cap_opt) cfg.htm.capacity_lines = capacity_lines;
    if (*retry_opt) cfg.htm.max_retries = max_retries;
    if (*log_opt) cfg.log_capacity = log_capacity;
    if (!workload.empty()) {
      const auto fresh = bench::parse_workload(workload);
      spec.kind = fresh.kind;
      spec.preset = fresh.preset;
      if (!fresh.preset.empty()) spec = fresh;
    }
    if (*ops_opt) spec.ops = ops;
    if (*read_opt) spec.read_fraction = read_frac;
    if (*reads_opt) spec.tx_reads = tx_reads;
    if (*writes_opt) spec.tx_writes = tx_writes;
    if (*keys_opt) spec.key_space = key_space;
    spec.threads = cfg.threads;
    spec.seed = cfg.seed;
    cfg.validate();

    const bool json = format == "json";
    const bool checking = !check_what.empty() || !replay_line.empty();
    bool all_pass = true;

    if (checking) {
      check::WorkloadScript script =
          script_file.empty() ? check::DependencyScript::make() : check::parse_script(slurp(script_file));
      if (!crash.empty()) {
        const std::size_t max_states = script.crash.max_states;
        script.crash = parse_crash(crash);
        script.crash.max_states = max_states;
      }
      if (!replay_line.empty()) {
        const auto recorded = check::parse_verdict(replay_line);
        if (!recorded.counterexample) throw UsageError("--replay needs a failing verdict record");
        const auto v = check::replay(script, cfg, *recorded.counterexample);
        print_verdict(v, json);
        all_pass &= v.pass;
      } else {
        std::vector<check::Property> props;
        if (check_what == "atomicity" || check_what == "all") props.push_back(check::Property::Atomicity);
        if (check_what == "order" || check_what == "all") props.push_back(check::Property::Dependency);
        if (check_what == "serial" || check_what == "all") props.push_back(check::Property::Serializability);
        for (auto p : props) {
          check::Verdict v;
          switch (p) {
            case check::Property::Atomicity: v = check::check_atomicity(script, cfg); break;
            case check::Property::Dependency: v = check::check_dependency_order(script, cfg); break;
            case check::Property::Serializability: v = check::check_serializable(script, cfg); break;
          }
          print_verdict(v, json);
          all_pass &= v.pass;
        }
      }
    }

    if (!checking || workload_requested) {
      bench::RunOptions opts;
      opts.deterministic = deterministic;
      const auto report = bench::run_workload(spec, cfg, opts);
      if (json) {
        std::cout << bench::to_json(report) << "\n";
      } else {
        std::cout << bench::csv_header() << "\n" << bench::csv_row(report) << "\n";
      }
      all_pass &= report.invariants_ok;
    }
    return all_pass ? 0 : kExitCheckFailed;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return kExitFatal;
  }
}
