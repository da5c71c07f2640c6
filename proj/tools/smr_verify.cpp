// smr-verify: canary stress, stalled-thread bounds, schedule exploration
// and linearizability of recorded histories.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smr/verify/linearizability.hpp"
#include "smr/verify/scenarios.hpp"
#include "smr/verify/stress.hpp"

namespace {

using namespace smr;

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Args {
  std::string scheme = "all";
  std::string ds = "all";
  std::string scenario = "all";
  std::uint64_t seed = 1;
  int seeds = 1;
  int threads = 4;
  std::uint64_t ops = 100000;
  int runs = 200;
};

std::vector<SchemeKind> schemes_of(const std::string& s) {
  if (s == "all") return available_schemes();
  const auto k = parse_scheme(s);
  if (!k) throw ConfigError("unknown scheme '" + s + "'");
  return {*k};
}

std::vector<ds::DsKind> ds_of(const std::string& s) {
  if (s == "all") return {ds::DsKind::kStack, ds::DsKind::kList, ds::DsKind::kHashMap};
  const auto k = ds::parse_ds(s);
  if (!k) throw ConfigError("unknown data structure '" + s + "'");
  return {*k};
}

bool canary(const Args& a) {
  bool ok = true;
  for (auto sk : schemes_of(a.scheme)) {
    for (auto dk : ds_of(a.ds)) {
      for (int i = 0; i < a.seeds; ++i) {
        verify::CanaryStressOptions o;
        o.scheme = sk;
        o.ds = dk;
        o.threads = a.threads;
        o.ops = a.ops;
        o.seed = a.seed + static_cast<std::uint64_t>(i);
        const auto r = verify::run_canary_stress(o);
        std::printf("canary %s %s threads=%d seed=%llu %s %s\n", std::string(scheme_name(sk)).c_str(),
                    std::string(ds::ds_name(dk)).c_str(), a.threads, static_cast<unsigned long long>(o.seed),
                    r.pass() ? "PASS" : "FAIL", r.summary().c_str());
        if (!r.pass()) {
          ok = false;
          for (const auto& m : r.messages) std::fprintf(stderr, "%s\n", m.c_str());
        }
      }
    }
  }
  return ok;
}

bool stall(const Args& a) {
  bool ok = true;
  for (auto sk : schemes_of(a.scheme)) {
    // Robust schemes must plateau; the others are expected to keep growing.
    const bool robust = sk == SchemeKind::kHyaline1S || sk == SchemeKind::kCrystallineL ||
                        sk == SchemeKind::kCrystallineW;
    for (int i = 0; i < a.seeds; ++i) {
      verify::StallOptions o;
      o.scheme = sk;
      o.ops = a.ops;
      o.seed = a.seed + static_cast<std::uint64_t>(i);
      const auto r = verify::run_stall(o);
      Config cfg;
      cfg.max_threads = o.max_threads;
      cfg.max_idx = o.max_idx;
      cfg.retire_freq = o.retire_freq;
      const std::int64_t bound = verify::memory_bound(sk, cfg);
      bool pass = robust ? r.growth() <= 1.1 : r.growth() >= 1.5;
      if (bound >= 0 && r.peak_at_2n > bound) pass = false;
      std::printf("stall %s seed=%llu peak_n=%lld peak_2n=%lld growth=%.3f bound=%lld %s\n",
                  std::string(scheme_name(sk)).c_str(), static_cast<unsigned long long>(o.seed),
                  static_cast<long long>(r.peak_at_n), static_cast<long long>(r.peak_at_2n), r.growth(),
                  static_cast<long long>(bound), pass ? "PASS" : "FAIL");
      if (!pass) {
        ok = false;
        std::fprintf(stderr, "stall %s: expected %s\n", std::string(scheme_name(sk)).c_str(),
                     robust ? "plateau (growth <= 1.1) within the bound" : "growth >= 1.5");
      }
    }
  }
  return ok;
}

bool schedules(const Args& a) {
  std::vector<verify::Scenario> list;
  if (a.scenario == "all") {
    list = verify::all_scenarios();
  } else {
    const auto s = verify::parse_scenario(a.scenario);
    if (!s) throw ConfigError("unknown scenario '" + a.scenario + "'");
    list = {*s};
  }
  bool ok = true;
  for (int mt : {2, 3}) {
    for (auto s : list) {
      verify::ExploreOptions o;
      o.scenario = s;
      o.max_threads = mt;
      o.runs = a.runs;
      o.seed = a.seed;
      const auto r = verify::explore(o);
      std::printf("schedules %s max_threads=%d %s %s\n", std::string(verify::scenario_name(s)).c_str(), mt,
                  r.pass() ? "PASS" : "FAIL", r.summary().c_str());
      if (!r.pass()) {
        ok = false;
        std::fprintf(stderr, "failing seed %llu: %s\n%s\n", static_cast<unsigned long long>(r.failing_seed),
                     r.failure.c_str(), r.trace.c_str());
      }
    }
  }
  return ok;
}

bool linearizability(const Args& a) {
  bool ok = true;
  for (auto dk : ds_of(a.ds)) {
    int failures = 0;
    for (int i = 0; i < a.seeds; ++i) {
      verify::HistoryOptions o;
      o.ds = dk;
      o.threads = a.threads;
      o.seed = a.seed + static_cast<std::uint64_t>(i);
      const auto h = verify::record_history(o);
      const auto r = dk == ds::DsKind::kStack ? verify::check_stack_history(h) : verify::check_map_history(h);
      if (!r.ok) {
        ++failures;
        std::fprintf(stderr, "%s seed %llu: %s\n", std::string(ds::ds_name(dk)).c_str(),
                     static_cast<unsigned long long>(o.seed), r.failure.c_str());
      }
    }
    std::printf("linearizability %s histories=%d failures=%d %s\n", std::string(ds::ds_name(dk)).c_str(),
                a.seeds, failures, failures == 0 ? "PASS" : "FAIL");
    ok = ok && failures == 0;
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  Args a;
  std::string suite;
  CLI::App app{"Reclamation safety and bound checks"};
  app.add_option("--suite", suite, "canary, stall, schedules or linearizability")
      ->required()
      ->check(CLI::IsMember({"canary", "stall", "schedules", "linearizability"}));
  app.add_option("--scheme", a.scheme, "Scheme name or all")->capture_default_str();
  app.add_option("--ds", a.ds, "Data structure or all (canary, linearizability)")->capture_default_str();
  app.add_option("--scenario", a.scenario, "Scenario name or all (schedules)")->capture_default_str();
  app.add_option("--seed", a.seed, "First seed")->capture_default_str();
  app.add_option("--seeds", a.seeds, "Number of consecutive seeds")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--threads", a.threads, "Threads (canary, linearizability)")->capture_default_str()
      ->check(CLI::Range(1, 1024));
  app.add_option("--ops", a.ops, "Operations per run (canary total; stall first phase)")->capture_default_str();
  app.add_option("--runs", a.runs, "Schedules per scenario")->capture_default_str()->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    bool ok = false;
    if (suite == "canary") ok = canary(a);
    else if (suite == "stall") ok = stall(a);
    else if (suite == "schedules") ok = schedules(a);
    else ok = linearizability(a);
    return ok ? 0 : kExitFail;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "smr-verify: %s\n", e.what());
    return kExitUsage;
  }
}
