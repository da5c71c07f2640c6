#include "smr/verify/scenarios.hpp"

#include <cstdio>
#include <functional>
#include <stdexcept>

#include "smr/crystalline_l.hpp"
#include "smr/crystalline_w.hpp"
#include "smr/ds/access_checker.hpp"
#include "smr/refc_ledger.hpp"
#include "smr/verify/canary_allocator.hpp"
#include "smr/verify/contracts.hpp"
#include "smr/verify/test_hook.hpp"

namespace smr::verify {

namespace {

struct Cell : Node {
  Link link{0};
  std::uint64_t canary = ds::kLiveCanary;
};

Cell* as_cell(Word w) { return reinterpret_cast<Cell*>(link_target(w)); }

void expect_live(const Cell* c, const char* what) {
  if (c != nullptr && c->canary != ds::kLiveCanary)
    throw std::runtime_error(std::string("read a freed node through ") + what);
}

std::string hex(Word w) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%llx", static_cast<unsigned long long>(w));
  return buf;
}

constexpr std::string_view kNames[] = {"slow-path-helper-retirer", "detach-vs-retirers",
                                       "stale-advert", "batch-cap-l", "batch-cap-w"};

// Walks every active reservation list while all threads are paused. Lists
// must only contain live retired nodes and end at null or at a REFS
// terminal; a tainted link means a traversal is in flight past this point.
template <class Smr>
std::string check_lists(Smr& smr, int slots_per_thread, std::uint64_t max_len) {
  const Config& cfg = smr.config();
  for (int i = 0; i < cfg.max_threads; ++i) {
    for (int j = 0; j < slots_per_thread; ++j) {
      auto& r = smr.slot(i, j);
      Word w;
      if constexpr (requires { r.list.value; }) w = r.list.value.load();
      else w = r.list.load();
      if (w == kInvalid) continue;
      const std::string where = "slot(" + std::to_string(i) + "," + std::to_string(j) + ")";
      std::uint64_t len = 0;
      while (w != 0 && w != kInvalid) {
        if (++len > max_len) return where + " list longer than " + std::to_string(max_len);
        if (is_rnode(w)) {
          Node* refs = to_node(rnode(w));
          if (CanaryAllocator::is_freed(refs)) return where + " terminal names freed batch " + hex(rnode(w));
          // REFS of a batch that is still being filled has no link yet.
          const Word bl = refs->blink.load();
          if (bl != 0 && (bl & 1) == 0) return where + " terminal is not a REFS node";
          break;
        }
        Node* n = to_node(w);
        if (CanaryAllocator::is_freed(n)) return where + " holds freed node " + hex(w);
        if (n->blink.load() == 0) return where + " holds a node that is not retired";
        w = n->birth_next.load();
      }
    }
  }
  return {};
}

template <class Smr>
Config scenario_config(int mt) {
  Config cfg;
  cfg.max_threads = mt;
  cfg.max_idx = 2;
  cfg.epoch_freq = 1;
  cfg.retire_freq = 1;
  // One fast attempt, so a freshly opened index always takes the slow path.
  cfg.max_tries = 2;
  return cfg;
}

struct RunOutcome {
  ScheduleResult sched;
  LoopStats stats;
  std::string post;  // failure found after the run, if any
};

template <class Smr>
RunOutcome run_once(Scenario sc, int mt, const ScheduleOptions& sopt) {
  using A = typename Smr::A;
  constexpr bool kWaitFree = requires(Smr& s) { s.slow_counter(); };
  CanaryAllocator alloc;
  RefcLedger ledger;
  RunOutcome out;
  {
    const Config cfg = scenario_config<Smr>(mt);
    Smr smr(cfg, &alloc, &ledger);
    const int slots = kWaitFree ? cfg.max_idx + 2 : cfg.max_idx;
    const std::uint64_t cap = static_cast<std::uint64_t>(mt) * slots + 1;

    int setup_tid = smr.register_thread();
    Link root{0};
    {
      Cell* c = make_node<Cell>(smr, setup_tid);
      Cell* p = make_node<Cell>(smr, setup_tid);
      p->link.store(to_word(c));
      root.store(to_word(p));
    }
    smr.unregister_thread(setup_tid);

    // Replaces the root pair and retires the old one.
    auto replace_root = [&](int t) {
      Cell* c = make_node<Cell>(smr, t);
      Cell* p = make_node<Cell>(smr, t);
      A::store(p->link, to_word(c));
      Cell* old = as_cell(A::exchange(root, to_word(p)));
      Cell* old_child = as_cell(A::load(old->link));
      smr.retire(t, old_child);
      smr.retire(t, old);
    };
    // Replaces only the child of the current root and retires it. Only one
    // thread may do this, and no one may replace the root concurrently.
    auto replace_child = [&](int t) {
      Cell* p = as_cell(A::load(root));
      Cell* c = make_node<Cell>(smr, t);
      Cell* old = as_cell(A::exchange(p->link, to_word(c)));
      smr.retire(t, old);
    };
    // Protects root and child; the child only counts once the pair is seen
    // still linked afterwards, as any lock-free structure must check.
    auto read_pair = [&](int t) {
      while (true) {
        Cell* p = as_cell(smr.protect(t, root, 0, nullptr));
        expect_live(p, "root");
        const Word cw = smr.protect(t, p->link, 1, p);
        if (A::load(root) != to_word(p) || A::load(p->link) != cw) continue;
        expect_live(as_cell(cw), "child");
        expect_live(p, "root after child");
        return;
      }
    };
    auto bump = [&](int t, int n) {
      for (int k = 0; k < n; ++k) smr.dispose(make_node<Cell>(smr, t));
    };
    auto dummies = [&](int t, std::uint64_t n) {
      for (std::uint64_t k = 0; k < n; ++k) smr.retire(t, make_node<Cell>(smr, t));
    };

    std::vector<std::function<void()>> bodies;
    switch (sc) {
      case Scenario::kSlowPathHelperRetirer:
        bodies.push_back([&] {
          ThreadHandle h(smr);
          read_pair(h.tid());
          smr.leave(h.tid());
        });
        if (mt >= 3) {
          bodies.push_back([&] {
            ThreadHandle h(smr);
            bump(h.tid(), 3);
          });
        }
        bodies.push_back([&] {
          ThreadHandle h(smr);
          replace_child(h.tid());
          replace_root(h.tid());
          dummies(h.tid(), cap);
          smr.leave(h.tid());
        });
        break;
      case Scenario::kDetachVsRetirers:
        bodies.push_back([&] {
          ThreadHandle h(smr);
          for (int k = 0; k < 2; ++k) {
            expect_live(as_cell(smr.protect(h.tid(), root, 0, nullptr)), "root");
            smr.leave(h.tid());
          }
        });
        for (int r = 1; r < mt; ++r) {
          bodies.push_back([&] {
            ThreadHandle h(smr);
            for (int k = 0; k < 3; ++k) replace_root(h.tid());
            smr.leave(h.tid());
          });
        }
        break;
      case Scenario::kStaleAdvert:
        bodies.push_back([&] {
          ThreadHandle h(smr);
          for (int k = 0; k < 3; ++k) {
            read_pair(h.tid());
            smr.leave(h.tid());
          }
        });
        for (int r = 1; r < mt; ++r) {
          const bool retirer = r == mt - 1;
          bodies.push_back([&, retirer] {
            ThreadHandle h(smr);
            bump(h.tid(), 2);
            if (retirer) {
              replace_root(h.tid());
              dummies(h.tid(), 2);
            } else {
              bump(h.tid(), 2);
            }
            smr.leave(h.tid());
          });
        }
        break;
      case Scenario::kBatchCapL:
      case Scenario::kBatchCapW:
        for (int r = 0; r < mt; ++r) {
          bodies.push_back([&] {
            ThreadHandle h(smr);
            for (int k = 0; k < 2; ++k) {
              read_pair(h.tid());
              smr.leave(h.tid());
              replace_root(h.tid());
            }
            dummies(h.tid(), cap);
            smr.leave(h.tid());
          });
        }
        break;
    }

    const std::uint64_t max_len = 64 * cap;
    out.sched = run_schedule(std::move(bodies), sopt, [&] { return check_lists(smr, slots, max_len); });
    out.stats = smr.merged_stats();

    if constexpr (kWaitFree) {
      if (out.sched.ok && smr.slow_counter().load() != 0) out.post = "slow_counter did not return to zero";
    }
    // Dispose of the structure that is still reachable.
    Cell* p = as_cell(root.load());
    smr.dispose(as_cell(p->link.load()));
    smr.dispose(p);
  }
  if (!out.sched.ok) return out;
  if (out.post.empty() && ledger.violations() != 0) out.post = "batch counter violation: " + ledger.messages().front();
  if (out.post.empty() && ledger.open_batches() != 0)
    out.post = std::to_string(ledger.open_batches()) + " batches never finished";
  if (out.post.empty() && alloc.double_frees() != 0) out.post = "double free";
  if (out.post.empty() && alloc.live() != 0) out.post = std::to_string(alloc.live()) + " nodes leaked";
  return out;
}

}  // namespace

std::string_view scenario_name(Scenario s) { return kNames[static_cast<int>(s)]; }

std::optional<Scenario> parse_scenario(std::string_view s) {
  for (Scenario sc : all_scenarios()) {
    if (scenario_name(sc) == s) return sc;
  }
  return std::nullopt;
}

std::vector<Scenario> all_scenarios() {
  std::vector<Scenario> out{Scenario::kSlowPathHelperRetirer, Scenario::kDetachVsRetirers,
                            Scenario::kStaleAdvert, Scenario::kBatchCapL};
#if SMR_HAS_DCAS
  out.push_back(Scenario::kBatchCapW);
#endif
  return out;
}

std::string check_loop_bounds(const LoopStats& s, int mt) {
  const auto bound = static_cast<std::uint64_t>(mt);
  std::string out;
  auto over = [&](const char* name, std::uint64_t v, std::uint64_t limit) {
    if (v > limit) {
      if (!out.empty()) out += "; ";
      out += std::string(name) + " reached " + std::to_string(v) + " > " + std::to_string(limit);
    }
  };
  over("slow_path loop", s.slow_max, bound);
  over("help_thread loop", s.help_max, bound);
  over("detach_nodes loop", s.detach_max, bound);
  over("terminal install loop", s.terminal_max, bound);
  over("era tag loop", s.era_set_max, 2);
  over("failed try_retire at full batch", s.try_retire_fail_at_cap, 0);
  over("earmark on odd tag", s.odd_tag_earmarks, 0);
  return out;
}

std::string ExploreReport::summary() const {
  std::string out = "runs=" + std::to_string(runs) + " failures=" + std::to_string(failures) +
                    " max_steps=" + std::to_string(max_steps) +
                    " slow_max=" + std::to_string(stats.slow_max) +
                    " help_max=" + std::to_string(stats.help_max) +
                    " detach_max=" + std::to_string(stats.detach_max) +
                    " terminal_max=" + std::to_string(stats.terminal_max) +
                    " era_set_max=" + std::to_string(stats.era_set_max) +
                    " slow_paths=" + std::to_string(stats.slow_paths) +
                    " helps=" + std::to_string(stats.helps) +
                    " help_changed=" + std::to_string(stats.help_changed) +
                    " terminals=" + std::to_string(stats.terminals) +
                    " pin_handoffs=" + std::to_string(stats.pin_handoffs) +
                    " fail_at_cap=" + std::to_string(stats.try_retire_fail_at_cap);
  if (!failure.empty()) out += "\nfirst failure (seed " + std::to_string(failing_seed) + "): " + failure;
  return out;
}

ExploreReport explore(const ExploreOptions& o) {
  if (o.max_threads < 2) throw ConfigError("exploration needs at least two threads");
  ThrowingContracts contracts;
  ExploreReport rep;
  for (std::uint64_t k = 0; k < o.runs; ++k) {
    ScheduleOptions sopt;
    sopt.seed = o.seed + k;
    sopt.strategy = k % 2 == 0 ? Strategy::kRandom : Strategy::kPct;
    sopt.step_limit = o.step_limit;
    RunOutcome r;
    if (o.scenario == Scenario::kBatchCapL) {
      r = run_once<CrystallineL<TestHook>>(o.scenario, o.max_threads, sopt);
    } else {
#if SMR_HAS_DCAS
      r = run_once<CrystallineW<TestHook>>(o.scenario, o.max_threads, sopt);
#else
      throw ConfigError("scenario needs Crystalline-W, which this target lacks");
#endif
    }
    ++rep.runs;
    rep.stats.merge(r.stats);
    rep.max_steps = std::max(rep.max_steps, r.sched.steps);
    std::string why = !r.sched.ok ? r.sched.failure : r.post;
    if (why.empty()) why = check_loop_bounds(r.stats, o.max_threads);
    if (!why.empty()) {
      if (rep.failures++ == 0) {
        rep.failing_seed = sopt.seed;
        rep.failure = why;
        rep.trace = r.sched.trace_string();
      }
    }
  }
  return rep;
}

}  // namespace smr::verify
