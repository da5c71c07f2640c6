#include "smr/verify/stress.hpp"

#include <array>
#include <atomic>
#include <barrier>
#include <cstdio>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include "smr/ds/hash_map.hpp"
#include "smr/ds/sorted_list.hpp"
#include "smr/ds/treiber_stack.hpp"
#include "smr/refc_ledger.hpp"
#include "smr/rng.hpp"
#include "smr/verify/canary_allocator.hpp"
#include "smr/verify/contracts.hpp"
#include "smr/verify/immediate_free.hpp"
#include "smr/verify/test_hook.hpp"

namespace smr::verify {

namespace {

struct OpRecord {
  char kind = '-';
  std::uint64_t key = 0;
  long long result = -1;
};

// Last few operations of one thread, printed when that thread fails.
struct OpLog {
  std::array<OpRecord, 16> ring{};
  std::uint64_t n = 0;

  void add(char kind, std::uint64_t key, long long result) { ring[n++ % ring.size()] = {kind, key, result}; }

  std::string dump(int tid) const {
    std::string out = "thread " + std::to_string(tid) + " recent ops:";
    const std::uint64_t start = n > ring.size() ? n - ring.size() : 0;
    for (std::uint64_t i = start; i < n; ++i) {
      const OpRecord& r = ring[i % ring.size()];
      out += ' ';
      out += r.kind;
      out += '(' + std::to_string(r.key) + ")=" + std::to_string(r.result);
    }
    return out;
  }
};

long long opt_value(const std::optional<std::uint64_t>& v) {
  return v ? static_cast<long long>(*v) : -1;
}

template <class Smr>
void canary_run(const CanaryStressOptions& o, CanaryAllocator& alloc, RefcLedger& ledger,
                CanaryStressReport& rep) {
  Config cfg;
  cfg.max_threads = o.threads;
  cfg.max_idx = ds::ds_indices(o.ds);
  cfg.epoch_freq = o.epoch_freq;
  cfg.retire_freq = o.retire_freq;
  cfg.max_tries = o.max_tries;

  const bool indexed = std::string_view(Smr::kName).starts_with("crystalline");
  const std::uint64_t range =
      o.key_range != 0 ? o.key_range : (o.ds == ds::DsKind::kList ? 128 : 1024);

  Smr smr(cfg, &alloc, &ledger);
  ds::AccessChecker checker(o.threads, cfg.max_idx, !indexed);
  {
    ds::TreiberStack<Smr> stack(smr, &checker);
    ds::SortedList<Smr> list(smr, &checker);
    ds::HashMap<Smr> map(smr, range / 4, &checker);

    std::atomic<std::uint64_t> done{0};
    // Released together so the threads overlap from the first operation.
    std::atomic<int> ready{0};
    std::mutex mu;
    std::vector<std::thread> threads;
    const std::uint64_t per_thread = o.ops / o.threads;
    for (int t = 0; t < o.threads; ++t) {
      threads.emplace_back([&, t] {
        ThreadHandle<Smr> h(smr);
        const int tid = h.tid();
        auto rng = thread_rng(o.seed, static_cast<std::uint64_t>(t));
        OpLog log;
        std::uint64_t i = 0;
        ready.fetch_add(1);
        while (ready.load() < o.threads) std::this_thread::yield();
        try {
          for (; i < per_thread; ++i) {
            const std::uint64_t key = rng() % range;
            const unsigned pick = rng() % 100;
            if (o.ds == ds::DsKind::kStack) {
              if (pick < 50) {
                stack.push(tid, key);
                log.add('u', key, 0);
              } else {
                log.add('o', 0, opt_value(stack.pop(tid)));
              }
              continue;
            }
            auto run = [&](auto& s) {
              if (pick < 30) log.add('i', key, s.insert(tid, key, i));
              else if (pick < 60) log.add('r', key, opt_value(s.remove(tid, key)));
              else if (pick < 85) log.add('g', key, opt_value(s.get(tid, key)));
              else log.add('p', key, s.put(tid, key, i));
            };
            if (o.ds == ds::DsKind::kList) run(list);
            else run(map);
          }
        } catch (const ds::AccessViolation& e) {
          std::lock_guard lock(mu);
          rep.messages.push_back(e.what());
          rep.messages.push_back(log.dump(tid));
        } catch (const std::exception& e) {
          std::lock_guard lock(mu);
          ++rep.other_errors;
          rep.messages.push_back(std::string("thread error: ") + e.what());
          rep.messages.push_back(log.dump(tid));
        }
        done.fetch_add(i);
      });
    }
    for (auto& th : threads) th.join();
    rep.ops_done = done.load();
  }
  rep.stats = smr.merged_stats();
  rep.poison_reads = checker.poison_reads();
  rep.unprotected_reads = checker.unprotected_reads();
}

}  // namespace

bool CanaryStressReport::pass() const {
  return poison_reads == 0 && unprotected_reads == 0 && double_frees == 0 &&
         refc_violations == 0 && open_batches == 0 && other_errors == 0 &&
         allocations == frees;
}

std::string CanaryStressReport::summary() const {
  char buf[384];
  std::snprintf(buf, sizeof(buf),
                "ops=%llu poison_reads=%llu unprotected_reads=%llu double_frees=%llu "
                "refc_violations=%llu open_batches=%llu allocations=%llu frees=%llu errors=%llu",
                static_cast<unsigned long long>(ops_done), static_cast<unsigned long long>(poison_reads),
                static_cast<unsigned long long>(unprotected_reads),
                static_cast<unsigned long long>(double_frees),
                static_cast<unsigned long long>(refc_violations),
                static_cast<unsigned long long>(open_batches),
                static_cast<unsigned long long>(allocations), static_cast<unsigned long long>(frees),
                static_cast<unsigned long long>(other_errors));
  return buf;
}

CanaryStressReport run_canary_stress(const CanaryStressOptions& o) {
  if (o.threads < 1) throw ConfigError("threads must be >= 1");
  CanaryStressReport rep;
  ThrowingContracts contracts;
  CanaryAllocator alloc;
  RefcLedger ledger;
  if (o.broken) {
    canary_run<ImmediateFree<JitterHook>>(o, alloc, ledger, rep);
  } else {
    dispatch_scheme<JitterHook>(o.scheme, [&](auto tag) {
      using Smr = typename decltype(tag)::type;
      canary_run<Smr>(o, alloc, ledger, rep);
    });
  }
  rep.double_frees = alloc.double_frees();
  rep.refc_violations = ledger.violations();
  rep.open_batches = ledger.open_batches();
  rep.allocations = alloc.allocations();
  rep.frees = alloc.frees();
  for (auto& m : ledger.messages()) rep.messages.push_back(m);
  return rep;
}

namespace {

template <class Smr>
StallReport stall_run(const StallOptions& o) {
  Config cfg;
  cfg.max_threads = o.max_threads;
  cfg.max_idx = o.max_idx;
  cfg.retire_freq = o.retire_freq;
  cfg.epoch_freq = o.epoch_freq;
  Smr smr(cfg);
  StallReport rep;
  {
    ds::TreiberStack<Smr> stack(smr);
    std::atomic<std::int64_t> depth{0};
    {
      ThreadHandle<Smr> h(smr);
      for (std::uint64_t i = 0; i < o.max_depth / 2; ++i) stack.push(h.tid(), i);
      depth = static_cast<std::int64_t>(o.max_depth / 2);
    }

    std::atomic<bool> stalled{false};
    std::atomic<bool> release{false};
    std::thread staller([&] {
      ThreadHandle<Smr> h(smr);
      smr.enter(h.tid());
      smr.protect(h.tid(), stack.top_link(), 0, nullptr);
      stalled = true;
      stalled.notify_all();
      release.wait(false);
      smr.leave(h.tid());
    });
    stalled.wait(false);

    const int workers = o.max_threads - 1;
    const std::uint64_t per_phase = o.ops / workers;
    std::barrier sync(workers, [&]() noexcept { rep.peak_at_n = smr.peak_unreclaimed(); });
    std::atomic<std::uint64_t> done{0};
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        ThreadHandle<Smr> h(smr);
        auto rng = thread_rng(o.seed, static_cast<std::uint64_t>(w));
        auto phase = [&] {
          for (std::uint64_t i = 0; i < per_phase; ++i) {
            const std::int64_t d = depth.load(std::memory_order_relaxed);
            const bool push = d <= 0 || (d < static_cast<std::int64_t>(o.max_depth) && (rng() & 1));
            if (push) {
              stack.push(h.tid(), i);
              depth.fetch_add(1, std::memory_order_relaxed);
            } else if (stack.pop(h.tid())) {
              depth.fetch_sub(1, std::memory_order_relaxed);
            }
          }
          done.fetch_add(per_phase);
        };
        phase();
        sync.arrive_and_wait();
        phase();
      });
    }
    for (auto& t : threads) t.join();
    rep.peak_at_2n = smr.peak_unreclaimed();
    rep.ops_done = done.load();
    release = true;
    release.notify_all();
    staller.join();
  }
  rep.stats = smr.merged_stats();
  return rep;
}

}  // namespace

StallReport run_stall(const StallOptions& o) {
  if (o.max_threads < 2) throw ConfigError("stall runs need max_threads >= 2");
  return dispatch_scheme<BasicJitterHook<8>>(o.scheme, [&](auto tag) {
    using Smr = typename decltype(tag)::type;
    return stall_run<Smr>(o);
  });
}

std::int64_t memory_bound(SchemeKind scheme, const Config& cfg) {
  std::int64_t idx;
  if (scheme == SchemeKind::kCrystallineL) idx = cfg.max_idx;
  else if (scheme == SchemeKind::kCrystallineW) idx = cfg.max_idx + 2;
  else return -1;
  const std::int64_t k = static_cast<std::int64_t>(cfg.max_threads) * idx + 1;
  return static_cast<std::int64_t>(cfg.retire_freq) * k * k;
}

}  // namespace smr::verify
