#include <benchmark/benchmark.h>

#include "smr/ds/hash_map.hpp"
#include "smr/ds/treiber_stack.hpp"
#include "smr/scheme.hpp"

namespace {

using namespace smr;

Config cfg() {
  Config c;
  c.max_threads = 4;
  return c;
}

template <class S>
void BM_ProtectLeave(benchmark::State& state) {
  S smr{cfg()};
  ThreadHandle<S> h(smr);
  Node* n = smr.alloc_node(h.tid());
  Link root{to_word(n)};
  for (auto _ : state) {
    smr.enter(h.tid());
    benchmark::DoNotOptimize(smr.protect(h.tid(), root, 0, nullptr));
    smr.leave(h.tid());
  }
  smr.dispose(n);
}

template <class S>
void BM_AllocRetire(benchmark::State& state) {
  S smr{cfg()};
  ThreadHandle<S> h(smr);
  for (auto _ : state) {
    smr.enter(h.tid());
    smr.retire(h.tid(), smr.alloc_node(h.tid()));
    smr.leave(h.tid());
  }
  state.counters["unreclaimed"] = static_cast<double>(smr.unreclaimed());
}

template <class S>
void BM_StackPushPop(benchmark::State& state) {
  S smr{cfg()};
  ds::TreiberStack<S> stack(smr);
  ThreadHandle<S> h(smr);
  for (std::uint64_t i = 0; i < 64; ++i) stack.push(h.tid(), i);
  for (auto _ : state) {
    stack.push(h.tid(), 1);
    benchmark::DoNotOptimize(stack.pop(h.tid()));
  }
}

template <class S>
void BM_HashMapGet(benchmark::State& state) {
  S smr{cfg()};
  ds::HashMap<S> map(smr, 1024);
  ThreadHandle<S> h(smr);
  for (std::uint64_t k = 0; k < 1024; ++k) map.insert(h.tid(), k, k);
  std::uint64_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(map.get(h.tid(), k++ & 1023));
}

#define SMR_SCHEME_BENCHMARKS(S)               \
  BENCHMARK_TEMPLATE(BM_ProtectLeave, S);      \
  BENCHMARK_TEMPLATE(BM_AllocRetire, S);       \
  BENCHMARK_TEMPLATE(BM_StackPushPop, S);      \
  BENCHMARK_TEMPLATE(BM_HashMapGet, S)

SMR_SCHEME_BENCHMARKS(NoReclaim<>);
SMR_SCHEME_BENCHMARKS(Ebr<>);
SMR_SCHEME_BENCHMARKS(Hyaline1<>);
SMR_SCHEME_BENCHMARKS(Hyaline1S<>);
SMR_SCHEME_BENCHMARKS(CrystallineL<>);
#if SMR_HAS_DCAS
SMR_SCHEME_BENCHMARKS(CrystallineW<>);
#endif

}  // namespace

BENCHMARK_MAIN();
