#include <gtest/gtest.h>

#include <cstring>

#include "smr/atomics.hpp"
#include "smr/verify/canary_allocator.hpp"
#include "smr/verify/linearizability.hpp"
#include "smr/verify/scenarios.hpp"
#include "smr/verify/scheduler.hpp"
#include "smr/verify/stress.hpp"
#include "smr/verify/test_hook.hpp"

namespace smr::verify {
namespace {

TEST(CanaryAllocator, PoisonsAndQuarantines) {
  CanaryAllocator alloc;
  auto* p = static_cast<unsigned char*>(alloc.allocate(24));
  std::memset(p, 0x11, 24);
  EXPECT_FALSE(CanaryAllocator::is_freed(p));
  alloc.deallocate(p);
  EXPECT_TRUE(CanaryAllocator::is_freed(p));
  for (int i = 0; i < 24; ++i) EXPECT_EQ(p[i], CanaryAllocator::kPoisonByte);
  // Quarantined: the address is not handed out again.
  for (int i = 0; i < 64; ++i) EXPECT_NE(alloc.allocate(24), p);
  EXPECT_EQ(alloc.allocations(), 65u);
  EXPECT_EQ(alloc.frees(), 1u);
}

TEST(CanaryAllocator, CountsDoubleFrees) {
  CanaryAllocator alloc;
  void* p = alloc.allocate(8);
  alloc.deallocate(p);
  alloc.deallocate(p);
  EXPECT_EQ(alloc.double_frees(), 1u);
  EXPECT_EQ(alloc.frees(), 1u);
  EXPECT_EQ(alloc.live(), 0u);
}

using TA = Atomics<TestHook>;

// Two unsynchronised load/store increments of a shared word.
std::vector<std::function<void()>> racy_increments(AtomicWord& w) {
  auto body = [&w] {
    for (int i = 0; i < 3; ++i) TA::store(w, TA::load(w) + 1);
  };
  return {body, body};
}

TEST(Scheduler, SameSeedSameTrace) {
  AtomicWord a{0}, b{0};
  ScheduleOptions o;
  o.seed = 42;
  const auto r1 = run_schedule(racy_increments(a), o);
  const auto r2 = run_schedule(racy_increments(b), o);
  ASSERT_TRUE(r1.ok);
  EXPECT_EQ(r1.trace, r2.trace);
  EXPECT_EQ(a.load(), b.load());
}

TEST(Scheduler, FindsTheLostUpdate) {
  bool lost = false;
  for (std::uint64_t seed = 1; seed <= 200 && !lost; ++seed) {
    AtomicWord w{0};
    ScheduleOptions o;
    o.seed = seed;
    o.strategy = seed % 2 ? Strategy::kPct : Strategy::kRandom;
    ASSERT_TRUE(run_schedule(racy_increments(w), o).ok);
    lost = w.load() < 6;
  }
  EXPECT_TRUE(lost);
}

TEST(Scheduler, CheckStopsTheRun) {
  AtomicWord w{0};
  const auto r = run_schedule(racy_increments(w), {},
                              [&] { return w.load() >= 2 ? std::string("reached 2") : std::string(); });
  EXPECT_FALSE(r.ok);
  EXPECT_NE(r.failure.find("reached 2"), std::string::npos);
}

TEST(Scheduler, BodyExceptionIsAFailure) {
  const auto r = run_schedule({[] { throw std::runtime_error("boom"); }}, {});
  EXPECT_FALSE(r.ok);
  EXPECT_NE(r.failure.find("boom"), std::string::npos);
}

HistoryOp op(int thread, OpKind kind, std::uint64_t key, std::uint64_t value, std::int64_t result,
             std::uint64_t invoke, std::uint64_t response) {
  return {thread, kind, key, value, result, invoke, response};
}

TEST(Linearizability, SequentialStackHistory) {
  std::vector<HistoryOp> h{op(0, OpKind::kPush, 0, 1, -1, 0, 1), op(0, OpKind::kPush, 0, 2, -1, 2, 3),
                           op(1, OpKind::kPop, 0, 0, 2, 4, 5), op(1, OpKind::kPop, 0, 0, 1, 6, 7),
                           op(1, OpKind::kPop, 0, 0, -1, 8, 9)};
  EXPECT_TRUE(check_stack_history(h).ok);
  h[2].result = 1;
  EXPECT_FALSE(check_stack_history(h).ok);
}

TEST(Linearizability, OverlapAllowsEitherOrder) {
  // The pop overlaps the push, so it may take effect after it.
  std::vector<HistoryOp> h{op(0, OpKind::kPush, 0, 5, -1, 0, 9), op(1, OpKind::kPop, 0, 0, 5, 1, 2)};
  EXPECT_TRUE(check_stack_history(h).ok);
  h[1].invoke = 10;
  h[1].response = 11;
  EXPECT_TRUE(check_stack_history(h).ok);
  // A pop that finished before the push started cannot see its value.
  h[1].invoke = 0;
  h[1].response = 2;
  h[0].invoke = 3;
  EXPECT_FALSE(check_stack_history(h).ok);
}

TEST(Linearizability, MapHistories) {
  std::vector<HistoryOp> h{op(0, OpKind::kInsert, 1, 7, 1, 0, 1), op(1, OpKind::kGet, 1, 0, 7, 2, 3),
                           op(1, OpKind::kPut, 1, 8, 0, 4, 5), op(0, OpKind::kRemove, 1, 0, 8, 6, 7),
                           op(0, OpKind::kGet, 2, 0, -1, 0, 7)};
  EXPECT_TRUE(check_map_history(h).ok);
  h[3].result = 7;
  const auto bad = check_map_history(h);
  EXPECT_FALSE(bad.ok);
  EXPECT_FALSE(bad.failure.empty());
}

TEST(Linearizability, RecordedHistoriesCheck) {
  for (auto ds : {ds::DsKind::kStack, ds::DsKind::kList, ds::DsKind::kHashMap}) {
    HistoryOptions o;
    o.ds = ds;
    o.ops_per_thread = 100;
    o.seed = 5;
    const auto h = record_history(o);
    EXPECT_EQ(h.size(), 400u);
    const auto r = ds == ds::DsKind::kStack ? check_stack_history(h) : check_map_history(h);
    EXPECT_TRUE(r.ok) << ds::ds_name(ds) << ": " << r.failure;
  }
}

TEST(CanaryStress, ImmediateFreeIsCaught) {
  CanaryStressOptions o;
  o.broken = true;
  o.ds = ds::DsKind::kStack;
  o.ops = 20000;
  EXPECT_FALSE(run_canary_stress(o).pass());
}

TEST(CanaryStress, CleanSchemesPass) {
  for (SchemeKind k : available_schemes()) {
    CanaryStressOptions o;
    o.scheme = k;
    o.ops = 10000;
    const auto r = run_canary_stress(o);
    EXPECT_TRUE(r.pass()) << scheme_name(k) << ": " << r.summary();
  }
}

TEST(MemoryBound, MatchesTheClosedForm) {
  Config c;
  c.max_threads = 4;
  c.max_idx = 2;
  c.retire_freq = 8;
  // retire_freq * (threads * indices + 1)^2, W has two helper indices.
  EXPECT_EQ(memory_bound(SchemeKind::kCrystallineL, c), 8 * 9 * 9);
  EXPECT_EQ(memory_bound(SchemeKind::kCrystallineW, c), 8 * 17 * 17);
  EXPECT_EQ(memory_bound(SchemeKind::kEbr, c), -1);
}

TEST(Stall, RobustSchemeStaysUnderTheBound) {
  StallOptions o;
  o.ops = 20000;
  const auto r = run_stall(o);
  Config c;
  c.max_threads = o.max_threads;
  c.max_idx = o.max_idx;
  c.retire_freq = o.retire_freq;
  EXPECT_LE(r.peak_at_2n, memory_bound(o.scheme, c));
  EXPECT_LE(r.growth(), 1.1);
}

TEST(Stall, EbrGrows) {
  StallOptions o;
  o.scheme = SchemeKind::kEbr;
  o.ops = 20000;
  EXPECT_GE(run_stall(o).growth(), 1.5);
}

TEST(Explore, ShortRunHoldsTheBounds) {
  ExploreOptions o;
  o.runs = 20;
  const auto r = explore(o);
  EXPECT_TRUE(r.pass()) << r.failure << "\n" << r.trace;
  EXPECT_EQ(check_loop_bounds(r.stats, o.max_threads), "");
}

}  // namespace
}  // namespace smr::verify
