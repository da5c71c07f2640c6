#include <gtest/gtest.h>

#include <atomic>
#include <barrier>
#include <set>
#include <thread>
#include <vector>

#include "smr/crystalline_l.hpp"
#include "smr/crystalline_w.hpp"
#include "smr/hyaline.hpp"
#include "smr/registry.hpp"
#include "support.hpp"

namespace smr {
namespace {

TEST(Registry, FirstClaimIsZero) {
  Registry r(4);
  EXPECT_EQ(r.claim(), 0);
  EXPECT_EQ(r.claim(), 1);
  EXPECT_EQ(r.live(), 2);
}

TEST(Registry, ReleasedSlotIsReused) {
  Registry r(4);
  const int a = r.claim();
  r.release(a);
  EXPECT_EQ(r.claim(), a);
}

TEST(Registry, LowestFreeSlotWins) {
  Registry r(4);
  r.claim();
  const int b = r.claim();
  r.claim();
  r.release(b);
  EXPECT_EQ(r.claim(), b);
}

TEST(Registry, FullTableThrows) {
  Registry r(2);
  r.claim();
  r.claim();
  EXPECT_THROW(r.claim(), CapacityError);
}

TEST(Registry, ReleaseFromAnotherThreadIsRejected) {
  Registry r(2);
  const int a = r.claim();
  std::thread([&] { EXPECT_THROW(r.release(a), UsageError); }).join();
  EXPECT_TRUE(r.occupied(a));
  EXPECT_THROW(r.check_owner(7), UsageError);
}

TEST(Registry, ChurnNeverSharesASlot) {
  constexpr int kThreads = 8;
  constexpr int kRounds = 2000;
  Registry r(4);
  std::vector<std::atomic<int>> holders(4);
  std::atomic<int> clashes{0};
  std::vector<std::thread> ts;
  for (int t = 0; t < kThreads; ++t) {
    ts.emplace_back([&] {
      for (int i = 0; i < kRounds; ++i) {
        int tid;
        try {
          tid = r.claim();
        } catch (const CapacityError&) {
          std::this_thread::yield();
          continue;
        }
        if (holders[tid].fetch_add(1) != 0) clashes.fetch_add(1);
        std::this_thread::yield();
        holders[tid].fetch_sub(1);
        r.release(tid);
      }
    });
  }
  for (auto& t : ts) t.join();
  EXPECT_EQ(clashes.load(), 0);
  EXPECT_EQ(r.live(), 0);
}

TEST(Config, Defaults) {
  Config c;
  EXPECT_EQ(c.max_idx, 3);
  EXPECT_EQ(c.epoch_freq, 110u);
  EXPECT_EQ(c.retire_freq, 120u);
  EXPECT_EQ(c.max_tries, 16);
  EXPECT_EQ(c.max_threads, default_max_threads());
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsOutOfRangeFields) {
  auto bad = [](auto edit) {
    Config c;
    edit(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  bad([](Config& c) { c.max_threads = 0; });
  bad([](Config& c) { c.max_idx = 0; });
  bad([](Config& c) { c.epoch_freq = 0; });
  bad([](Config& c) { c.retire_freq = 0; });
  bad([](Config& c) { c.max_tries = 1; });
}

// A partial batch stays with the slot and is continued by the next owner.
template <class S>
void check_orphan_adoption() {
  Config cfg;
  cfg.max_threads = 2;
  cfg.max_idx = 1;
  cfg.retire_freq = 1000;
  test::RecordingAllocator alloc;
  {
    S smr(cfg, &alloc);
    int tid = smr.register_thread();
    for (int i = 0; i < 3; ++i) smr.retire(tid, smr.alloc_node(tid));
    smr.unregister_thread(tid);
    EXPECT_EQ(alloc.frees(), 0u);

    tid = smr.register_thread();
    EXPECT_EQ(smr.batch(tid).counter, 3u);
    smr.retire(tid, smr.alloc_node(tid));
    EXPECT_EQ(smr.batch(tid).counter, 4u);
    EXPECT_EQ(smr.unreclaimed(), 4);
    smr.unregister_thread(tid);
  }
  // Unpublished batches are released with the domain.
  EXPECT_EQ(alloc.live(), 0u);
}

TEST(Registry, OrphanBatchIsAdoptedCrystallineL) { check_orphan_adoption<CrystallineL<>>(); }
TEST(Registry, OrphanBatchIsAdoptedHyaline1S) {
  Config cfg;
  cfg.max_threads = 4;
  test::RecordingAllocator alloc;
  Hyaline1S<> smr(cfg, &alloc);
  int tid = smr.register_thread();
  smr.enter(tid);
  for (int i = 0; i < 3; ++i) smr.retire(tid, smr.alloc_node(tid));
  smr.leave(tid);
  smr.unregister_thread(tid);
  tid = smr.register_thread();
  EXPECT_EQ(smr.batch(tid).counter, 3u);
  smr.unregister_thread(tid);
}
#if SMR_HAS_DCAS
TEST(Registry, OrphanBatchIsAdoptedCrystallineW) { check_orphan_adoption<CrystallineW<>>(); }
#endif

TEST(Registry, UnregisterClearsActiveReservations) {
  Config cfg;
  cfg.max_threads = 2;
  cfg.max_idx = 2;
  CrystallineL<> smr(cfg);
  const int tid = smr.register_thread();
  Link root{0};
  smr.protect(tid, root, 0, nullptr);
  smr.protect(tid, root, 1, nullptr);
  EXPECT_NE(smr.slot(tid, 0).list.load(), kInvalid);
  smr.unregister_thread(tid);
  for (int j = 0; j < 2; ++j) EXPECT_EQ(smr.slot(tid, j).list.load(), kInvalid);
}

TEST(Registry, UnregisterTraversesTheAttachedList) {
  // One reader holds index 0 while a batch is attached to it; when the
  // reader unregisters its list is traversed and the batch freed.
  Config cfg;
  cfg.max_threads = 2;
  cfg.max_idx = 1;
  cfg.retire_freq = 1;
  test::RecordingAllocator alloc;
  CrystallineL<> smr(cfg, &alloc);
  Link root{0};
  const int writer = smr.register_thread();
  std::atomic<int> stage{0};
  std::thread reader([&] {
    const int tid = smr.register_thread();
    smr.protect(tid, root, 0, nullptr);
    stage = 1;
    stage.notify_all();
    stage.wait(1);
    smr.unregister_thread(tid);
  });
  stage.wait(0);
  Node* a = smr.alloc_node(writer);
  Node* b = smr.alloc_node(writer);
  smr.retire(writer, a);
  smr.retire(writer, b);
  EXPECT_EQ(smr.unreclaimed(), 2);
  stage = 2;
  stage.notify_all();
  reader.join();
  EXPECT_EQ(smr.unreclaimed(), 0);
  EXPECT_FALSE(alloc.is_live(a));
  smr.unregister_thread(writer);
}

TEST(Registry, ChurnConservesNodes) {
  Config cfg;
  cfg.max_threads = 3;
  cfg.max_idx = 1;
  cfg.retire_freq = 2;
  cfg.epoch_freq = 3;
  test::RecordingAllocator alloc;
  {
    CrystallineL<> smr(cfg, &alloc);
    Link root{0};
    std::vector<std::thread> ts;
    for (int t = 0; t < 3; ++t) {
      ts.emplace_back([&] {
        for (int round = 0; round < 200; ++round) {
          ThreadHandle<CrystallineL<>> h(smr);
          for (int i = 0; i < 5; ++i) {
            smr.protect(h.tid(), root, 0, nullptr);
            smr.retire(h.tid(), smr.alloc_node(h.tid()));
          }
        }
      });
    }
    for (auto& t : ts) t.join();
    EXPECT_EQ(static_cast<std::int64_t>(alloc.allocations() - alloc.frees()), smr.unreclaimed());
  }
  EXPECT_EQ(alloc.live(), 0u);
  EXPECT_EQ(alloc.double_frees(), 0u);
}

}  // namespace
}  // namespace smr
