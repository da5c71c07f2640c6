#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "smr/crystalline_l.hpp"
#include "support.hpp"

namespace smr {
namespace {

Config cfg(int threads, int idx, std::uint64_t retire_freq = 1, std::uint64_t epoch_freq = 110) {
  Config c;
  c.max_threads = threads;
  c.max_idx = idx;
  c.retire_freq = retire_freq;
  c.epoch_freq = epoch_freq;
  return c;
}

// Runs body on a second registered thread that holds its reservations
// until release() is called.
class Reader {
 public:
  template <class S, class F>
  Reader(S& smr, F body) {
    t_ = std::thread([this, &smr, body] {
      const int tid = smr.register_thread();
      body(tid);
      stage_ = 1;
      stage_.notify_all();
      stage_.wait(1);
      smr.unregister_thread(tid);
    });
    stage_.wait(0);
  }
  void release() {
    stage_ = 2;
    stage_.notify_all();
    t_.join();
  }
  ~Reader() {
    if (t_.joinable()) release();
  }

 private:
  std::atomic<int> stage_{0};
  std::thread t_;
};

TEST(CrystallineL, FirstProtectOpensTheIndex) {
  CrystallineL<> smr(cfg(2, 2));
  const int tid = smr.register_thread();
  Link root{0};
  EXPECT_EQ(smr.slot(tid, 0).list.load(), kInvalid);
  smr.protect(tid, root, 0, nullptr);
  EXPECT_EQ(smr.slot(tid, 0).list.load(), 0u);
  EXPECT_EQ(smr.slot(tid, 0).era.load(), smr.global_era());
  EXPECT_EQ(smr.slot(tid, 1).list.load(), kInvalid);
  smr.leave(tid);
  EXPECT_EQ(smr.slot(tid, 0).era.load(), 0u);
  smr.unregister_thread(tid);
}

TEST(CrystallineL, ProtectReturnsTheLink) {
  CrystallineL<> smr(cfg(1, 1));
  const int tid = smr.register_thread();
  Node* n = smr.alloc_node(tid);
  Link root{to_word(n)};
  EXPECT_EQ(smr.protect(tid, root, 0, nullptr), to_word(n));
  smr.leave(tid);
  smr.dispose(n);
  smr.unregister_thread(tid);
}

TEST(CrystallineL, UpdateEraOnInvalidListStillPublishes) {
  CrystallineL<> smr(cfg(1, 1));
  const int tid = smr.register_thread();
  EXPECT_EQ(smr.update_era(tid, smr.global_era(), 0), smr.global_era());
  EXPECT_EQ(smr.slot(tid, 0).list.load(), 0u);
  EXPECT_EQ(smr.slot(tid, 0).era.load(), smr.global_era());
  smr.leave(tid);
  smr.unregister_thread(tid);
}

TEST(CrystallineL, InactiveSlotsFreeImmediately) {
  test::RecordingAllocator alloc;
  CrystallineL<> smr(cfg(1, 1), &alloc);
  const int tid = smr.register_thread();
  smr.retire(tid, smr.alloc_node(tid));
  // REFS only: no attempt yet.
  EXPECT_EQ(smr.stats(tid).try_retire_calls, 0u);
  smr.retire(tid, smr.alloc_node(tid));
  EXPECT_EQ(smr.stats(tid).try_retire_calls, 1u);
  EXPECT_EQ(alloc.frees(), 2u);
  smr.unregister_thread(tid);
}

TEST(CrystallineL, RetireFreqSetsTheCadence) {
  CrystallineL<> smr(cfg(1, 1, 120));
  const int tid = smr.register_thread();
  // Attempts at counter 121 (which frees the batch), then 121 again.
  for (int i = 0; i < 241; ++i) smr.retire(tid, smr.alloc_node(tid));
  EXPECT_EQ(smr.stats(tid).try_retire_calls, 1u);
  EXPECT_EQ(smr.batch(tid).counter, 120u);
  smr.retire(tid, smr.alloc_node(tid));
  EXPECT_EQ(smr.stats(tid).try_retire_calls, 2u);
  smr.unregister_thread(tid);
}

TEST(CrystallineL, OldReservationIsSkipped) {
  test::RecordingAllocator alloc;
  CrystallineL<> smr(cfg(2, 1, 1, 1), &alloc);
  const int tid = smr.register_thread();
  Reader r(smr, [&](int t) {
    Link root{0};
    smr.protect(t, root, 0, nullptr);
  });
  // epoch_freq = 1: these nodes are born after the reader's era.
  smr.retire(tid, smr.alloc_node(tid));
  smr.retire(tid, smr.alloc_node(tid));
  EXPECT_EQ(alloc.frees(), 2u);
  r.release();
  smr.unregister_thread(tid);
}

TEST(CrystallineL, TooFewSlotsKeepsGrowing) {
  test::RecordingAllocator alloc;
  CrystallineL<> smr(cfg(2, 2), &alloc);
  const int tid = smr.register_thread();
  Reader r(smr, [&](int t) {
    Link root{0};
    smr.protect(t, root, 0, nullptr);
    smr.protect(t, root, 1, nullptr);
  });
  smr.retire(tid, smr.alloc_node(tid));
  smr.retire(tid, smr.alloc_node(tid));
  // Two matching slots, one SLOT node: "ran out of nodes".
  EXPECT_EQ(smr.stats(tid).try_retire_failures, 1u);
  EXPECT_EQ(smr.batch(tid).counter, 2u);
  smr.retire(tid, smr.alloc_node(tid));
  EXPECT_TRUE(smr.batch(tid).empty());
  EXPECT_EQ(alloc.frees(), 0u);
  EXPECT_EQ(smr.unreclaimed(), 3);
  r.release();
  EXPECT_EQ(alloc.frees(), 3u);
  smr.unregister_thread(tid);
}

TEST(CrystallineL, ReprotectReleasesThePreviousList) {
  // protect() on the same index replaces the old reservation; once the
  // era moves the attached batch is dropped.
  test::RecordingAllocator alloc;
  CrystallineL<> smr(cfg(2, 1, 1, 1), &alloc);
  const int writer = smr.register_thread();
  std::atomic<int> stage{0};
  std::thread reader([&] {
    const int t = smr.register_thread();
    Link root{0};
    smr.protect(t, root, 0, nullptr);
    stage = 1;
    stage.notify_all();
    stage.wait(1);
    smr.protect(t, root, 0, nullptr);
    stage = 3;
    stage.notify_all();
    stage.wait(3);
    smr.unregister_thread(t);
  });
  stage.wait(0);
  // Allocated without the clock tick so they are born in the reader's era.
  Node* a = ::new (smr.core().allocate(sizeof(Node))) Node;
  Node* b = ::new (smr.core().allocate(sizeof(Node))) Node;
  smr.stamp(a);
  smr.stamp(b);
  smr.retire(writer, a);
  smr.retire(writer, b);
  EXPECT_EQ(smr.unreclaimed(), 2);
  smr.core().bump_era();
  stage = 2;
  stage.notify_all();
  stage.wait(2);
  EXPECT_EQ(smr.unreclaimed(), 0);
  stage = 4;
  stage.notify_all();
  reader.join();
  smr.unregister_thread(writer);
}

TEST(CrystallineL, ClearTraversesOnlyListsThatHoldNodes) {
  test::RecordingAllocator alloc;
  CrystallineL<> smr(cfg(2, 2), &alloc);
  const int writer = smr.register_thread();
  std::atomic<int> stage{0};
  std::thread reader([&] {
    const int t = smr.register_thread();
    Link root{0};
    smr.protect(t, root, 1, nullptr);
    stage = 1;
    stage.notify_all();
    stage.wait(1);
    EXPECT_EQ(smr.slot(t, 0).list.load(), kInvalid);
    EXPECT_NE(smr.slot(t, 1).list.load(), 0u);
    smr.leave(t);
    EXPECT_EQ(smr.stats(t).traverse_max, 1u);
    smr.unregister_thread(t);
  });
  stage.wait(0);
  smr.retire(writer, smr.alloc_node(writer));
  smr.retire(writer, smr.alloc_node(writer));
  stage = 2;
  stage.notify_all();
  reader.join();
  EXPECT_EQ(alloc.frees(), 2u);
  smr.unregister_thread(writer);
}

TEST(CrystallineL, FullBatchAlwaysRetires) {
  // Every reservation active and current: a batch of
  // max_threads * max_idx + 1 nodes is the first that can be published.
  constexpr int kThreads = 3;
  constexpr int kIdx = 2;
  test::RecordingAllocator alloc;
  CrystallineL<> smr(cfg(kThreads, kIdx, 1), &alloc);
  const int writer = smr.register_thread();
  Link root{0};
  for (int j = 0; j < kIdx; ++j) smr.protect(writer, root, j, nullptr);
  Reader r1(smr, [&](int t) {
    for (int j = 0; j < kIdx; ++j) smr.protect(t, root, j, nullptr);
  });
  Reader r2(smr, [&](int t) {
    for (int j = 0; j < kIdx; ++j) smr.protect(t, root, j, nullptr);
  });
  const int cap = kThreads * kIdx + 1;
  for (int i = 0; i < cap - 1; ++i) smr.retire(writer, smr.alloc_node(writer));
  EXPECT_EQ(smr.batch(writer).counter, static_cast<std::uint64_t>(cap - 1));
  smr.retire(writer, smr.alloc_node(writer));
  EXPECT_TRUE(smr.batch(writer).empty());
  EXPECT_EQ(smr.stats(writer).try_retire_fail_at_cap, 0u);
  smr.leave(writer);
  r1.release();
  r2.release();
  EXPECT_EQ(alloc.frees(), static_cast<std::size_t>(cap));
  smr.unregister_thread(writer);
}

}  // namespace
}  // namespace smr
