#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "smr/hyaline.hpp"
#include "support.hpp"

namespace smr {
namespace {

Config two_threads() {
  Config c;
  c.max_threads = 2;
  return c;
}

TEST(Hyaline, ActivateOpensTheList) {
  Hyaline1<> smr(two_threads());
  const int tid = smr.register_thread();
  EXPECT_EQ(smr.reservation_list(tid), kInvalid);
  smr.enter(tid);
  EXPECT_EQ(smr.reservation_list(tid), 0u);
  smr.enter(tid);
  EXPECT_EQ(smr.reservation_list(tid), 0u);
  smr.leave(tid);
  EXPECT_EQ(smr.reservation_list(tid), kInvalid);
  smr.leave(tid);  // already cleared: nothing to traverse
  EXPECT_EQ(smr.reservation_list(tid), kInvalid);
  smr.unregister_thread(tid);
}

TEST(Hyaline, FirstMaxThreadsRetiresDoNotPublish) {
  test::RecordingAllocator alloc;
  Hyaline1<> smr(two_threads(), &alloc);
  const int tid = smr.register_thread();
  smr.retire(tid, smr.alloc_node(tid));
  smr.retire(tid, smr.alloc_node(tid));
  EXPECT_EQ(smr.batch(tid).counter, 2u);
  EXPECT_EQ(alloc.frees(), 0u);
  smr.unregister_thread(tid);
}

TEST(Hyaline, NoActiveReservationFreesAtOnce) {
  test::RecordingAllocator alloc;
  Hyaline1<> smr(two_threads(), &alloc);
  const int tid = smr.register_thread();
  for (int i = 0; i < 3; ++i) smr.retire(tid, smr.alloc_node(tid));
  EXPECT_EQ(alloc.frees(), 3u);
  EXPECT_TRUE(smr.batch(tid).empty());
  EXPECT_EQ(smr.unreclaimed(), 0);
  smr.unregister_thread(tid);
}

TEST(Hyaline, ActiveReaderHoldsTheBatchUntilClear) {
  test::RecordingAllocator alloc;
  Hyaline1<> smr(two_threads(), &alloc);
  const int writer = smr.register_thread();
  std::atomic<int> stage{0};
  std::thread reader([&] {
    const int tid = smr.register_thread();
    smr.enter(tid);
    stage = 1;
    stage.notify_all();
    stage.wait(1);
    // One SLOT node was attached to this list.
    const Word head = smr.reservation_list(tid);
    EXPECT_NE(head, 0u);
    EXPECT_EQ(to_node(head)->birth_next.load(), 0u);
    smr.leave(tid);
    smr.unregister_thread(tid);
  });
  stage.wait(0);
  for (int i = 0; i < 3; ++i) smr.retire(writer, smr.alloc_node(writer));
  EXPECT_EQ(alloc.frees(), 0u);
  EXPECT_EQ(smr.unreclaimed(), 3);
  stage = 2;
  stage.notify_all();
  reader.join();
  EXPECT_EQ(alloc.frees(), 3u);
  smr.unregister_thread(writer);
}

TEST(Hyaline1S, BirthEraFollowsTheClock) {
  Config c = two_threads();
  c.epoch_freq = 1;
  Hyaline1S<> smr(c);
  const int tid = smr.register_thread();
  Node* a = smr.alloc_node(tid);
  Node* b = smr.alloc_node(tid);
  EXPECT_EQ(a->birth_next.load(), 2u);
  EXPECT_EQ(b->birth_next.load(), 3u);
  smr.dispose(a);
  smr.dispose(b);
  smr.unregister_thread(tid);
}

TEST(Hyaline1S, DefaultEpochFreqLeavesEraFor109Allocations) {
  Hyaline1S<> smr(two_threads());
  const int tid = smr.register_thread();
  const Word start = smr.global_era();
  for (int i = 0; i < 109; ++i) smr.dispose(smr.alloc_node(tid));
  EXPECT_EQ(smr.global_era(), start);
  smr.dispose(smr.alloc_node(tid));
  EXPECT_EQ(smr.global_era(), start + 1);
  smr.unregister_thread(tid);
}

TEST(Hyaline1S, ProtectPublishesOnceThenConverges) {
  Hyaline1S<> smr(two_threads());
  const int tid = smr.register_thread();
  smr.enter(tid);
  Link root{0};
  // The reservation starts at era 0 and the clock at 1: one publication.
  smr.protect(tid, root, 0, nullptr);
  EXPECT_EQ(smr.reservation_era(tid), smr.global_era());
  EXPECT_EQ(smr.stats(tid).protect_max, 2u);
  smr.protect(tid, root, 0, nullptr);
  EXPECT_EQ(smr.stats(tid).protect_max, 2u);
  smr.leave(tid);
  smr.unregister_thread(tid);
}

// Moves the clock on every shared access until disarmed.
struct ClockAdversary {
  static inline std::atomic<AtomicWord*> clock{nullptr};
  static inline std::atomic<int> budget{0};
  static void point() {
    AtomicWord* c = clock.load(std::memory_order_relaxed);
    if (c != nullptr && budget.fetch_sub(1) > 0) c->fetch_add(1);
  }
};

TEST(Hyaline1S, AdversarialClockKeepsProtectLooping) {
  Hyaline1S<ClockAdversary> smr(two_threads());
  const int tid = smr.register_thread();
  smr.enter(tid);
  Link root{0};
  ClockAdversary::budget = 3000;
  ClockAdversary::clock = &smr.core().era_word();
  smr.protect(tid, root, 0, nullptr);
  ClockAdversary::clock = nullptr;
  // The loop only ended because the adversary ran out of budget.
  EXPECT_GE(smr.stats(tid).protect_max, 500u);
  smr.leave(tid);
  smr.unregister_thread(tid);
}

TEST(Hyaline1S, StaleReservationIsSkipped) {
  // A reader that protected long ago is older than every node in a new
  // batch, so the batch is freed without attaching to it.
  test::RecordingAllocator alloc;
  Config c = two_threads();
  c.epoch_freq = 1;
  Hyaline1S<> smr(c, &alloc);
  const int writer = smr.register_thread();
  std::atomic<int> stage{0};
  std::thread reader([&] {
    const int tid = smr.register_thread();
    smr.enter(tid);
    Link root{0};
    smr.protect(tid, root, 0, nullptr);
    stage = 1;
    stage.notify_all();
    stage.wait(1);
    smr.leave(tid);
    smr.unregister_thread(tid);
  });
  stage.wait(0);
  for (int i = 0; i < 3; ++i) smr.retire(writer, smr.alloc_node(writer));
  EXPECT_EQ(alloc.frees(), 3u);
  stage = 2;
  stage.notify_all();
  reader.join();
  smr.unregister_thread(writer);
}

TEST(Hyaline1, StalledReaderAbsorbsEveryBatch) {
  test::RecordingAllocator alloc;
  Config c = two_threads();
  c.epoch_freq = 1;
  Hyaline1<> smr(c, &alloc);
  const int writer = smr.register_thread();
  std::atomic<int> stage{0};
  std::thread reader([&] {
    const int tid = smr.register_thread();
    smr.enter(tid);
    stage = 1;
    stage.notify_all();
    stage.wait(1);
    smr.leave(tid);
    smr.unregister_thread(tid);
  });
  stage.wait(0);
  for (int i = 0; i < 300; ++i) smr.retire(writer, smr.alloc_node(writer));
  EXPECT_EQ(smr.unreclaimed(), 300);
  stage = 2;
  stage.notify_all();
  reader.join();
  EXPECT_EQ(smr.unreclaimed(), 0);
  smr.unregister_thread(writer);
}

}  // namespace
}  // namespace smr
