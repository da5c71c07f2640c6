#pragma once

#include <memory>

#include "smr/reclaim_core.hpp"
#include "smr/reclaimer.hpp"

namespace smr {

// Crystalline-L: lock-free, fully memory bounded.
//
// Every thread owns max_idx reservations, each with its own list and era.
// protect() on an index replaces whatever that index protected before, and
// batches are attached only to reservations whose era overlaps the batch's
// minimum birth era. Retirement is attempted every retire_freq retires and
// succeeds as soon as the batch has one SLOT node per matching reservation.
template <class Hook = NoHook>
class CrystallineL {
 public:
  using A = Atomics<Hook>;
  static constexpr const char* kName = "crystalline-l";

  struct Reservation {
    AtomicWord list{kInvalid};
    AtomicWord era{0};
  };

  explicit CrystallineL(Config cfg = {}, NodeAllocator* alloc = nullptr,
                        RefcLedger* ledger = nullptr)
      : core_(cfg, alloc, ledger),
        stride_(round_up(cfg.max_idx)),
        rsrv_(std::make_unique<Row[]>(static_cast<std::size_t>(cfg.max_threads) * stride_ / 4)) {}

  CrystallineL(const CrystallineL&) = delete;
  CrystallineL& operator=(const CrystallineL&) = delete;

  int register_thread() { return core_.register_thread(); }

  void unregister_thread(int tid) {
    core_.registry().check_owner(tid);
    leave(tid);
    core_.release_thread(tid);
  }

  // There is no activation step; the first protect() on an index opens it.
  void enter(int /*tid*/) {}

  // clear(): every index is reset and its list dropped. The era goes back
  // to 0 so the next protect() on the index cannot take the fast path while
  // the list is still inactive; it has to reopen it through update_era().
  void leave(int tid) {
    for (int i = 0; i < core_.config().max_idx; ++i) {
      Reservation& r = slot(tid, i);
      const Word p = A::exchange(r.list, kInvalid);
      A::store(r.era, 0);
      if (p != kInvalid) core_.traverse(tid, p);
    }
  }

  Word protect(int tid, const Link& src, int index, Node* /*parent*/ = nullptr) {
    SMR_CONTRACT(index >= 0 && index < core_.config().max_idx,
                 "reservation index out of range");
    Word prev = A::load(slot(tid, index).era);
    std::uint64_t iters = 0;
    while (true) {
      ++iters;
      const Word ptr = A::load(src);
      const Word era = core_.era();
      if (prev == era) {
        raise_max(core_.local(tid).stats.protect_max, iters);
        return ptr;
      }
      prev = update_era(tid, era, index);
    }
  }

  void* allocate_block(int tid, std::size_t bytes) {
    if (core_.alloc_tick(tid)) core_.bump_era();
    return core_.allocate(bytes);
  }

  void stamp(Node* node) {
    node->refc_bnext.store(0, std::memory_order_relaxed);
    node->birth_next.store(core_.era(), std::memory_order_relaxed);
    node->blink.store(0, std::memory_order_relaxed);
  }

  Node* alloc_node(int tid, std::size_t bytes = sizeof(Node)) {
    SMR_CONTRACT(bytes >= sizeof(Node), "allocation smaller than the node header");
    Node* n = ::new (allocate_block(tid, bytes)) Node;
    stamp(n);
    return n;
  }

  void retire(int tid, Node* node) {
    core_.batch_add(tid, node, true);
    Batch& b = core_.local(tid).batch;
    // A REFS-only batch has no SLOT to attach, so the first attempt waits
    // for the second node.
    if (b.counter < 2 || (b.counter - 1) % core_.config().retire_freq != 0) return;
    A::store(b.refs->blink, to_word(b.first));
    try_retire(tid);
  }

  void dispose(Node* node) { core_.deallocate(node); }

  const Config& config() const { return core_.config(); }
  std::int64_t unreclaimed() const { return core_.unreclaimed(); }
  std::int64_t peak_unreclaimed() const { return core_.peak_unreclaimed(); }
  LoopStats stats(int tid) const { return core_.stats(tid); }
  LoopStats merged_stats() const { return core_.merged_stats(); }

  // Introspection for tests.
  ReclaimCore<Hook>& core() { return core_; }
  Reservation& slot(int tid, int index) {
    return rsrv_[(static_cast<std::size_t>(tid) * stride_ + index) / 4]
        .r[(static_cast<std::size_t>(tid) * stride_ + index) % 4];
  }
  const Batch& batch(int tid) const { return core_.local(tid).batch; }
  Word global_era() { return core_.era(); }

  // Publishes curr_era for index, first dropping any list accumulated under
  // the previous era. Returns the era actually published.
  Word update_era(int tid, Word curr_era, int index) {
    Reservation& r = slot(tid, index);
    if (A::load(r.list) != 0) {
      const Word list = A::exchange(r.list, 0);
      if (list != kInvalid) core_.traverse(tid, list);
      curr_era = core_.era();
    }
    A::store(r.era, curr_era);
    return curr_era;
  }

  void try_retire(int tid) {
    ThreadLocal& tl = core_.local(tid);
    Batch& b = tl.batch;
    const Config& cfg = core_.config();
    ++tl.stats.try_retire_calls;

    const Word min_birth = A::load(b.refs->birth_next);
    Node* last = b.first;
    for (int i = 0; i < cfg.max_threads; ++i) {
      for (int j = 0; j < cfg.max_idx; ++j) {
        Reservation& r = slot(i, j);
        if (A::load(r.list) == kInvalid) continue;
        if (A::load(r.era) < min_birth) continue;
        if (last == b.refs) {
          ++tl.stats.try_retire_failures;
          const auto cap = static_cast<std::uint64_t>(cfg.max_threads) * cfg.max_idx + 1;
          if (b.counter >= cap) ++tl.stats.try_retire_fail_at_cap;
          return;
        }
        A::store(last->birth_next, reinterpret_cast<Word>(&r));
        last = to_node(A::load(last->refc_bnext));
      }
    }

    Word cnt = Word{0} - kRefcProtect;
    for (Node* curr = b.first; curr != last; curr = to_node(A::load(curr->refc_bnext))) {
      auto* r = reinterpret_cast<Reservation*>(A::load(curr->birth_next));
      // The era is not rechecked: it only grows.
      while (true) {
        Word prev = A::load(r->list);
        if (prev == kInvalid) break;
        A::store(curr->birth_next, prev);
        if (A::cas(r->list, prev, to_word(curr))) {
          ++cnt;
          break;
        }
      }
    }
    core_.finish_retire(tid, cnt);
  }

 private:
  struct alignas(64) Row {
    Reservation r[4];
  };

  static int round_up(int n) { return (n + 3) / 4 * 4; }

  ReclaimCore<Hook> core_;
  int stride_;
  std::unique_ptr<Row[]> rsrv_;
};

}  // namespace smr
