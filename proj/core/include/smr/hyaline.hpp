#pragma once

#include <memory>

#include "smr/reclaim_core.hpp"
#include "smr/reclaimer.hpp"

namespace smr {

// Hyaline-1 (Robust = false) and Hyaline-1S (Robust = true).
//
// One reservation per thread. A batch is published once it holds
// max_threads + 1 nodes, one per reservation list plus the REFS node.
// The robust variant stamps birth eras and skips reservations whose era is
// older than every node in the batch, so a stalled thread stops absorbing
// new batches once the clock has moved past it.
template <bool Robust, class Hook = NoHook>
class HyalineDomain {
 public:
  using A = Atomics<Hook>;
  static constexpr const char* kName = Robust ? "hyaline1s" : "hyaline1";

  explicit HyalineDomain(Config cfg = {}, NodeAllocator* alloc = nullptr,
                         RefcLedger* ledger = nullptr)
      : core_(cfg, alloc, ledger),
        rsrv_(std::make_unique<Reservation[]>(cfg.max_threads)) {}

  HyalineDomain(const HyalineDomain&) = delete;
  HyalineDomain& operator=(const HyalineDomain&) = delete;

  int register_thread() { return core_.register_thread(); }

  void unregister_thread(int tid) {
    core_.registry().check_owner(tid);
    leave(tid);
    core_.release_thread(tid);
  }

  // activate(): the reservation list becomes empty and accepts batches.
  void enter(int tid) { A::store(rsrv_[tid].list, 0); }

  // clear(): detach the list and drop its references.
  void leave(int tid) {
    const Word p = A::exchange(rsrv_[tid].list, kInvalid);
    if (p != kInvalid) core_.traverse(tid, p);
  }

  // Hyaline-1 reservations cover the whole operation, so a plain read is
  // enough. Hyaline-1S republishes its era until it matches the clock; the
  // reservation is cumulative, index and parent are ignored.
  Word protect(int tid, const Link& src, int /*index*/ = 0,
               Node* /*parent*/ = nullptr) {
    if constexpr (!Robust) {
      return A::load(src);
    } else {
      Reservation& r = rsrv_[tid];
      Word prev = A::load(r.era);
      std::uint64_t iters = 0;
      while (true) {
        ++iters;
        const Word ptr = A::load(src);
        const Word era = core_.era();
        if (prev == era) {
          raise_max(core_.local(tid).stats.protect_max, iters);
          return ptr;
        }
        A::store(r.era, era);
        prev = era;
      }
    }
  }

  void* allocate_block(int tid, std::size_t bytes) {
    if constexpr (Robust) {
      if (core_.alloc_tick(tid)) core_.bump_era();
    }
    return core_.allocate(bytes);
  }

  void stamp(Node* node) {
    node->refc_bnext.store(0, std::memory_order_relaxed);
    node->birth_next.store(Robust ? core_.era() : 0, std::memory_order_relaxed);
    node->blink.store(0, std::memory_order_relaxed);
  }

  Node* alloc_node(int tid, std::size_t bytes = sizeof(Node)) {
    SMR_CONTRACT(bytes >= sizeof(Node), "allocation smaller than the node header");
    Node* n = ::new (allocate_block(tid, bytes)) Node;
    stamp(n);
    return n;
  }

  void retire(int tid, Node* node) {
    core_.batch_add(tid, node, Robust);
    Batch& b = core_.local(tid).batch;
    // Need max_threads + 1 nodes: one per reservation plus REFS.
    const auto mt = static_cast<std::uint64_t>(core_.config().max_threads);
    if (b.counter <= mt) return;

    A::store(b.refs->blink, to_word(b.first));
    const Word min_birth = Robust ? A::load(b.refs->birth_next) : 0;
    Node* curr = b.first;
    Word cnt = Word{0} - kRefcProtect;
    for (std::uint64_t i = 0; i < mt; ++i) {
      Reservation& r = rsrv_[i];
      while (true) {
        Word prev = A::load(r.list);
        if (prev == kInvalid) break;
        if constexpr (Robust) {
          if (A::load(r.era) < min_birth) break;
        }
        A::store(curr->birth_next, prev);
        if (A::cas(r.list, prev, to_word(curr))) {
          ++cnt;
          break;
        }
      }
      curr = to_node(A::load(curr->refc_bnext));
    }
    core_.finish_retire(tid, cnt);
  }

  // Releases a node that was never made reachable by other threads.
  void dispose(Node* node) { core_.deallocate(node); }

  const Config& config() const { return core_.config(); }
  std::int64_t unreclaimed() const { return core_.unreclaimed(); }
  std::int64_t peak_unreclaimed() const { return core_.peak_unreclaimed(); }
  LoopStats stats(int tid) const { return core_.stats(tid); }
  LoopStats merged_stats() const { return core_.merged_stats(); }

  // Introspection for tests.
  ReclaimCore<Hook>& core() { return core_; }
  Word reservation_list(int tid) const { return rsrv_[tid].list.load(); }
  Word reservation_era(int tid) const { return rsrv_[tid].era.load(); }
  const Batch& batch(int tid) const { return core_.local(tid).batch; }
  Word global_era() { return core_.era(); }

 private:
  struct alignas(64) Reservation {
    AtomicWord list{kInvalid};
    AtomicWord era{0};
  };

  ReclaimCore<Hook> core_;
  std::unique_ptr<Reservation[]> rsrv_;
};

template <class Hook = NoHook>
using Hyaline1 = HyalineDomain<false, Hook>;
template <class Hook = NoHook>
using Hyaline1S = HyalineDomain<true, Hook>;

}  // namespace smr
