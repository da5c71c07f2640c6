#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <memory>

#include "smr/allocator.hpp"
#include "smr/atomics.hpp"
#include "smr/config.hpp"
#include "smr/node.hpp"
#include "smr/refc_ledger.hpp"
#include "smr/registry.hpp"

namespace smr {

// Per-thread iteration counters for every loop whose bound matters to the
// progress guarantees. "max" fields hold the largest count seen in a single
// call; the rest are totals.
struct LoopStats {
  std::uint64_t traverse_max = 0;
  std::uint64_t protect_max = 0;
  std::uint64_t try_retire_calls = 0;
  std::uint64_t try_retire_failures = 0;
  // Failed attempts while the batch already held enough nodes to cover
  // every reservation. Must stay zero.
  std::uint64_t try_retire_fail_at_cap = 0;
  std::uint64_t max_batch = 0;
  // The wait-free loops below count repeats: passes after the first, each
  // of which needs a conflicting era bump or list update by another thread.
  std::uint64_t detach_max = 0;
  std::uint64_t slow_max = 0;
  std::uint64_t help_max = 0;
  std::uint64_t terminal_max = 0;
  // Passes, not repeats; at most two.
  std::uint64_t era_set_max = 0;
  std::uint64_t slow_paths = 0;
  std::uint64_t slow_self = 0;
  std::uint64_t slow_produced = 0;
  std::uint64_t helps = 0;
  std::uint64_t help_changed = 0;
  std::uint64_t help_published = 0;
  std::uint64_t odd_tag_earmarks = 0;
  // REFS-terminals installed for an already retired slow-path result, and
  // references handed to an owner through its pin.
  std::uint64_t terminals = 0;
  std::uint64_t pin_handoffs = 0;

  void merge(const LoopStats& o) {
    auto mx = [](std::uint64_t& a, std::uint64_t b) { a = std::max(a, b); };
    mx(traverse_max, o.traverse_max);
    mx(protect_max, o.protect_max);
    try_retire_calls += o.try_retire_calls;
    try_retire_failures += o.try_retire_failures;
    try_retire_fail_at_cap += o.try_retire_fail_at_cap;
    mx(max_batch, o.max_batch);
    mx(detach_max, o.detach_max);
    mx(slow_max, o.slow_max);
    mx(help_max, o.help_max);
    mx(terminal_max, o.terminal_max);
    mx(era_set_max, o.era_set_max);
    slow_paths += o.slow_paths;
    slow_self += o.slow_self;
    slow_produced += o.slow_produced;
    helps += o.helps;
    help_changed += o.help_changed;
    help_published += o.help_published;
    odd_tag_earmarks += o.odd_tag_earmarks;
    terminals += o.terminals;
    pin_handoffs += o.pin_handoffs;
  }
};

inline void raise_max(std::uint64_t& slot, std::uint64_t v) {
  if (v > slot) slot = v;
}

struct alignas(64) ThreadLocal {
  Batch batch;
  std::uint64_t alloc_count = 0;
  LoopStats stats;
};

// Exact count of retired-but-unfreed nodes, with its running maximum.
class UnreclaimedCounter {
 public:
  void add(std::int64_t n) {
    const std::int64_t v = count_.fetch_add(n, std::memory_order_relaxed) + n;
    std::int64_t p = peak_.load(std::memory_order_relaxed);
    while (v > p && !peak_.compare_exchange_weak(p, v, std::memory_order_relaxed)) {
    }
  }
  void sub(std::int64_t n) { count_.fetch_sub(n, std::memory_order_relaxed); }
  std::int64_t value() const { return count_.load(std::memory_order_relaxed); }
  std::int64_t peak() const { return peak_.load(std::memory_order_relaxed); }

 private:
  alignas(64) std::atomic<std::int64_t> count_{0};
  alignas(64) std::atomic<std::int64_t> peak_{0};
};

template <class Hook>
class ReclaimCore {
 public:
  using A = Atomics<Hook>;

  ReclaimCore(const Config& cfg, NodeAllocator* alloc, RefcLedger* ledger)
      : cfg_((cfg.validate(), cfg)),
        allocator_(alloc ? alloc : &default_allocator()),
        ledger_(ledger),
        registry_(cfg.max_threads),
        locals_(std::make_unique<ThreadLocal[]>(cfg.max_threads)) {}

  ReclaimCore(const ReclaimCore&) = delete;
  ReclaimCore& operator=(const ReclaimCore&) = delete;

  // Nodes still sitting in unpublished batches were never shared.
  ~ReclaimCore() {
    for (int t = 0; t < cfg_.max_threads; ++t) drop_local_batch(t);
  }

  const Config& config() const { return cfg_; }
  Registry& registry() { return registry_; }
  const Registry& registry() const { return registry_; }
  ThreadLocal& local(int tid) { return locals_[tid]; }
  const ThreadLocal& local(int tid) const { return locals_[tid]; }
  NodeAllocator& allocator() { return *allocator_; }
  RefcLedger* ledger() { return ledger_; }

  // --- era clock ---------------------------------------------------------
  AtomicWord& era_word() { return era_; }
  Word era() { return A::load(era_); }
  void bump_era() { A::fetch_add(era_, 1); }
  // True on every epoch_freq-th allocation of this thread.
  bool alloc_tick(int tid) {
    return ++locals_[tid].alloc_count % cfg_.epoch_freq == 0;
  }

  void* allocate(std::size_t bytes) { return allocator_->allocate(bytes); }
  void deallocate(Node* n) { allocator_->deallocate(n); }

  // --- batches -------------------------------------------------------------
  // The first node becomes REFS; later nodes become SLOTs chained through
  // bnext and pointing back at REFS. With fold_min_birth the REFS birth
  // field keeps the smallest birth era in the batch.
  void batch_add(int tid, Node* node, bool fold_min_birth) {
    ThreadLocal& tl = locals_[tid];
    Batch& b = tl.batch;
    if (b.first == nullptr) {
      b.refs = node;
      if (ledger_) ledger_->open(node, kRefcProtect);
      A::store(node->refc_bnext, kRefcProtect);
    } else {
      if (fold_min_birth) {
        const Word nb = A::load(node->birth_next);
        if (A::load(b.refs->birth_next) > nb) A::store(b.refs->birth_next, nb);
      }
      A::store(node->blink, to_word(b.refs));
      A::store(node->refc_bnext, to_word(b.first));
    }
    b.first = node;
    ++b.counter;
    raise_max(tl.stats.max_batch, b.counter);
    unreclaimed_.add(1);
  }

  void reset_batch(int tid) { locals_[tid].batch = Batch{}; }

  // Fetch-and-add on a batch counter; returns the previous value.
  Word refc_add(Node* refs, Word delta) {
    if (ledger_) ledger_->add(refs, delta);
    return A::fetch_add(refs->refc_bnext, delta);
  }

  // Finishes publishing: applies cnt and frees the batch if nobody holds it.
  void finish_retire(int tid, Word cnt) {
    Node* refs = locals_[tid].batch.refs;
    if (refc_add(refs, cnt) == Word{0} - cnt) free_batch(refs);
    reset_batch(tid);
  }

  void free_batch(Node* refs) {
    SMR_CONTRACT(A::load(refs->refc_bnext) == 0,
                 "free_batch called on a batch with nonzero refc");
    if (ledger_) ledger_->close(refs);
    // Bit 0 of REFS.blink is the REFS-link marker in the wait-free scheme.
    Word n = A::load(refs->blink) & ~Word{1};
    std::int64_t freed = 0;
    do {
      Node* obj = to_node(n);
      // refc and bnext share a word; it reads 0 on the REFS node, the last.
      n = A::load(obj->refc_bnext);
      allocator_->deallocate(obj);
      ++freed;
    } while (n != 0);
    unreclaimed_.sub(freed);
  }

  // Lock-free traversal of a detached reservation list.
  void traverse(int tid, Word head) {
    std::uint64_t len = 0;
    while (head != 0) {
      Node* curr = to_node(head);
      head = A::load(curr->birth_next);
      Node* refs = to_node(A::load(curr->blink));
      ++len;
      if (refc_add(refs, ~Word{0}) == 1) free_batch(refs);
    }
    raise_max(locals_[tid].stats.traverse_max, len);
  }

  // --- thread lifecycle ----------------------------------------------------
  // The partial batch left in a slot by its previous owner is adopted as is.
  int register_thread() { return registry_.claim(); }
  void release_thread(int tid) { registry_.release(tid); }

  std::int64_t unreclaimed() const { return unreclaimed_.value(); }
  std::int64_t peak_unreclaimed() const { return unreclaimed_.peak(); }
  UnreclaimedCounter& counter() { return unreclaimed_; }

  LoopStats stats(int tid) const { return locals_[tid].stats; }
  LoopStats merged_stats() const {
    LoopStats s;
    for (int t = 0; t < cfg_.max_threads; ++t) s.merge(locals_[t].stats);
    return s;
  }

 private:
  void drop_local_batch(int tid) {
    Batch& b = locals_[tid].batch;
    Node* n = b.first;
    for (std::uint64_t c = b.counter; c > 0 && n != nullptr; --c) {
      Node* next = n == b.refs ? nullptr : to_node(n->refc_bnext.load());
      if (n == b.refs && ledger_) ledger_->discard(n);
      allocator_->deallocate(n);
      unreclaimed_.sub(1);
      n = next;
    }
    b = Batch{};
  }

  Config cfg_;
  NodeAllocator* allocator_;
  RefcLedger* ledger_;
  Registry registry_;
  std::unique_ptr<ThreadLocal[]> locals_;
  alignas(64) AtomicWord era_{1};
  UnreclaimedCounter unreclaimed_;
};

}  // namespace smr
