#pragma once

#include <memory>

#include "smr/allocator.hpp"
#include "smr/atomics.hpp"
#include "smr/config.hpp"
#include "smr/node.hpp"
#include "smr/reclaim_core.hpp"
#include "smr/reclaimer.hpp"
#include "smr/registry.hpp"

namespace smr {

namespace detail {

// Intrusive singly linked chain of retired nodes, linked through the first
// header word.
struct NodeChain {
  Node* head = nullptr;
  std::uint64_t size = 0;

  void push(Node* n) {
    n->refc_bnext.store(to_word(head), std::memory_order_relaxed);
    head = n;
    ++size;
  }

  std::uint64_t release(NodeAllocator& alloc) {
    const std::uint64_t n = size;
    while (head != nullptr) {
      Node* next = to_node(head->refc_bnext.load(std::memory_order_relaxed));
      alloc.deallocate(head);
      head = next;
    }
    size = 0;
    return n;
  }
};

}  // namespace detail

// Classic three-epoch EBR. A node retired in epoch e is freed once the
// global epoch reaches e + 2, which requires every thread that was inside
// an operation to have announced e + 1. One stalled thread therefore stops
// all reclamation.
template <class Hook = NoHook>
class Ebr {
 public:
  using A = Atomics<Hook>;
  static constexpr const char* kName = "ebr";
  static constexpr Word kQuiescent = ~Word{0};

  explicit Ebr(Config cfg = {}, NodeAllocator* alloc = nullptr,
               RefcLedger* /*ledger*/ = nullptr)
      : cfg_((cfg.validate(), cfg)),
        allocator_(alloc ? alloc : &default_allocator()),
        registry_(cfg.max_threads),
        locals_(std::make_unique<Local[]>(cfg.max_threads)) {}

  Ebr(const Ebr&) = delete;
  Ebr& operator=(const Ebr&) = delete;

  ~Ebr() {
    for (int t = 0; t < cfg_.max_threads; ++t) {
      for (Bucket& b : locals_[t].limbo) counter_.sub(static_cast<std::int64_t>(b.nodes.release(*allocator_)));
    }
  }

  int register_thread() { return registry_.claim(); }

  // Limbo lists stay with the slot and are adopted by its next owner.
  void unregister_thread(int tid) {
    registry_.check_owner(tid);
    A::store(locals_[tid].announce, kQuiescent);
    registry_.release(tid);
  }

  void enter(int tid) {
    AtomicWord& a = locals_[tid].announce;
    Word e = A::load(epoch_);
    while (true) {
      A::store(a, e);
      const Word again = A::load(epoch_);
      if (again == e) break;
      e = again;
    }
  }

  void leave(int tid) {
    AtomicWord& a = locals_[tid].announce;
    SMR_CONTRACT(a.load(std::memory_order_relaxed) != kQuiescent,
                 "leave() without a matching enter()");
    A::store(a, kQuiescent);
  }

  Word protect(int /*tid*/, const Link& src, int /*index*/ = 0, Node* /*parent*/ = nullptr) {
    return A::load(src);
  }

  void* allocate_block(int /*tid*/, std::size_t bytes) { return allocator_->allocate(bytes); }

  void stamp(Node* node) {
    node->refc_bnext.store(0, std::memory_order_relaxed);
    node->birth_next.store(0, std::memory_order_relaxed);
    node->blink.store(0, std::memory_order_relaxed);
  }

  Node* alloc_node(int tid, std::size_t bytes = sizeof(Node)) {
    Node* n = ::new (allocate_block(tid, bytes)) Node;
    stamp(n);
    return n;
  }

  void retire(int tid, Node* node) {
    Local& l = locals_[tid];
    const Word e = A::load(epoch_);
    Bucket& b = l.limbo[e % 3];
    // A bucket last used three or more epochs ago is already safe.
    if (b.epoch != e) {
      counter_.sub(static_cast<std::int64_t>(b.nodes.release(*allocator_)));
      b.epoch = e;
    }
    b.nodes.push(node);
    counter_.add(1);
    raise_max(l.stats.max_batch, b.nodes.size);
    if (++l.retired % cfg_.retire_freq == 0) scan(tid);
  }

  void dispose(Node* node) { allocator_->deallocate(node); }

  const Config& config() const { return cfg_; }
  std::int64_t unreclaimed() const { return counter_.value(); }
  std::int64_t peak_unreclaimed() const { return counter_.peak(); }
  LoopStats stats(int tid) const { return locals_[tid].stats; }
  LoopStats merged_stats() const {
    LoopStats s;
    for (int t = 0; t < cfg_.max_threads; ++t) s.merge(locals_[t].stats);
    return s;
  }

  Word global_epoch() const { return epoch_.load(); }
  Word announced(int tid) const { return locals_[tid].announce.load(); }

  // Advances the epoch if every active thread has caught up, then frees
  // this thread's buckets that are two epochs behind.
  void scan(int tid) {
    Word e = A::load(epoch_);
    bool all_current = true;
    for (int t = 0; t < cfg_.max_threads && all_current; ++t) {
      const Word a = A::load(locals_[t].announce);
      if (a != kQuiescent && a != e) all_current = false;
    }
    if (all_current && A::cas(epoch_, e, e + 1)) e = e + 1;
    else e = A::load(epoch_);
    for (Bucket& b : locals_[tid].limbo) {
      if (b.nodes.size != 0 && b.epoch + 2 <= e)
        counter_.sub(static_cast<std::int64_t>(b.nodes.release(*allocator_)));
    }
  }

 private:
  struct Bucket {
    Word epoch = 0;
    detail::NodeChain nodes;
  };

  struct alignas(64) Local {
    AtomicWord announce{kQuiescent};
    Bucket limbo[3];
    std::uint64_t retired = 0;
    LoopStats stats;
  };

  Config cfg_;
  NodeAllocator* allocator_;
  Registry registry_;
  std::unique_ptr<Local[]> locals_;
  alignas(64) AtomicWord epoch_{1};
  UnreclaimedCounter counter_;
};

// No reclamation: retired nodes are kept until the domain is destroyed.
template <class Hook = NoHook>
class NoReclaim {
 public:
  using A = Atomics<Hook>;
  static constexpr const char* kName = "none";

  explicit NoReclaim(Config cfg = {}, NodeAllocator* alloc = nullptr,
                     RefcLedger* /*ledger*/ = nullptr)
      : cfg_((cfg.validate(), cfg)),
        allocator_(alloc ? alloc : &default_allocator()),
        registry_(cfg.max_threads),
        locals_(std::make_unique<Local[]>(cfg.max_threads)) {}

  NoReclaim(const NoReclaim&) = delete;
  NoReclaim& operator=(const NoReclaim&) = delete;

  ~NoReclaim() {
    for (int t = 0; t < cfg_.max_threads; ++t) locals_[t].leaked.release(*allocator_);
  }

  int register_thread() { return registry_.claim(); }
  void unregister_thread(int tid) {
    registry_.check_owner(tid);
    registry_.release(tid);
  }
  void enter(int /*tid*/) {}
  void leave(int /*tid*/) {}

  Word protect(int /*tid*/, const Link& src, int /*index*/ = 0, Node* /*parent*/ = nullptr) {
    return A::load(src);
  }

  void* allocate_block(int /*tid*/, std::size_t bytes) { return allocator_->allocate(bytes); }

  void stamp(Node* node) {
    node->refc_bnext.store(0, std::memory_order_relaxed);
    node->birth_next.store(0, std::memory_order_relaxed);
    node->blink.store(0, std::memory_order_relaxed);
  }

  Node* alloc_node(int tid, std::size_t bytes = sizeof(Node)) {
    Node* n = ::new (allocate_block(tid, bytes)) Node;
    stamp(n);
    return n;
  }

  void retire(int tid, Node* node) {
    locals_[tid].leaked.push(node);
    counter_.add(1);
  }

  void dispose(Node* node) { allocator_->deallocate(node); }

  const Config& config() const { return cfg_; }
  std::int64_t unreclaimed() const { return counter_.value(); }
  std::int64_t peak_unreclaimed() const { return counter_.peak(); }
  LoopStats stats(int /*tid*/) const { return {}; }
  LoopStats merged_stats() const { return {}; }

 private:
  struct alignas(64) Local {
    detail::NodeChain leaked;
  };

  Config cfg_;
  NodeAllocator* allocator_;
  Registry registry_;
  std::unique_ptr<Local[]> locals_;
  UnreclaimedCounter counter_;
};

}  // namespace smr
