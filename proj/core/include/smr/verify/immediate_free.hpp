#pragma once

#include <memory>

#include "smr/allocator.hpp"
#include "smr/atomics.hpp"
#include "smr/config.hpp"
#include "smr/reclaim_core.hpp"
#include "smr/registry.hpp"

namespace smr::verify {

// Deliberately unsafe: retire() frees at once. Negative control for the
// use-after-free detectors.
template <class Hook = NoHook>
class ImmediateFree {
 public:
  using A = Atomics<Hook>;
  static constexpr const char* kName = "immediate-free";

  explicit ImmediateFree(Config cfg = {}, NodeAllocator* alloc = nullptr,
                         RefcLedger* /*ledger*/ = nullptr)
      : cfg_((cfg.validate(), cfg)),
        allocator_(alloc ? alloc : &default_allocator()),
        registry_(cfg.max_threads) {}

  int register_thread() { return registry_.claim(); }
  void unregister_thread(int tid) { registry_.release(tid); }
  void enter(int) {}
  void leave(int) {}
  Word protect(int, const Link& src, int = 0, Node* = nullptr) { return A::load(src); }
  void* allocate_block(int, std::size_t bytes) { return allocator_->allocate(bytes); }
  void stamp(Node* node) {
    node->refc_bnext.store(0, std::memory_order_relaxed);
    node->birth_next.store(0, std::memory_order_relaxed);
    node->blink.store(0, std::memory_order_relaxed);
  }
  void retire(int, Node* node) { allocator_->deallocate(node); }
  void dispose(Node* node) { allocator_->deallocate(node); }

  const Config& config() const { return cfg_; }
  std::int64_t unreclaimed() const { return 0; }
  std::int64_t peak_unreclaimed() const { return 0; }
  LoopStats stats(int) const { return {}; }
  LoopStats merged_stats() const { return {}; }

 private:
  Config cfg_;
  NodeAllocator* allocator_;
  Registry registry_;
};

}  // namespace smr::verify
