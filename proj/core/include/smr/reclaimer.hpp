#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <new>
#include <type_traits>
#include <utility>

#include "smr/node.hpp"

namespace smr {

// Shape shared by every scheme. tid is always passed explicitly; it is the
// value returned by register_thread() on the calling thread.
template <class S>
concept Reclaimer = requires(S& s, const S& cs, int tid, const Link& link,
                             Node* node, std::size_t bytes) {
  { s.register_thread() } -> std::same_as<int>;
  s.unregister_thread(tid);
  s.enter(tid);
  s.leave(tid);
  { s.protect(tid, link, 0, node) } -> std::same_as<Word>;
  { s.allocate_block(tid, bytes) } -> std::same_as<void*>;
  s.stamp(node);
  s.retire(tid, node);
  s.dispose(node);
  { cs.unreclaimed() } -> std::convertible_to<std::int64_t>;
  { cs.peak_unreclaimed() } -> std::convertible_to<std::int64_t>;
};

// Allocates and constructs a T (which embeds Node as its first base) with
// the reclamation header stamped after construction.
template <class T, class S, class... Args>
T* make_node(S& smr, int tid, Args&&... args) {
  static_assert(std::is_base_of_v<Node, T>);
  static_assert(std::is_trivially_destructible_v<T>,
                "nodes are released without running destructors");
  void* mem = smr.allocate_block(tid, sizeof(T));
  T* obj = ::new (mem) T(std::forward<Args>(args)...);
  smr.stamp(obj);
  return obj;
}

// Brackets one data-structure operation.
template <class S>
class OpGuard {
 public:
  OpGuard(S& smr, int tid) : smr_(smr), tid_(tid) { smr_.enter(tid_); }
  ~OpGuard() { smr_.leave(tid_); }
  OpGuard(const OpGuard&) = delete;
  OpGuard& operator=(const OpGuard&) = delete;

 private:
  S& smr_;
  int tid_;
};

// RAII registration for one thread.
template <class S>
class ThreadHandle {
 public:
  explicit ThreadHandle(S& smr) : smr_(&smr), tid_(smr.register_thread()) {}
  ~ThreadHandle() {
    if (smr_) smr_->unregister_thread(tid_);
  }
  ThreadHandle(const ThreadHandle&) = delete;
  ThreadHandle& operator=(const ThreadHandle&) = delete;

  int tid() const { return tid_; }

 private:
  S* smr_;
  int tid_;
};

}  // namespace smr
