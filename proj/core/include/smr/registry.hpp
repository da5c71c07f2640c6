#pragma once

#include <atomic>
#include <memory>
#include <thread>

namespace smr {

// Fixed table of thread slots. A slot is claimed with a single CAS, so
// register/unregister may race freely; everything else about a slot is
// touched only by its owner.
class Registry {
 public:
  explicit Registry(int max_threads);

  Registry(const Registry&) = delete;
  Registry& operator=(const Registry&) = delete;

  // Lowest free slot. Throws CapacityError when every slot is live.
  int claim();

  // Throws UsageError unless the calling thread currently owns tid.
  void check_owner(int tid) const;

  void release(int tid);

  bool occupied(int tid) const;
  int capacity() const { return capacity_; }
  int live() const;

 private:
  struct alignas(64) Slot {
    std::atomic<bool> occupied{false};
    std::atomic<std::thread::id> owner{};
  };

  int capacity_;
  std::unique_ptr<Slot[]> slots_;
};

}  // namespace smr
