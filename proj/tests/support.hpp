#pragma once

#include <cstdlib>
#include <mutex>
#include <unordered_set>
#include <vector>

#include "smr/allocator.hpp"
#include "smr/node.hpp"

namespace smr::test {

// Malloc-backed allocator that remembers what it handed out and the order
// in which blocks came back.
class RecordingAllocator final : public NodeAllocator {
 public:
  ~RecordingAllocator() override {
    for (void* p : live_) std::free(p);
  }
  void* allocate(std::size_t bytes) override {
    void* p = std::aligned_alloc(16, (bytes + 15) / 16 * 16);
    std::lock_guard lock(mu_);
    live_.insert(p);
    ++allocations_;
    return p;
  }
  void deallocate(void* p) noexcept override {
    std::lock_guard lock(mu_);
    if (live_.erase(p) == 0) {
      ++double_frees_;
      return;
    }
    freed_.push_back(p);
    std::free(p);
  }

  bool is_live(const void* p) const {
    std::lock_guard lock(mu_);
    return live_.count(const_cast<void*>(p)) != 0;
  }
  std::vector<void*> freed() const {
    std::lock_guard lock(mu_);
    return freed_;
  }
  std::size_t allocations() const {
    std::lock_guard lock(mu_);
    return allocations_;
  }
  std::size_t frees() const {
    std::lock_guard lock(mu_);
    return freed_.size();
  }
  std::size_t live() const {
    std::lock_guard lock(mu_);
    return live_.size();
  }
  std::size_t double_frees() const {
    std::lock_guard lock(mu_);
    return double_frees_;
  }

 private:
  mutable std::mutex mu_;
  std::unordered_set<void*> live_;
  std::vector<void*> freed_;
  std::size_t allocations_ = 0;
  std::size_t double_frees_ = 0;
};

}  // namespace smr::test
