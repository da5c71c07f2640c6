#pragma once

#include <atomic>
#include <cstdint>

#include "smr/allocator.hpp"

namespace smr::verify {

// Allocator for use-after-free detection. Every block gets a 16-byte prefix
// recording its state; a freed block is filled with kPoisonByte and parked
// in a quarantine for the allocator's lifetime, so its address is never
// handed out again and any later read through a stale link sees poison.
// Freeing a block twice is counted instead of corrupting anything.
class CanaryAllocator final : public NodeAllocator {
 public:
  static constexpr unsigned char kPoisonByte = 0xDB;

  CanaryAllocator() = default;
  CanaryAllocator(const CanaryAllocator&) = delete;
  CanaryAllocator& operator=(const CanaryAllocator&) = delete;
  ~CanaryAllocator() override;

  void* allocate(std::size_t bytes) override;
  void deallocate(void* p) noexcept override;

  // True if p was returned by allocate() and has been freed since.
  static bool is_freed(const void* p);

  std::uint64_t allocations() const { return allocations_.load(); }
  std::uint64_t frees() const { return frees_.load(); }
  std::uint64_t double_frees() const { return double_frees_.load(); }
  std::uint64_t live() const { return allocations() - frees(); }

 private:
  struct Prefix {
    std::atomic<std::uint32_t> state;
    std::uint32_t size;
    Prefix* next_quarantined;
  };
  static_assert(sizeof(Prefix) == 16);

  static Prefix* prefix_of(const void* p);

  std::atomic<Prefix*> quarantine_{nullptr};
  std::atomic<std::uint64_t> allocations_{0};
  std::atomic<std::uint64_t> frees_{0};
  std::atomic<std::uint64_t> double_frees_{0};
};

}  // namespace smr::verify
