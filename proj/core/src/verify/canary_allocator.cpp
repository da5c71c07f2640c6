#include "smr/verify/canary_allocator.hpp"

#include <cstdlib>
#include <cstring>
#include <new>

namespace smr::verify {

namespace {
constexpr std::uint32_t kLive = 0x11FE11FE;
constexpr std::uint32_t kFreed = 0xDEADDEAD;
}  // namespace

CanaryAllocator::Prefix* CanaryAllocator::prefix_of(const void* p) {
  return reinterpret_cast<Prefix*>(const_cast<char*>(static_cast<const char*>(p)) - sizeof(Prefix));
}

CanaryAllocator::~CanaryAllocator() {
  Prefix* q = quarantine_.load();
  while (q != nullptr) {
    Prefix* next = q->next_quarantined;
    q->state.~atomic();
    std::free(q);
    q = next;
  }
}

void* CanaryAllocator::allocate(std::size_t bytes) {
  const std::size_t body = (bytes + 15) & ~std::size_t{15};
  void* raw = std::aligned_alloc(16, sizeof(Prefix) + body);
  if (raw == nullptr) throw std::bad_alloc();
  auto* pre = ::new (raw) Prefix{{kLive}, static_cast<std::uint32_t>(body), nullptr};
  allocations_.fetch_add(1, std::memory_order_relaxed);
  return reinterpret_cast<char*>(pre) + sizeof(Prefix);
}

void CanaryAllocator::deallocate(void* p) noexcept {
  if (p == nullptr) return;
  Prefix* pre = prefix_of(p);
  if (pre->state.exchange(kFreed) != kLive) {
    double_frees_.fetch_add(1);
    return;
  }
  std::memset(p, kPoisonByte, pre->size);
  frees_.fetch_add(1, std::memory_order_relaxed);
  Prefix* head = quarantine_.load(std::memory_order_relaxed);
  do {
    pre->next_quarantined = head;
  } while (!quarantine_.compare_exchange_weak(head, pre));
}

bool CanaryAllocator::is_freed(const void* p) {
  return prefix_of(p)->state.load() == kFreed;
}

}  // namespace smr::verify
