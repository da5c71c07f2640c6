#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <new>
#include <thread>

#include "smr/allocator.hpp"
#include "smr/config.hpp"

namespace smr {

int default_max_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

void Config::validate() const {
  if (max_threads < 1) throw ConfigError("max_threads must be >= 1");
  if (max_idx < 1) throw ConfigError("max_idx must be >= 1");
  if (epoch_freq < 1) throw ConfigError("epoch_freq must be >= 1");
  if (retire_freq < 1) throw ConfigError("retire_freq must be >= 1");
  if (max_tries < 2) throw ConfigError("max_tries must be >= 2");
}

namespace {

void default_contract_handler(const char* what) {
  std::fprintf(stderr, "smr: contract violation: %s\n", what);
  std::abort();
}

std::atomic<ContractHandler> g_handler{&default_contract_handler};

}  // namespace

ContractHandler set_contract_handler(ContractHandler handler) {
  return g_handler.exchange(handler ? handler : &default_contract_handler);
}

void contract_violation(const char* what) { g_handler.load()(what); }

void* MallocAllocator::allocate(std::size_t bytes) {
  const std::size_t rounded = (bytes + 15) & ~std::size_t{15};
  void* p = std::aligned_alloc(16, rounded);
  if (p == nullptr) throw std::bad_alloc();
  return p;
}

void MallocAllocator::deallocate(void* p) noexcept { std::free(p); }

NodeAllocator& default_allocator() {
  static MallocAllocator instance;
  return instance;
}

}  // namespace smr
