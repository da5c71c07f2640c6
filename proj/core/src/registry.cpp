#include "smr/registry.hpp"

#include <string>

#include "smr/config.hpp"

namespace smr {

Registry::Registry(int max_threads)
    : capacity_(max_threads), slots_(std::make_unique<Slot[]>(max_threads)) {
  if (max_threads < 1) throw ConfigError("max_threads must be >= 1");
}

int Registry::claim() {
  for (int i = 0; i < capacity_; ++i) {
    bool expected = false;
    if (slots_[i].occupied.compare_exchange_strong(expected, true)) {
      slots_[i].owner.store(std::this_thread::get_id());
      return i;
    }
  }
  throw CapacityError("thread registry full (max_threads=" +
                      std::to_string(capacity_) + ")");
}

void Registry::check_owner(int tid) const {
  if (tid < 0 || tid >= capacity_)
    throw UsageError("tid " + std::to_string(tid) + " out of range");
  if (!slots_[tid].occupied.load() ||
      slots_[tid].owner.load() != std::this_thread::get_id())
    throw UsageError("tid " + std::to_string(tid) +
                     " is not owned by the calling thread");
}

void Registry::release(int tid) {
  check_owner(tid);
  slots_[tid].owner.store(std::thread::id{});
  slots_[tid].occupied.store(false);
}

bool Registry::occupied(int tid) const {
  return tid >= 0 && tid < capacity_ && slots_[tid].occupied.load();
}

int Registry::live() const {
  int n = 0;
  for (int i = 0; i < capacity_; ++i) n += slots_[i].occupied.load() ? 1 : 0;
  return n;
}

}  // namespace smr
