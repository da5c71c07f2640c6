#pragma once

#include "smr/ds/michael_list.hpp"

namespace smr::ds {

// Set/map of 64-bit keys kept as one Harris-Michael list.
template <class Smr>
class SortedList {
 public:
  using Ops = MichaelList<Smr>;
  static constexpr int kIndices = Ops::kIndices;

  explicit SortedList(Smr& smr, AccessChecker* checker = nullptr) : ops_(smr, checker) {}
  SortedList(const SortedList&) = delete;
  SortedList& operator=(const SortedList&) = delete;
  ~SortedList() { ops_.destroy(head_); }

  bool insert(int tid, std::uint64_t key, std::uint64_t value) {
    return ops_.insert(tid, head_, key, value);
  }
  bool put(int tid, std::uint64_t key, std::uint64_t value) {
    return ops_.put(tid, head_, key, value);
  }
  std::optional<std::uint64_t> remove(int tid, std::uint64_t key) {
    return ops_.remove(tid, head_, key);
  }
  std::optional<std::uint64_t> get(int tid, std::uint64_t key) { return ops_.get(tid, head_, key); }

  // Not thread-safe.
  template <class F>
  void for_each(F&& f) const {
    for (Word w = head_.load() & ~Word{1}; w != 0;) {
      auto* n = reinterpret_cast<typename Ops::ListNode*>(w);
      const Word next = n->next.load();
      if ((next & 1) == 0) f(n->key, n->value);
      w = next & ~Word{1};
    }
  }

 private:
  Ops ops_;
  alignas(64) Link head_{0};
};

}  // namespace smr::ds
