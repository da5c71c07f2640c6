#pragma once

#include <bit>
#include <cstddef>
#include <memory>

#include "smr/ds/michael_list.hpp"

namespace smr::ds {

// Fixed power-of-two array of Harris-Michael buckets.
template <class Smr>
class HashMap {
 public:
  using Ops = MichaelList<Smr>;
  static constexpr int kIndices = Ops::kIndices;

  // bucket_count is rounded up to a power of two.
  HashMap(Smr& smr, std::size_t bucket_count, AccessChecker* checker = nullptr)
      : ops_(smr, checker),
        bits_(std::countr_zero(std::bit_ceil(bucket_count < 1 ? std::size_t{1} : bucket_count))),
        buckets_(std::make_unique<Link[]>(std::size_t{1} << bits_)) {}

  HashMap(const HashMap&) = delete;
  HashMap& operator=(const HashMap&) = delete;

  ~HashMap() {
    for (std::size_t i = 0; i < bucket_count(); ++i) ops_.destroy(buckets_[i]);
  }

  std::size_t bucket_count() const { return std::size_t{1} << bits_; }

  bool insert(int tid, std::uint64_t key, std::uint64_t value) {
    return ops_.insert(tid, bucket(key), key, value);
  }
  bool put(int tid, std::uint64_t key, std::uint64_t value) {
    return ops_.put(tid, bucket(key), key, value);
  }
  std::optional<std::uint64_t> remove(int tid, std::uint64_t key) {
    return ops_.remove(tid, bucket(key), key);
  }
  std::optional<std::uint64_t> get(int tid, std::uint64_t key) {
    return ops_.get(tid, bucket(key), key);
  }

  // Not thread-safe.
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < bucket_count(); ++i) {
      for (Word w = buckets_[i].load() & ~Word{1}; w != 0;) {
        auto* n = reinterpret_cast<typename Ops::ListNode*>(w);
        const Word next = n->next.load();
        if ((next & 1) == 0) f(n->key, n->value);
        w = next & ~Word{1};
      }
    }
  }

 private:
  Link& bucket(std::uint64_t key) {
    if (bits_ == 0) return buckets_[0];
    return buckets_[(key * 0x9E3779B97F4A7C15ull) >> (64 - bits_)];
  }

  Ops ops_;
  int bits_;
  std::unique_ptr<Link[]> buckets_;
};

}  // namespace smr::ds
