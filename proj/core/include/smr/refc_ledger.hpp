#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "smr/atomics.hpp"

namespace smr {

// Shadow copy of every batch reference counter. Each addend applied to a
// REFS node is mirrored here; free_batch() closes the entry and the mirror
// must read exactly zero at that point. A second close of the same batch is
// reported as a double free.
class RefcLedger {
 public:
  void open(const void* refs, Word initial);
  void add(const void* refs, Word delta);
  void close(const void* refs);
  // Forget a batch that is dropped without ever being published.
  void discard(const void* refs);

  std::uint64_t violations() const { return violations_.load(); }
  std::size_t open_batches() const;
  std::vector<std::string> messages() const;

 private:
  static constexpr std::size_t kShards = 64;

  struct Shard {
    mutable std::mutex mu;
    std::unordered_map<const void*, Word> sums;
  };

  Shard& shard(const void* p);
  void report(std::string msg);

  std::array<Shard, kShards> shards_;
  std::atomic<std::uint64_t> violations_{0};
  mutable std::mutex msg_mu_;
  std::vector<std::string> messages_;
};

}  // namespace smr
