#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smr/ds/kind.hpp"
#include "smr/reclaim_core.hpp"
#include "smr/scheme.hpp"

namespace smr::verify {

struct CanaryStressOptions {
  SchemeKind scheme = SchemeKind::kCrystallineW;
  ds::DsKind ds = ds::DsKind::kHashMap;
  int threads = 4;
  // Total operations across all threads.
  std::uint64_t ops = 100000;
  std::uint64_t seed = 1;
  // 0 picks a small range that keeps structures contended.
  std::uint64_t key_range = 0;
  // Small frequencies push nodes through retirement quickly; max_tries = 2
  // sends every protect() on a freshly opened index down the slow path.
  std::uint64_t epoch_freq = 4;
  std::uint64_t retire_freq = 4;
  int max_tries = 2;
  // Use the deliberately broken scheme that frees on retire.
  bool broken = false;
};

struct CanaryStressReport {
  std::uint64_t ops_done = 0;
  std::uint64_t poison_reads = 0;
  std::uint64_t unprotected_reads = 0;
  std::uint64_t double_frees = 0;
  std::uint64_t refc_violations = 0;
  std::uint64_t open_batches = 0;
  std::uint64_t allocations = 0;
  std::uint64_t frees = 0;
  std::uint64_t other_errors = 0;
  LoopStats stats;
  std::vector<std::string> messages;

  bool pass() const;
  std::string summary() const;
};

CanaryStressReport run_canary_stress(const CanaryStressOptions& options);

struct StallOptions {
  SchemeKind scheme = SchemeKind::kCrystallineL;
  int max_threads = 4;
  int max_idx = 2;
  std::uint64_t retire_freq = 8;
  std::uint64_t epoch_freq = 8;
  // Operations in the first phase; the second phase doubles the total.
  std::uint64_t ops = 100000;
  std::uint64_t seed = 1;
  // Pops are forced at this depth so live nodes stay few and every retired
  // node is recent.
  std::uint64_t max_depth = 16;
};

struct StallReport {
  std::int64_t peak_at_n = 0;
  std::int64_t peak_at_2n = 0;
  std::uint64_t ops_done = 0;
  LoopStats stats;

  double growth() const {
    return peak_at_n == 0 ? 0.0 : static_cast<double>(peak_at_2n) / static_cast<double>(peak_at_n);
  }
};

// One thread protects the stack top and then parks inside its operation
// until the others have finished; max_threads - 1 workers push and pop.
StallReport run_stall(const StallOptions& options);

// Worst-case unreclaimed nodes for the fully bounded schemes, or -1.
std::int64_t memory_bound(SchemeKind scheme, const Config& cfg);

}  // namespace smr::verify
