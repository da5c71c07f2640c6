#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "smr/ds/kind.hpp"

namespace smr::verify {

enum class OpKind : std::uint8_t { kPush, kPop, kInsert, kRemove, kGet, kPut };

// One completed operation. invoke and response are tickets from a shared
// counter taken right before and right after the call, so a response
// ticket smaller than another operation's invoke ticket means the first
// really finished before the second started. result is -1 for "nothing"
// (empty pop, missing key) and 0/1 for the boolean operations.
struct HistoryOp {
  int thread = 0;
  OpKind kind = OpKind::kGet;
  std::uint64_t key = 0;
  std::uint64_t value = 0;
  std::int64_t result = -1;
  std::uint64_t invoke = 0;
  std::uint64_t response = 0;
};

std::string describe(const HistoryOp& op);

struct LinearizabilityResult {
  bool ok = true;
  std::uint64_t states_explored = 0;
  std::string failure;  // first non-linearizable key or sub-history
};

// Checks a whole stack history against a sequential LIFO stack.
LinearizabilityResult check_stack_history(const std::vector<HistoryOp>& history);

// Checks a map history one key at a time against a sequential map; each
// key's operations are independent, so the history is linearizable iff
// every per-key sub-history is.
LinearizabilityResult check_map_history(const std::vector<HistoryOp>& history);

struct HistoryOptions {
  ds::DsKind ds = ds::DsKind::kHashMap;
  int threads = 4;
  int ops_per_thread = 250;
  std::uint64_t seed = 1;
  // Small so that operations on the same key overlap often.
  std::uint64_t key_range = 8;
};

// Records a concurrent history on a Crystalline-W backed structure.
std::vector<HistoryOp> record_history(const HistoryOptions& options);

}  // namespace smr::verify
