#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "smr/atomics.hpp"

namespace smr::ds {

// Live nodes carry this word; the quarantining allocator overwrites freed
// blocks, so a read through a dangling link sees something else.
inline constexpr std::uint64_t kLiveCanary = 0x5AFE5AFE5AFE5AFEull;

class AccessViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optional debug hook for the data structures. Tracks, per thread, which
// nodes the current operation obtained through protect() and rejects any
// dereference of another node or of a node whose canary is gone. Each
// rejection is recorded and the operation is aborted with AccessViolation.
class AccessChecker {
 public:
  // cumulative: every protect() in an operation stays valid until leave()
  // (EBR, Hyaline). Otherwise a protect() replaces its index's previous one.
  AccessChecker(int max_threads, int max_idx, bool cumulative);

  void on_protect(int tid, int index, Word link);
  void on_leave(int tid);
  // Also accepts nodes the calling thread allocated in this operation.
  void on_own(int tid, const void* node);
  void on_deref(int tid, const void* node, std::uint64_t canary);

  std::uint64_t violations() const { return violations_.load(); }
  std::uint64_t poison_reads() const { return poison_reads_.load(); }
  std::uint64_t unprotected_reads() const { return unprotected_reads_.load(); }
  std::uint64_t index_overflows() const { return index_overflows_.load(); }
  std::vector<std::string> messages() const;

 private:
  struct alignas(64) PerThread {
    std::vector<Word> indexed;
    std::vector<Word> cumulative;
  };

  [[noreturn]] void fail(std::string msg);

  int max_idx_;
  bool cumulative_;
  std::unique_ptr<PerThread[]> threads_;
  std::atomic<std::uint64_t> violations_{0};
  std::atomic<std::uint64_t> poison_reads_{0};
  std::atomic<std::uint64_t> unprotected_reads_{0};
  std::atomic<std::uint64_t> index_overflows_{0};
  mutable std::mutex mu_;
  std::vector<std::string> messages_;
};

// Ends the checker's view of an operation, also when it unwinds.
class CheckScope {
 public:
  CheckScope(AccessChecker* checker, int tid) : checker_(checker), tid_(tid) {}
  ~CheckScope() {
    if (checker_) checker_->on_leave(tid_);
  }
  CheckScope(const CheckScope&) = delete;
  CheckScope& operator=(const CheckScope&) = delete;

 private:
  AccessChecker* checker_;
  int tid_;
};

}  // namespace smr::ds
