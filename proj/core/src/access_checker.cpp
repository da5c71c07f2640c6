#include "smr/ds/access_checker.hpp"

#include <algorithm>
#include <cstdio>

#include "smr/node.hpp"

namespace smr::ds {

AccessChecker::AccessChecker(int max_threads, int max_idx, bool cumulative)
    : max_idx_(max_idx),
      cumulative_(cumulative),
      threads_(std::make_unique<PerThread[]>(max_threads)) {
  for (int t = 0; t < max_threads; ++t) threads_[t].indexed.assign(max_idx, 0);
}

void AccessChecker::on_protect(int tid, int index, Word link) {
  PerThread& p = threads_[tid];
  if (index < 0 || index >= max_idx_) {
    index_overflows_.fetch_add(1);
    fail("reservation index " + std::to_string(index) + " exceeds max_idx");
  }
  const Word addr = link & kLinkAddressMask;
  if (cumulative_) p.cumulative.push_back(addr);
  else p.indexed[index] = addr;
}

void AccessChecker::on_own(int tid, const void* node) {
  threads_[tid].cumulative.push_back(reinterpret_cast<Word>(node));
}

void AccessChecker::on_leave(int tid) {
  PerThread& p = threads_[tid];
  std::fill(p.indexed.begin(), p.indexed.end(), 0);
  p.cumulative.clear();
}

void AccessChecker::on_deref(int tid, const void* node, std::uint64_t canary) {
  const PerThread& p = threads_[tid];
  const Word addr = reinterpret_cast<Word>(node);
  const bool held = std::find(p.indexed.begin(), p.indexed.end(), addr) != p.indexed.end() ||
                    std::find(p.cumulative.begin(), p.cumulative.end(), addr) != p.cumulative.end();
  char buf[128];
  if (!held) {
    unprotected_reads_.fetch_add(1);
    std::snprintf(buf, sizeof(buf), "thread %d dereferenced unprotected node %p", tid, node);
    fail(buf);
  }
  if (canary != kLiveCanary) {
    poison_reads_.fetch_add(1);
    std::snprintf(buf, sizeof(buf), "thread %d read freed node %p (canary 0x%016llx)", tid,
                  node, static_cast<unsigned long long>(canary));
    fail(buf);
  }
}

std::vector<std::string> AccessChecker::messages() const {
  std::lock_guard lock(mu_);
  return messages_;
}

void AccessChecker::fail(std::string msg) {
  violations_.fetch_add(1);
  {
    std::lock_guard lock(mu_);
    if (messages_.size() < 64) messages_.push_back(msg);
  }
  throw AccessViolation(msg);
}

}  // namespace smr::ds
