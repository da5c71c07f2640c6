#include "smr/refc_ledger.hpp"

#include <cstdio>
#include <functional>

namespace smr {

namespace {

std::string describe(const char* what, const void* refs, Word value) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s: batch %p shadow refc 0x%016llx", what,
                refs, static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace

RefcLedger::Shard& RefcLedger::shard(const void* p) {
  return shards_[(std::hash<const void*>{}(p) >> 4) % kShards];
}

void RefcLedger::open(const void* refs, Word initial) {
  Shard& s = shard(refs);
  std::lock_guard lock(s.mu);
  auto [it, inserted] = s.sums.try_emplace(refs, initial);
  if (!inserted) {
    // A REFS node is reused only after free_batch closed it.
    report(describe("reopened live batch", refs, it->second));
    it->second = initial;
  }
}

void RefcLedger::add(const void* refs, Word delta) {
  Shard& s = shard(refs);
  std::lock_guard lock(s.mu);
  auto it = s.sums.find(refs);
  if (it == s.sums.end()) {
    report(describe("addend applied to unknown or freed batch", refs, delta));
    return;
  }
  it->second += delta;
}

void RefcLedger::close(const void* refs) {
  Shard& s = shard(refs);
  std::lock_guard lock(s.mu);
  auto it = s.sums.find(refs);
  if (it == s.sums.end()) {
    report(describe("free_batch on unknown or already freed batch", refs, 0));
    return;
  }
  if (it->second != 0) report(describe("free_batch with nonzero", refs, it->second));
  s.sums.erase(it);
}

void RefcLedger::discard(const void* refs) {
  Shard& s = shard(refs);
  std::lock_guard lock(s.mu);
  s.sums.erase(refs);
}

std::size_t RefcLedger::open_batches() const {
  std::size_t n = 0;
  for (const Shard& s : shards_) {
    std::lock_guard lock(s.mu);
    n += s.sums.size();
  }
  return n;
}

std::vector<std::string> RefcLedger::messages() const {
  std::lock_guard lock(msg_mu_);
  return messages_;
}

void RefcLedger::report(std::string msg) {
  violations_.fetch_add(1);
  std::lock_guard lock(msg_mu_);
  if (messages_.size() < 64) messages_.push_back(std::move(msg));
}

}  // namespace smr
