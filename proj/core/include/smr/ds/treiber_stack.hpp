#pragma once

#include <cstdint>
#include <optional>

#include "smr/ds/access_checker.hpp"
#include "smr/node.hpp"
#include "smr/reclaimer.hpp"

namespace smr::ds {

// Lock-free LIFO stack. pop() protects the top at index 0; the top link is
// a root location, so it has no parent.
template <class Smr>
class TreiberStack {
 public:
  using A = typename Smr::A;

  struct StackNode : Node {
    explicit StackNode(std::uint64_t v) : value(v) {}
    Link next{0};
    AtomicWord canary{kLiveCanary};
    std::uint64_t value;
  };

  explicit TreiberStack(Smr& smr, AccessChecker* checker = nullptr)
      : smr_(smr), checker_(checker) {}

  TreiberStack(const TreiberStack&) = delete;
  TreiberStack& operator=(const TreiberStack&) = delete;

  // Not thread-safe; nodes still linked were never retired.
  ~TreiberStack() {
    Word w = top_.load();
    while (w != 0) {
      auto* n = reinterpret_cast<StackNode*>(w);
      w = n->next.load();
      smr_.dispose(n);
    }
  }

  void push(int tid, std::uint64_t value) {
    OpGuard guard(smr_, tid);
    CheckScope scope(checker_, tid);
    auto* n = make_node<StackNode>(smr_, tid, value);
    Word t = A::load(top_);
    do {
      A::store(n->next, t);
    } while (!A::cas(top_, t, to_word(n)));
  }

  std::optional<std::uint64_t> pop(int tid) {
    OpGuard guard(smr_, tid);
    CheckScope scope(checker_, tid);
    std::optional<std::uint64_t> out;
    while (true) {
      const Word t = smr_.protect(tid, top_, 0, nullptr);
      if (checker_) checker_->on_protect(tid, 0, t);
      if (t == 0) break;
      auto* n = reinterpret_cast<StackNode*>(t);
      if (checker_) checker_->on_deref(tid, n, A::load(n->canary));
      const Word next = A::load(n->next);
      Word expected = t;
      if (A::cas(top_, expected, next)) {
        out = n->value;
        smr_.retire(tid, n);
        break;
      }
    }
    return out;
  }

  bool empty() const { return top_.load() == 0; }

  // Not thread-safe.
  std::uint64_t size() const {
    std::uint64_t n = 0;
    for (Word w = top_.load(); w != 0; w = reinterpret_cast<StackNode*>(w)->next.load()) ++n;
    return n;
  }

  Link& top_link() { return top_; }

 private:
  Smr& smr_;
  AccessChecker* checker_;
  alignas(64) Link top_{0};
};

}  // namespace smr::ds
