#pragma once

#include <cstdint>
#include <optional>

#include "smr/ds/access_checker.hpp"
#include "smr/node.hpp"
#include "smr/reclaimer.hpp"

namespace smr::ds {

// Harris-Michael sorted list operations over a chain rooted at a Link.
// Deletion marks bit 0 of the victim's next link, then unlinks it; every
// traversal unlinks marked nodes it meets, and the thread whose CAS unlinks
// a node retires it.
//
// A traversal holds three reservations (prev, curr, next) and rotates the
// indices as it advances, so each protect() reuses the index whose node is
// no longer needed.
template <class Smr>
class MichaelList {
 public:
  using A = typename Smr::A;
  static constexpr Word kMark = 1;
  static constexpr int kIndices = 3;

  struct ListNode : Node {
    ListNode(std::uint64_t k, std::uint64_t v) : key(k), value(v) {}
    Link next{0};
    AtomicWord canary{kLiveCanary};
    std::uint64_t key;
    std::uint64_t value;
  };

  MichaelList(Smr& smr, AccessChecker* checker) : smr_(smr), checker_(checker) {}

  // Inserts if absent. Returns false if key was present.
  bool insert(int tid, Link& head, std::uint64_t key, std::uint64_t value) {
    OpGuard guard(smr_, tid);
    CheckScope scope(checker_, tid);
    ListNode* n = nullptr;
    while (true) {
      Cursor c;
      if (find(tid, head, key, c)) {
        if (n) smr_.dispose(n);
        return false;
      }
      if (!n) n = fresh(tid, key, value);
      A::store(n->next, c.curr);
      Word expected = c.curr;
      if (A::cas(*c.prev, expected, to_word(n))) return true;
    }
  }

  // Inserts or replaces. Returns true if key was absent. A replaced node is
  // marked with its replacement as successor, so removal of the old and
  // insertion of the new happen in one CAS.
  bool put(int tid, Link& head, std::uint64_t key, std::uint64_t value) {
    OpGuard guard(smr_, tid);
    CheckScope scope(checker_, tid);
    ListNode* n = nullptr;
    while (true) {
      Cursor c;
      const bool found = find(tid, head, key, c);
      if (!n) n = fresh(tid, key, value);
      if (!found) {
        A::store(n->next, c.curr);
        Word expected = c.curr;
        if (A::cas(*c.prev, expected, to_word(n))) return true;
        continue;
      }
      ListNode* cn = as_node(c.curr);
      A::store(n->next, c.next);
      Word expected = c.next;
      if (!A::cas(cn->next, expected, to_word(n) | kMark)) continue;
      unlink_or_help(tid, head, key, c, cn, to_word(n));
      return false;
    }
  }

  std::optional<std::uint64_t> remove(int tid, Link& head, std::uint64_t key) {
    OpGuard guard(smr_, tid);
    CheckScope scope(checker_, tid);
    while (true) {
      Cursor c;
      if (!find(tid, head, key, c)) return std::nullopt;
      ListNode* cn = as_node(c.curr);
      Word expected = c.next;
      if (!A::cas(cn->next, expected, c.next | kMark)) continue;
      const std::uint64_t v = cn->value;
      unlink_or_help(tid, head, key, c, cn, c.next);
      return v;
    }
  }

  std::optional<std::uint64_t> get(int tid, Link& head, std::uint64_t key) {
    OpGuard guard(smr_, tid);
    CheckScope scope(checker_, tid);
    Cursor c;
    if (!find(tid, head, key, c)) return std::nullopt;
    return as_node(c.curr)->value;
  }

  // Not thread-safe: releases every node still linked from head.
  void destroy(Link& head) {
    Word w = head.load() & ~kMark;
    while (w != 0) {
      ListNode* n = as_node(w);
      w = n->next.load() & ~kMark;
      smr_.dispose(n);
    }
    head.store(0);
  }

 private:
  struct Cursor {
    Link* prev = nullptr;
    Word curr = 0;
    Word next = 0;
  };

  static ListNode* as_node(Word w) { return reinterpret_cast<ListNode*>(w & ~kMark); }

  ListNode* fresh(int tid, std::uint64_t key, std::uint64_t value) {
    auto* n = make_node<ListNode>(smr_, tid, key, value);
    if (checker_) checker_->on_own(tid, n);
    return n;
  }

  Word protect(int tid, const Link& src, int index, Node* parent) {
    const Word w = smr_.protect(tid, src, index, parent);
    if (checker_) checker_->on_protect(tid, index, w);
    return w;
  }

  void check(int tid, const ListNode* n) {
    if (checker_) checker_->on_deref(tid, n, A::load(n->canary));
  }

  // cn is marked; swing prev past it to succ or let a traversal do it.
  void unlink_or_help(int tid, Link& head, std::uint64_t key, Cursor& c, ListNode* cn,
                      Word succ) {
    Word expected = c.curr;
    if (A::cas(*c.prev, expected, succ)) smr_.retire(tid, cn);
    else find(tid, head, key, c);
  }

  // Positions c at the first unmarked node with key >= key. On return
  // *c.prev held c.curr (unmarked) and c.curr's next was c.next.
  bool find(int tid, Link& head, std::uint64_t key, Cursor& c) {
  retry:
    int ip = 0, ic = 1, in = 2;
    c.prev = &head;
    c.curr = protect(tid, head, ic, nullptr);
    while (true) {
      if (c.curr == 0) return false;
      ListNode* cn = as_node(c.curr);
      check(tid, cn);
      c.next = protect(tid, cn->next, in, cn);
      if (A::load(*c.prev) != c.curr) goto retry;
      if ((c.next & kMark) == 0) {
        const std::uint64_t ck = cn->key;
        if (ck >= key) return ck == key;
        c.prev = &cn->next;
        const int old_ip = ip;
        ip = ic;
        ic = in;
        in = old_ip;
      } else {
        Word expected = c.curr;
        if (!A::cas(*c.prev, expected, c.next & ~kMark)) goto retry;
        smr_.retire(tid, cn);
        const int old_ic = ic;
        ic = in;
        in = old_ic;
      }
      c.curr = c.next & ~kMark;
    }
  }

  Smr& smr_;
  AccessChecker* checker_;
};

}  // namespace smr::ds
