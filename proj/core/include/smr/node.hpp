#pragma once

#include <cstddef>
#include <cstdint>

#include "smr/atomics.hpp"

namespace smr {

// Reclamation header embedded at offset 0 of every reclaimable object.
// The three words change meaning as the node moves from "allocated" to
// "REFS" (the batch's counter holder) or "SLOT" (one per reservation list).
struct Node {
  // REFS: batch reference counter. SLOT: next node in the batch.
  AtomicWord refc_bnext{0};
  // Allocated: birth era. REFS: minimum birth era of the batch.
  // SLOT: target reservation while retiring, then next node in that list.
  AtomicWord birth_next{0};
  // REFS: first SLOT node (bit 0 set in the wait-free scheme).
  // SLOT: the REFS node. Zero means "not retired".
  AtomicWord blink{0};
};

static_assert(sizeof(Node) == 3 * sizeof(void*),
              "node header must be exactly three machine words");
static_assert(alignof(Node) >= 2, "bit 0 of node addresses is reserved");

// Cleared reservations and tainted links; never a real address.
inline constexpr Word kInvalid = ~Word{0};

inline constexpr Word kRefcProtect = Word{1} << 63;
inline constexpr Word kRefcProtectHandover = Word{1} << 62;

// Data structures may keep flag bits in the low bits of their links.
inline constexpr Word kLinkAddressMask = ~Word{7};

inline Word to_word(const Node* n) { return reinterpret_cast<Word>(n); }
inline Node* to_node(Word w) { return reinterpret_cast<Node*>(w); }
inline Node* link_target(Word link) { return to_node(link & kLinkAddressMask); }

// REFS links: bit 0 marks a reference to a REFS node.
inline constexpr bool is_rnode(Word w) { return (w & 1) != 0; }
inline constexpr Word rnode(Word w) { return w ^ 1; }

using Link = AtomicWord;

// Batch of retired nodes owned by one thread until it is published.
struct Batch {
  Node* first = nullptr;
  Node* refs = nullptr;
  std::uint64_t counter = 0;

  bool empty() const { return first == nullptr; }
};

}  // namespace smr
