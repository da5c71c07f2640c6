#pragma once

#include <atomic>
#include <cstdint>

// Every shared-memory access made by a reclamation scheme goes through
// Atomics<Hook>. Production code uses NoHook; the verification harness
// substitutes a hook that turns each access into a scheduling point.

#if defined(__x86_64__) && defined(__GCC_HAVE_SYNC_COMPARE_AND_SWAP_16)
#define SMR_HAS_DCAS 1
#else
#define SMR_HAS_DCAS 0
#endif

namespace smr {

using Word = std::uint64_t;
using AtomicWord = std::atomic<Word>;

struct NoHook {
  static void point() noexcept {}
};

struct PairValue {
  Word value = 0;
  Word tag = 0;

  friend bool operator==(const PairValue&, const PairValue&) = default;
};

// Value word followed by tag word; both are also accessed individually with
// single-word atomics, the pair as a whole with a double-width CAS.
struct alignas(16) WordPair {
  AtomicWord value{0};
  AtomicWord tag{0};
};

static_assert(sizeof(WordPair) == 16);
static_assert(sizeof(AtomicWord) == sizeof(Word));

template <class Hook>
struct Atomics {
  static Word load(const AtomicWord& w) {
    Hook::point();
    return w.load(std::memory_order_seq_cst);
  }

  static void store(AtomicWord& w, Word v) {
    Hook::point();
    w.store(v, std::memory_order_seq_cst);
  }

  static Word exchange(AtomicWord& w, Word v) {
    Hook::point();
    return w.exchange(v, std::memory_order_seq_cst);
  }

  // Two's-complement wrapping add; returns the previous value.
  static Word fetch_add(AtomicWord& w, Word delta) {
    Hook::point();
    return w.fetch_add(delta, std::memory_order_seq_cst);
  }

  static bool cas(AtomicWord& w, Word& expected, Word desired) {
    Hook::point();
    return w.compare_exchange_strong(expected, desired,
                                     std::memory_order_seq_cst);
  }

#if SMR_HAS_DCAS
  static PairValue load_pair(WordPair& p) {
    Hook::point();
    // cmpxchg16b with identical expected/desired is the only atomic 16-byte
    // read on x86-64.
    unsigned __int128 v = __sync_val_compare_and_swap(raw(p), 0, 0);
    return unpack(v);
  }

  static bool dcas(WordPair& p, PairValue& expected, PairValue desired) {
    Hook::point();
    const unsigned __int128 want = pack(expected);
    const unsigned __int128 prev =
        __sync_val_compare_and_swap(raw(p), want, pack(desired));
    if (prev == want) return true;
    expected = unpack(prev);
    return false;
  }

 private:
  static unsigned __int128* raw(WordPair& p) {
    return reinterpret_cast<unsigned __int128*>(&p);
  }
  static unsigned __int128 pack(PairValue v) {
    return (static_cast<unsigned __int128>(v.tag) << 64) | v.value;
  }
  static PairValue unpack(unsigned __int128 v) {
    return {static_cast<Word>(v), static_cast<Word>(v >> 64)};
  }
#endif
};

}  // namespace smr
