#pragma once

#include "smr/atomics.hpp"

#if SMR_HAS_DCAS

#include <memory>

#include "smr/reclaim_core.hpp"
#include "smr/reclaimer.hpp"

namespace smr {

// Crystalline-W: wait-free, fully memory bounded.
//
// Extends Crystalline-L with:
//  * tagged reservations; a slow-path cycle moves both tags tag -> tag+1
//    (odd, retirers skip the slot) -> tag+2;
//  * try_retire() attaching by unconditional exchange, with traversal
//    "tainting" each visited next link so a retirer can tell whether the
//    owner already walked past its node;
//  * a fast-path/slow-path protect(): after max_tries failed attempts the
//    thread advertises its request and any thread bumping the era helps it;
//  * REFS-terminal list ends (bit 0 set) used when the helped result is
//    already retired, and a hand-over board for retired parents;
//  * a per-index pin through which the publishing helper passes one batch
//    reference to the owner when the result was retired while the owner's
//    tags were odd and retirers skipped the slot. The owner drops it the
//    next time it reprotects or clears that index.
//
// Each thread has max_idx + 2 reservations; the last two belong to
// help_thread().
template <class Hook = NoHook>
class CrystallineW {
 public:
  using A = Atomics<Hook>;
  static constexpr const char* kName = "crystalline-w";

  struct alignas(32) Reservation {
    // Initially inactive; an owner opens an index through update_era().
    Reservation() { list.value.store(kInvalid, std::memory_order_relaxed); }
    WordPair list;
    WordPair era;
  };

  struct alignas(16) State {
    // Input {INVALID, tag} while help is requested; output {link, era}.
    WordPair result;
    AtomicWord era{0};
    AtomicWord parent{0};
    AtomicWord obj{0};
    // {refs, cycle tag}: one batch reference a helper handed over because
    // the result was retired while the slot's tags were odd.
    WordPair pin;
  };

  explicit CrystallineW(Config cfg = {}, NodeAllocator* alloc = nullptr,
                        RefcLedger* ledger = nullptr)
      : core_(cfg, alloc, ledger),
        ridx_(cfg.max_idx + 2),
        rsrv_(std::make_unique<Reservation[]>(static_cast<std::size_t>(cfg.max_threads) * ridx_)),
        state_(std::make_unique<State[]>(static_cast<std::size_t>(cfg.max_threads) * cfg.max_idx)),
        parents_(std::make_unique<Padded[]>(cfg.max_threads)) {}

  CrystallineW(const CrystallineW&) = delete;
  CrystallineW& operator=(const CrystallineW&) = delete;

  ~CrystallineW() {
    const Config& cfg = core_.config();
    for (int i = 0; i < cfg.max_threads; ++i) {
      for (int j = 0; j < cfg.max_idx; ++j) drop_pin(i, j);
    }
  }

  int register_thread() { return core_.register_thread(); }

  void unregister_thread(int tid) {
    core_.registry().check_owner(tid);
    leave(tid);
    core_.release_thread(tid);
  }

  void enter(int /*tid*/) {}

  // As in Crystalline-L, a cleared index gets era 0 so that it is reopened
  // before anything is returned from it.
  void leave(int tid) {
    for (int i = 0; i < core_.config().max_idx; ++i) {
      Reservation& r = slot(tid, i);
      const Word p = A::exchange(r.list.value, kInvalid);
      A::store(r.era.value, 0);
      if (p != kInvalid) traverse(tid, p);
      drop_pin(tid, i);
    }
  }

  // parent is the node holding src, or null for a root location. It must
  // stay protected by the caller for the duration of the call.
  Word protect(int tid, const Link& src, int index, Node* parent = nullptr) {
    SMR_CONTRACT(index >= 0 && index < core_.config().max_idx,
                 "reservation index out of range");
    int tries = core_.config().max_tries;
    Word prev = A::load(slot(tid, index).era.value);
    std::uint64_t iters = 0;
    while (--tries != 0) {
      ++iters;
      const Word ptr = A::load(src);
      const Word era = core_.era();
      if (prev == era) {
        raise_max(core_.local(tid).stats.protect_max, iters);
        return ptr;
      }
      prev = update_era(tid, era, index);
    }
    raise_max(core_.local(tid).stats.protect_max, iters);
    return slow_path(tid, src, index, parent);
  }

  void* allocate_block(int tid, std::size_t bytes) {
    if (core_.alloc_tick(tid)) increment_era(tid);
    return core_.allocate(bytes);
  }

  void stamp(Node* node) {
    node->refc_bnext.store(0, std::memory_order_relaxed);
    node->birth_next.store(core_.era(), std::memory_order_relaxed);
    // Non-zero blink marks a node that is being retired.
    node->blink.store(0, std::memory_order_seq_cst);
  }

  Node* alloc_node(int tid, std::size_t bytes = sizeof(Node)) {
    SMR_CONTRACT(bytes >= sizeof(Node), "allocation smaller than the node header");
    Node* n = ::new (allocate_block(tid, bytes)) Node;
    stamp(n);
    return n;
  }

  void retire(int tid, Node* node) {
    core_.batch_add(tid, node, true);
    Batch& b = core_.local(tid).batch;
    if (b.counter < 2 || (b.counter - 1) % core_.config().retire_freq != 0) return;
    A::store(b.refs->blink, rnode(to_word(b.first)));
    try_retire(tid);
  }

  void dispose(Node* node) { core_.deallocate(node); }

  const Config& config() const { return core_.config(); }
  std::int64_t unreclaimed() const { return core_.unreclaimed(); }
  std::int64_t peak_unreclaimed() const { return core_.peak_unreclaimed(); }
  LoopStats stats(int tid) const { return core_.stats(tid); }
  LoopStats merged_stats() const { return core_.merged_stats(); }

  // --- introspection and building blocks, public for tests -----------------
  ReclaimCore<Hook>& core() { return core_; }
  const Batch& batch(int tid) const { return core_.local(tid).batch; }
  Word global_era() { return core_.era(); }
  Reservation& slot(int tid, int index) {
    return rsrv_[static_cast<std::size_t>(tid) * ridx_ + index];
  }
  State& state(int tid, int index) {
    return state_[static_cast<std::size_t>(tid) * core_.config().max_idx + index];
  }
  AtomicWord& parent_board(int tid) { return parents_[tid].w; }
  AtomicWord& slow_counter() { return slow_counter_; }

  Word update_era(int tid, Word curr_era, int index) {
    Reservation& r = slot(tid, index);
    if (A::load(r.list.value) != 0) {
      const Word list = A::exchange(r.list.value, 0);
      if (list != kInvalid) traverse(tid, list);
      curr_era = core_.era();
    }
    A::store(r.era.value, curr_era);
    if (index < core_.config().max_idx) drop_pin(tid, index);
    return curr_era;
  }

  // Walks a detached list, tainting every next link on the way. A REFS
  // link (bit 0) only ever ends a list.
  void traverse(int tid, Word next) {
    std::uint64_t len = 0;
    while (next != 0) {
      SMR_CONTRACT(next != kInvalid, "traversal reached a tainted link");
      ++len;
      if (is_rnode(next)) {
        Node* refs = to_node(rnode(next));
        if (core_.refc_add(refs, ~Word{0}) == 1) core_.free_batch(refs);
        break;
      }
      Node* curr = to_node(next);
      next = A::exchange(curr->birth_next, kInvalid);
      Node* refs = to_node(A::load(curr->blink));
      if (core_.refc_add(refs, ~Word{0}) == 1) core_.free_batch(refs);
    }
    raise_max(core_.local(tid).stats.traverse_max, len);
  }

  // Bumps the global era, first completing every advertised slow path.
  void increment_era(int tid) {
    const Config& cfg = core_.config();
    if (A::load(slow_counter_) != 0) {
      for (int i = 0; i < cfg.max_threads; ++i) {
        for (int j = 0; j < cfg.max_idx; ++j) {
          if (A::load(state(i, j).result.value) == kInvalid) help_thread(tid, i, j);
        }
      }
    }
    core_.bump_era();
  }

  void try_retire(int tid) {
    ThreadLocal& tl = core_.local(tid);
    Batch& b = tl.batch;
    const Config& cfg = core_.config();
    ++tl.stats.try_retire_calls;

    const Word min_birth = A::load(b.refs->birth_next);
    Node* last = b.first;
    for (int i = 0; i < cfg.max_threads; ++i) {
      for (int j = 0; j < ridx_; ++j) {
        Reservation& r = slot(i, j);
        // Odd tags mean a slow-path cycle is moving this slot; skipping it
        // is what bounds the slow-path loops.
        if (A::load(r.list.value) == kInvalid) continue;
        const Word list_tag = A::load(r.list.tag);
        if (list_tag & 1) continue;
        if (A::load(r.era.value) < min_birth) continue;
        const Word era_tag = A::load(r.era.tag);
        if (era_tag & 1) continue;
        if (last == b.refs) {
          ++tl.stats.try_retire_failures;
          const auto cap = static_cast<std::uint64_t>(cfg.max_threads) * ridx_ + 1;
          if (b.counter >= cap) ++tl.stats.try_retire_fail_at_cap;
          return;
        }
        if ((list_tag | era_tag) & 1) ++tl.stats.odd_tag_earmarks;
        A::store(last->birth_next, reinterpret_cast<Word>(&r));
        last = to_node(A::load(last->refc_bnext));
      }
    }

    Word cnt = Word{0} - kRefcProtect;
    for (Node* curr = b.first; curr != last;) {
      Node* following = to_node(A::load(curr->refc_bnext));
      auto* r = reinterpret_cast<Reservation*>(A::load(curr->birth_next));
      if (A::load(r->list.value) == kInvalid) {
        curr = following;
        continue;
      }
      // next must read null until the previous head is known.
      A::store(curr->birth_next, 0);
      const Word prev = A::exchange(r->list.value, to_word(curr));
      if (prev != 0) {
        if (prev == kInvalid) {
          // The slot was inactive; undo unless its owner already took curr.
          Word expected = to_word(curr);
          if (A::cas(r->list.value, expected, kInvalid)) {
            curr = following;
            continue;
          }
        } else {
          // Tainted means the owner already traversed curr and stopped
          // there; the chopped tail is ours to drop.
          Word expected = 0;
          if (!A::cas(curr->birth_next, expected, prev)) traverse(tid, prev);
        }
      }
      ++cnt;
      curr = following;
    }
    core_.finish_retire(tid, cnt);
  }

  static Word get_birth_era(Node* node) {
    if (node == nullptr) return 0;
    Word birth = A::load(node->birth_next);
    const Word link = A::load(node->blink);
    // Retired SLOT nodes reuse the birth word; REFS keeps the batch minimum.
    if (link != 0 && !is_rnode(link)) birth = A::load(to_node(link)->birth_next);
    return birth;
  }

  static Node* get_refs_node(Node* node) {
    const Word link = A::load(node->blink);
    SMR_CONTRACT(link != 0, "get_refs_node on a node that is not retired");
    return is_rnode(link) ? node : to_node(link);
  }

  // Moves (tid, index) from tag to tag+1 and detaches its list. Returns the
  // old list head, or kInvalid if another thread already did the move.
  Word detach_nodes(int self, int i, int j, Word tag) {
    Reservation& r = slot(i, j);
    Word et = tag;
    A::cas(r.era.tag, et, tag + 1);
    std::uint64_t iters = 0;
    Word result = kInvalid;
    while (true) {
      ++iters;
      PairValue old = A::load_pair(r.list);
      if (old.tag != tag) break;
      const Word head = old.value;
      if (A::dcas(r.list, old, {0, tag + 1})) {
        result = head;
        break;
      }
    }
    raise_max(core_.local(self).stats.detach_max, iters - 1);
    return result;
  }

  void handover_parent(int tid, Node* parent) {
    if (parent == nullptr || A::load(parent->blink) == 0) return;
    Node* refs = get_refs_node(parent);
    core_.refc_add(refs, kRefcProtectHandover);
    Word cnt = Word{0} - kRefcProtectHandover;
    for (int i = 0; i < core_.config().max_threads; ++i) {
      Word expected = to_word(parent);
      if (A::cas(parents_[i].w, expected, 0)) ++cnt;
    }
    // The caller still protects parent, so this cannot be the last drop;
    // checked anyway to never leak a batch.
    if (core_.refc_add(refs, cnt) == Word{0} - cnt) core_.free_batch(refs);
    (void)tid;
  }

  Word slow_path(int tid, const Link& src, int index, Node* parent) {
    LoopStats& st = core_.local(tid).stats;
    ++st.slow_paths;
    Reservation& r = slot(tid, index);
    State& s = state(tid, index);

    const Word parent_birth = get_birth_era(parent);
    drop_pin(tid, index);
    A::fetch_add(slow_counter_, 1);
    A::store(s.obj, reinterpret_cast<Word>(&src));
    A::store(s.parent, to_word(parent));
    A::store(s.era, parent_birth);
    const Word tag = A::load(r.era.tag);
    // Tag first: a helper that sees INVALID must also see this cycle's tag.
    A::store(s.result.tag, tag);
    A::store(s.result.value, kInvalid);

    Word prev_era = A::load(r.era.value);
    Word list = kInvalid;
    Word ptr = 0;
    std::uint64_t iters = 0;
    do {
      ++iters;
      ptr = A::load(src);
      Word curr_era = core_.era();
      if (curr_era == prev_era) {
        PairValue expected{kInvalid, tag};
        if (A::dcas(s.result, expected, {0, 0})) {
          A::store(r.era.tag, tag + 2);
          A::store(r.list.tag, tag + 2);
          A::fetch_add(slow_counter_, ~Word{0});
          ++st.slow_self;
          raise_max(st.slow_max, iters - 1);
          return ptr;
        }
      }
      if (A::load(r.list.value) != 0) {
        list = A::exchange(r.list.value, 0);
        if (A::load(r.list.tag) != tag) goto produced;  // a helper finished
        if (list != kInvalid) traverse(tid, list);
        list = kInvalid;
        curr_era = core_.era();
      }
      {
        // Fails only once the result has been produced.
        PairValue expected{prev_era, tag};
        A::dcas(r.era, expected, {curr_era, tag});
      }
      prev_era = curr_era;
    } while (A::load(s.result.value) == kInvalid);
    list = detach_nodes(tid, tid, index, tag);

  produced: {
    raise_max(st.slow_max, iters - 1);
    ++st.slow_produced;
    const PairValue res = A::load_pair(s.result);
    ptr = res.value;
    A::store(r.era.value, res.tag);
    A::store(r.era.tag, tag + 2);
    A::store(r.list.tag, tag + 2);
    Node* target = link_target(ptr);
    if (target != nullptr && A::load(target->blink) != 0) {
      // Already retired: pin its batch with a REFS-terminal at this index.
      Node* refs = get_refs_node(target);
      core_.refc_add(refs, 1);
      ++st.terminals;
      if (list != kInvalid) traverse(tid, list);
      list = A::exchange(r.list.value, rnode(to_word(refs)));
    }
    A::fetch_add(slow_counter_, ~Word{0});
    if (list != kInvalid) traverse(tid, list);
    handover_parent(tid, parent);
    return ptr;
  }
  }

  // Gives one batch reference to the owner of (i, j) for the slow-path
  // cycle whose even tag is cycle. A pin from an older cycle is stale and
  // dropped; if a newer cycle already left one, ours is dropped instead.
  void hand_pin(int tid, int i, int j, Word cycle, Node* refs) {
    WordPair& pin = state(i, j).pin;
    std::uint64_t iters = 0;
    while (true) {
      ++iters;
      PairValue old = A::load_pair(pin);
      if (old.tag > cycle) {
        release_ref(refs);
        break;
      }
      const Word prev = old.value;
      if (A::dcas(pin, old, {to_word(refs), cycle})) {
        ++core_.local(tid).stats.pin_handoffs;
        if (prev != 0) release_ref(to_node(prev));
        break;
      }
    }
    raise_max(core_.local(tid).stats.terminal_max, iters - 1);
  }

  // Called by the owner of (i, j) whenever the index is reprotected or
  // cleared, and by the destructor.
  void drop_pin(int i, int j) {
    WordPair& pin = state(i, j).pin;
    // Cheap word read first; a pin handed over right after it is dropped
    // at the owner's next reprotect or clear.
    if (A::load(pin.value) == 0) return;
    while (true) {
      PairValue old = A::load_pair(pin);
      if (old.value == 0) return;
      const Word prev = old.value;
      if (A::dcas(pin, old, {0, old.tag})) {
        release_ref(to_node(prev));
        return;
      }
    }
  }

  void release_ref(Node* refs) {
    if (core_.refc_add(refs, ~Word{0}) == 1) core_.free_batch(refs);
  }

  // Runs on thread tid on behalf of the advertiser (i, j).
  void help_thread(int tid, int i, int j) {
    const Config& cfg = core_.config();
    LoopStats& st = core_.local(tid).stats;
    State& s = state(i, j);
    Reservation& helped = slot(i, j);
    Reservation& parent_rsrv = slot(tid, cfg.max_idx);
    Reservation& target_rsrv = slot(tid, cfg.max_idx + 1);

    const PairValue result = A::load_pair(s.result);
    if (result.value != kInvalid) return;
    ++st.helps;
    const Word era = A::load(s.era);
    Node* parent = to_node(A::load(s.parent));
    if (parent != nullptr) {
      A::store(parent_rsrv.list.value, 0);
      A::store(parent_rsrv.era.value, era);
      A::store(parents_[tid].w, to_word(parent));  // advertise for a hand-over
    }
    const auto* obj = reinterpret_cast<const Link*>(A::load(s.obj));
    const Word tag = A::load(helped.era.tag);
    if (tag != result.tag) {
      ++st.help_changed;
      goto changed;
    }
    {
      Word curr_era = core_.era();
      std::uint64_t iters = 0;
      do {
        ++iters;
        const Word prev_era = update_era(tid, curr_era, cfg.max_idx + 1);
        const Word ptr = A::load(*obj);
        curr_era = core_.era();
        if (prev_era == curr_era) {
          PairValue expected = result;
          if (A::dcas(s.result, expected, {ptr, curr_era})) {
            ++st.help_published;
            const Word list = detach_nodes(tid, i, j, tag);
            if (list != kInvalid) traverse(tid, list);
            std::uint64_t era_iters = 0;
            while (true) {  // at most two iterations
              ++era_iters;
              PairValue old = A::load_pair(helped.era);
              if (old.tag != tag + 1) break;
              if (A::dcas(helped.era, old, {curr_era, tag + 2})) break;
            }
            raise_max(st.era_set_max, era_iters);
            Node* target = link_target(ptr);
            if (target != nullptr && A::load(target->blink) != 0) {
              Node* refs = get_refs_node(target);
              core_.refc_add(refs, 1);
              std::uint64_t term_iters = 0;
              while (true) {
                ++term_iters;
                PairValue old = A::load_pair(helped.list);
                if (old.tag != tag + 1) break;
                const Word old_head = old.value;
                if (A::dcas(helped.list, old, {rnode(to_word(refs)), tag + 2})) {
                  ++st.terminals;
                  if (old_head != kInvalid) traverse(tid, old_head);
                  raise_max(st.terminal_max, term_iters - 1);
                  raise_max(st.help_max, iters - 1);
                  goto done;
                }
              }
              raise_max(st.terminal_max, term_iters - 1);
              // The owner made the slot even first; hand the reference over.
              hand_pin(tid, i, j, tag + 2, refs);
            } else {
              Word expected_tag = tag + 1;
              A::cas(helped.list.tag, expected_tag, tag + 2);
              // The slot is even now, but target may have been retired
              // while it was odd, when retirers skipped it. Our own
              // reservation still holds target, so pin it for the owner.
              if (target != nullptr && A::load(target->blink) != 0) {
                Node* refs = get_refs_node(target);
                core_.refc_add(refs, 1);
                hand_pin(tid, i, j, tag + 2, refs);
              }
            }
          }
          break;
        }
      } while (A::load_pair(s.result) == result);
      raise_max(st.help_max, iters - 1);
    }
  done: {
    const Word lst = A::exchange(target_rsrv.list.value, kInvalid);
    if (lst != kInvalid) traverse(tid, lst);
  }
  changed:
    if (parent != nullptr) {
      // A hand-over moved a reference onto our board; drop it.
      if (A::exchange(parents_[tid].w, 0) != to_word(parent)) {
        Node* refs = get_refs_node(parent);
        if (core_.refc_add(refs, ~Word{0}) == 1) core_.free_batch(refs);
      }
      const Word lst = A::exchange(parent_rsrv.list.value, kInvalid);
      if (lst != kInvalid) traverse(tid, lst);
    }
  }

 private:

  struct alignas(64) Padded {
    AtomicWord w{0};
  };

  ReclaimCore<Hook> core_;
  int ridx_;
  std::unique_ptr<Reservation[]> rsrv_;
  std::unique_ptr<State[]> state_;
  std::unique_ptr<Padded[]> parents_;
  alignas(64) AtomicWord slow_counter_{0};
};

}  // namespace smr

#endif  // SMR_HAS_DCAS
