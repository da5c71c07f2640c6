#include "smr/verify/linearizability.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <thread>
#include <unordered_set>

#include "smr/crystalline_w.hpp"
#include "smr/ds/hash_map.hpp"
#include "smr/ds/sorted_list.hpp"
#include "smr/ds/treiber_stack.hpp"
#include "smr/reclaimer.hpp"
#include "smr/rng.hpp"
#include "smr/verify/test_hook.hpp"

namespace smr::verify {

std::string describe(const HistoryOp& op) {
  static constexpr const char* kNames[] = {"push", "pop", "insert", "remove", "get", "put"};
  std::string s = "t" + std::to_string(op.thread) + " " + kNames[static_cast<int>(op.kind)] + "(";
  switch (op.kind) {
    case OpKind::kPush: s += std::to_string(op.value); break;
    case OpKind::kPop: break;
    case OpKind::kInsert:
    case OpKind::kPut: s += std::to_string(op.key) + "," + std::to_string(op.value); break;
    default: s += std::to_string(op.key); break;
  }
  s += ")=" + std::to_string(op.result) + " [" + std::to_string(op.invoke) + "," +
       std::to_string(op.response) + "]";
  return s;
}

namespace {

struct StackModel {
  using State = std::vector<std::uint64_t>;
  static std::optional<State> step(const State& s, const HistoryOp& op) {
    if (op.kind == OpKind::kPush) {
      State n = s;
      n.push_back(op.value);
      return n;
    }
    if (s.empty()) {
      if (op.result != -1) return std::nullopt;
      return s;
    }
    if (op.result != static_cast<std::int64_t>(s.back())) return std::nullopt;
    State n = s;
    n.pop_back();
    return n;
  }
  static std::size_t hash(const State& s) {
    std::size_t h = s.size();
    for (auto v : s) h = h * 1099511628211ULL ^ v;
    return h;
  }
};

// One key of a map: -1 when absent.
struct KeyModel {
  using State = std::int64_t;
  static std::optional<State> step(State s, const HistoryOp& op) {
    const auto v = static_cast<std::int64_t>(op.value);
    switch (op.kind) {
      case OpKind::kInsert:
        if (op.result != (s == -1 ? 1 : 0)) return std::nullopt;
        return s == -1 ? v : s;
      case OpKind::kPut:
        if (op.result != (s == -1 ? 1 : 0)) return std::nullopt;
        return v;
      case OpKind::kRemove:
        if (op.result != s) return std::nullopt;
        return -1;
      case OpKind::kGet:
        if (op.result != s) return std::nullopt;
        return s;
      default: return std::nullopt;
    }
  }
  static std::size_t hash(State s) { return std::hash<std::int64_t>{}(s); }
};

// Wing-Gong search with Lowe's memoization of (linearized set, state).
template <class Model>
LinearizabilityResult wgl(const std::vector<HistoryOp>& ops, typename Model::State init) {
  LinearizabilityResult res;
  const int n = static_cast<int>(ops.size());
  if (n == 0) return res;

  // Events 0..2n-1: 2i is the call of op i, 2i+1 its return. Index 2n is
  // the list head sentinel.
  std::vector<std::pair<std::uint64_t, int>> order;
  order.reserve(2 * n);
  for (int i = 0; i < n; ++i) {
    order.push_back({ops[i].invoke, 2 * i});
    order.push_back({ops[i].response, 2 * i + 1});
  }
  std::sort(order.begin(), order.end());
  const int head = 2 * n;
  std::vector<int> next(2 * n + 1, -1), prev(2 * n + 1, -1);
  int last = head;
  for (auto& [t, e] : order) {
    next[last] = e;
    prev[e] = last;
    last = e;
  }

  auto unlink = [&](int e) {
    next[prev[e]] = next[e];
    if (next[e] != -1) prev[next[e]] = prev[e];
  };
  auto relink = [&](int e) {
    next[prev[e]] = e;
    if (next[e] != -1) prev[next[e]] = e;
  };
  // Lifting removes both events of an op; unlifting restores them in
  // reverse order so the saved neighbours are valid again.
  auto lift = [&](int op) {
    unlink(2 * op);
    unlink(2 * op + 1);
  };
  auto unlift = [&](int op) {
    relink(2 * op + 1);
    relink(2 * op);
  };

  using State = typename Model::State;
  const std::size_t words = (static_cast<std::size_t>(n) + 63) / 64;
  struct Key {
    std::vector<std::uint64_t> bits;
    State state;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = Model::hash(k.state);
      for (auto w : k.bits) h = (h ^ w) * 0x9e3779b97f4a7c15ULL;
      return h;
    }
  };
  std::unordered_set<Key, KeyHash> seen;
  std::vector<std::uint64_t> bits(words, 0);
  std::vector<std::pair<int, State>> stack;
  State state = init;

  int e = next[head];
  while (next[head] != -1) {
    const int op = e / 2;
    if (e % 2 == 0) {
      auto ns = Model::step(state, ops[op]);
      bool advanced = false;
      if (ns) {
        bits[op / 64] |= 1ULL << (op % 64);
        if (seen.insert(Key{bits, *ns}).second) {
          ++res.states_explored;
          stack.push_back({op, state});
          state = std::move(*ns);
          lift(op);
          e = next[head];
          advanced = true;
        } else {
          bits[op / 64] &= ~(1ULL << (op % 64));
        }
      }
      if (!advanced) e = next[e];
    } else {
      // A return whose call is still pending: undo the last choice.
      if (stack.empty()) {
        res.ok = false;
        res.failure = "no linearization point for " + describe(ops[op]);
        return res;
      }
      auto [top, st] = std::move(stack.back());
      stack.pop_back();
      state = std::move(st);
      bits[top / 64] &= ~(1ULL << (top % 64));
      unlift(top);
      e = next[2 * top];
    }
  }
  return res;
}

}  // namespace

LinearizabilityResult check_stack_history(const std::vector<HistoryOp>& history) {
  return wgl<StackModel>(history, {});
}

LinearizabilityResult check_map_history(const std::vector<HistoryOp>& history) {
  std::map<std::uint64_t, std::vector<HistoryOp>> by_key;
  for (const auto& op : history) by_key[op.key].push_back(op);
  LinearizabilityResult total;
  for (auto& [key, ops] : by_key) {
    auto r = wgl<KeyModel>(ops, -1);
    total.states_explored += r.states_explored;
    if (!r.ok) {
      total.ok = false;
      total.failure = "key " + std::to_string(key) + ": " + r.failure;
      return total;
    }
  }
  return total;
}

std::vector<HistoryOp> record_history(const HistoryOptions& o) {
  using Smr = CrystallineW<JitterHook>;
  Config cfg;
  cfg.max_threads = o.threads;
  cfg.max_idx = ds::ds_indices(o.ds);
  // Small frequencies keep reclamation and the slow path busy.
  cfg.epoch_freq = 4;
  cfg.retire_freq = 4;
  cfg.max_tries = 2;
  Smr smr(cfg);

  std::atomic<std::uint64_t> clock{0};
  std::vector<std::vector<HistoryOp>> logs(o.threads);
  {
    ds::TreiberStack<Smr> stack(smr);
    ds::SortedList<Smr> list(smr);
    ds::HashMap<Smr> map(smr, 4);

    std::vector<std::thread> threads;
    for (int t = 0; t < o.threads; ++t) {
      threads.emplace_back([&, t] {
        ThreadHandle<Smr> h(smr);
        const int tid = h.tid();
        auto rng = thread_rng(o.seed, static_cast<std::uint64_t>(t));
        auto& log = logs[t];
        log.reserve(o.ops_per_thread);
        for (int i = 0; i < o.ops_per_thread; ++i) {
          HistoryOp op;
          op.thread = t;
          op.key = rng() % o.key_range;
          // Unique per operation so a returned value names its writer.
          op.value = (static_cast<std::uint64_t>(t) << 32) | static_cast<std::uint64_t>(i);
          const unsigned pick = rng() % 100;
          auto opt = [](const std::optional<std::uint64_t>& v) {
            return v ? static_cast<std::int64_t>(*v) : std::int64_t{-1};
          };
          op.invoke = clock.fetch_add(1);
          if (o.ds == ds::DsKind::kStack) {
            op.key = 0;
            if (pick < 50) {
              op.kind = OpKind::kPush;
              stack.push(tid, op.value);
            } else {
              op.kind = OpKind::kPop;
              op.result = opt(stack.pop(tid));
            }
          } else {
            auto run = [&](auto& s) {
              if (pick < 30) {
                op.kind = OpKind::kInsert;
                op.result = s.insert(tid, op.key, op.value);
              } else if (pick < 60) {
                op.kind = OpKind::kRemove;
                op.result = opt(s.remove(tid, op.key));
              } else if (pick < 85) {
                op.kind = OpKind::kGet;
                op.result = opt(s.get(tid, op.key));
              } else {
                op.kind = OpKind::kPut;
                op.result = s.put(tid, op.key, op.value);
              }
            };
            if (o.ds == ds::DsKind::kList) run(list);
            else run(map);
          }
          op.response = clock.fetch_add(1);
          log.push_back(op);
        }
      });
    }
    for (auto& th : threads) th.join();
  }

  std::vector<HistoryOp> all;
  for (auto& l : logs) all.insert(all.end(), l.begin(), l.end());
  return all;
}

}  // namespace smr::verify
