#include "smr/harness/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <unordered_set>

#include "smr/ds/hash_map.hpp"
#include "smr/ds/sorted_list.hpp"
#include "smr/ds/treiber_stack.hpp"
#include "smr/reclaimer.hpp"
#include "smr/rng.hpp"

namespace smr::harness {

std::string_view workload_name(Workload w) { return w == Workload::kWrite ? "write" : "read"; }

std::optional<Workload> parse_workload(std::string_view s) {
  if (s == "write") return Workload::kWrite;
  if (s == "read") return Workload::kRead;
  return std::nullopt;
}

void BenchConfig::validate() const {
  if (!scheme_available(scheme)) throw ConfigError("scheme is not available on this target");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (threads > max_threads) throw ConfigError("threads must be <= max_threads");
  if (!(duration_s > 0)) throw ConfigError("duration must be > 0");
  if (key_range < 1) throw ConfigError("key_range must be >= 1");
  if (prefill > key_range) throw ConfigError("prefill must be <= key_range");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (max_idx < ds::ds_indices(ds)) {
    throw ConfigError("max_idx is too small for " + std::string(ds::ds_name(ds)));
  }
  Config c;
  c.max_threads = max_threads;
  c.max_idx = max_idx;
  c.epoch_freq = epoch_freq;
  c.retire_freq = retire_freq;
  c.max_tries = max_tries;
  c.validate();
}

namespace {

// Stream ids: workers use (repeat << 32) | thread, the prefill this one.
constexpr std::uint64_t kPrefillStream = ~std::uint64_t{0};

std::uint64_t stream_id(int thread, int repeat) {
  return (static_cast<std::uint64_t>(repeat) << 32) | static_cast<std::uint32_t>(thread);
}

}  // namespace

OpStream::OpStream(const BenchConfig& c, int thread, int repeat)
    : rng_(thread_rng(c.rng_seed, stream_id(thread, repeat))),
      workload_(c.workload),
      stack_(c.ds == ds::DsKind::kStack),
      key_range_(c.key_range) {}

BenchOp OpStream::next() {
  const std::uint64_t pick = rng_() % 100;
  const std::uint64_t key = rng_() % key_range_;
  // The stack has no lookup, so it always runs the push/pop mix.
  if (stack_ || workload_ == Workload::kWrite) {
    return {pick < 50 ? OpType::kInsert : OpType::kRemove, key};
  }
  return {pick < 90 ? OpType::kGet : OpType::kPut, key};
}

namespace {

template <class Smr, class Ds>
struct Adapter;

template <class Smr>
struct Adapter<Smr, ds::TreiberStack<Smr>> {
  static void apply(ds::TreiberStack<Smr>& s, int tid, const BenchOp& op) {
    if (op.type == OpType::kInsert) s.push(tid, op.key);
    else (void)s.pop(tid);
  }
};

template <class Smr, class Ds>
struct Adapter {
  static void apply(Ds& s, int tid, const BenchOp& op) {
    switch (op.type) {
      case OpType::kInsert: (void)s.insert(tid, op.key, op.key); break;
      case OpType::kRemove: (void)s.remove(tid, op.key); break;
      case OpType::kGet: (void)s.get(tid, op.key); break;
      case OpType::kPut: (void)s.put(tid, op.key, op.key); break;
    }
  }
};

// Distinct keys for the prefill, in descending order so that list inserts
// land at the head.
std::vector<std::uint64_t> prefill_keys(const BenchConfig& c, int repeat) {
  auto rng = thread_rng(c.rng_seed, kPrefillStream - static_cast<std::uint64_t>(repeat));
  std::vector<std::uint64_t> keys;
  keys.reserve(c.prefill);
  if (c.prefill * 2 > c.key_range) {
    std::vector<std::uint64_t> all(c.key_range);
    for (std::uint64_t i = 0; i < c.key_range; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    keys.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(c.prefill));
  } else {
    std::unordered_set<std::uint64_t> seen;
    while (keys.size() < c.prefill) {
      const std::uint64_t k = rng() % c.key_range;
      if (seen.insert(k).second) keys.push_back(k);
    }
  }
  std::sort(keys.begin(), keys.end(), std::greater<>());
  return keys;
}

struct alignas(64) WorkerTally {
  std::uint64_t ops = 0;
  double retired_sum = 0;
};

template <class Smr, class Ds>
RepeatResult run_repeat(const BenchConfig& c, int repeat, Smr& smr, Ds& structure) {
  {
    ThreadHandle<Smr> h(smr);
    for (std::uint64_t k : prefill_keys(c, repeat)) {
      Adapter<Smr, Ds>::apply(structure, h.tid(), {OpType::kInsert, k});
    }
  }

  std::atomic<bool> go{false};
  std::atomic<bool> stop{false};
  std::atomic<int> ready{0};
  std::vector<WorkerTally> tally(c.threads);
  std::vector<std::thread> workers;
  for (int t = 0; t < c.threads; ++t) {
    workers.emplace_back([&, t] {
      ThreadHandle<Smr> h(smr);
      const int tid = h.tid();
      OpStream ops(c, t, repeat);
      WorkerTally local;
      ready.fetch_add(1);
      go.wait(false);
      while (!stop.load(std::memory_order_relaxed)) {
        Adapter<Smr, Ds>::apply(structure, tid, ops.next());
        ++local.ops;
        local.retired_sum += static_cast<double>(smr.unreclaimed());
      }
      tally[t] = local;
    });
  }
  while (ready.load() < c.threads) std::this_thread::yield();

  const auto start = std::chrono::steady_clock::now();
  go = true;
  go.notify_all();
  std::this_thread::sleep_for(std::chrono::duration<double>(c.duration_s));
  stop = true;
  const auto end = std::chrono::steady_clock::now();
  for (auto& w : workers) w.join();

  RepeatResult r;
  double retired = 0;
  for (const auto& t : tally) {
    r.total_ops += t.ops;
    retired += t.retired_sum;
  }
  r.elapsed_s = std::chrono::duration<double>(end - start).count();
  r.throughput = static_cast<double>(r.total_ops) / r.elapsed_s;
  r.avg_retired_per_op = r.total_ops == 0 ? 0 : retired / static_cast<double>(r.total_ops);
  r.peak_unreclaimed = smr.peak_unreclaimed();
  return r;
}

template <class Smr>
RepeatResult run_one(const BenchConfig& c, int repeat) {
  Config cfg;
  cfg.max_threads = c.threads;
  cfg.max_idx = c.max_idx;
  cfg.epoch_freq = c.epoch_freq;
  cfg.retire_freq = c.retire_freq;
  cfg.max_tries = c.max_tries;
  Smr smr(cfg);
  switch (c.ds) {
    case ds::DsKind::kStack: {
      ds::TreiberStack<Smr> s(smr);
      return run_repeat(c, repeat, smr, s);
    }
    case ds::DsKind::kList: {
      ds::SortedList<Smr> s(smr);
      return run_repeat(c, repeat, smr, s);
    }
    case ds::DsKind::kHashMap: {
      ds::HashMap<Smr> s(smr, c.key_range);
      return run_repeat(c, repeat, smr, s);
    }
  }
  return {};
}

}  // namespace

BenchReport run_cell(const BenchConfig& c) {
  c.validate();
  BenchReport rep;
  rep.config = c;
  for (int i = 0; i < c.repeats; ++i) {
    rep.repeats.push_back(
        dispatch_scheme(c.scheme, [&]<class S>(std::type_identity<S>) { return run_one<S>(c, i); }));
  }
  for (const auto& r : rep.repeats) {
    rep.throughput += r.throughput;
    rep.avg_retired_per_op += r.avg_retired_per_op;
    rep.peak_unreclaimed = std::max(rep.peak_unreclaimed, r.peak_unreclaimed);
  }
  rep.throughput /= static_cast<double>(rep.repeats.size());
  rep.avg_retired_per_op /= static_cast<double>(rep.repeats.size());
  return rep;
}

namespace {

template <class T>
void append_number(std::string& out, T v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

template <class T>
T parse_number(std::string_view field, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw std::invalid_argument(std::string("bad ") + what + " field: '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::string emit_csv(const std::vector<BenchReport>& reports) {
  std::vector<const BenchReport*> order;
  for (const auto& r : reports) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const BenchReport* a, const BenchReport* b) {
    const auto& x = a->config;
    const auto& y = b->config;
    return std::tuple(x.scheme, x.ds, x.threads) < std::tuple(y.scheme, y.ds, y.threads);
  });

  std::string out(kCsvHeader);
  out += '\n';
  for (const BenchReport* r : order) {
    const auto& c = r->config;
    out += scheme_name(c.scheme);
    out += ',';
    out += ds::ds_name(c.ds);
    out += ',';
    append_number(out, c.threads);
    out += ',';
    out += workload_name(c.workload);
    out += ',';
    append_number(out, r->throughput);
    out += ',';
    append_number(out, r->avg_retired_per_op);
    out += ',';
    append_number(out, r->peak_unreclaimed);
    out += ',';
    append_number(out, c.rng_seed);
    out += '\n';
  }
  return out;
}

std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  bool header = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != kCsvHeader) throw std::invalid_argument("unexpected CSV header");
      header = false;
      continue;
    }
    std::vector<std::string_view> f;
    for (std::size_t pos = 0;;) {
      const auto comma = line.find(',', pos);
      f.push_back(line.substr(pos, comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (f.size() != 8) throw std::invalid_argument("expected 8 fields per row");
    CsvRow row;
    row.scheme = f[0];
    row.ds = f[1];
    row.threads = parse_number<int>(f[2], "threads");
    row.workload = f[3];
    row.throughput_ops_s = parse_number<double>(f[4], "throughput_ops_s");
    row.avg_retired_per_op = parse_number<double>(f[5], "avg_retired_per_op");
    row.peak_unreclaimed = parse_number<std::int64_t>(f[6], "peak_unreclaimed");
    row.seed = parse_number<std::uint64_t>(f[7], "seed");
    rows.push_back(std::move(row));
  }
  if (header) throw std::invalid_argument("missing CSV header");
  return rows;
}

}  // namespace smr::harness
