#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "smr/ds/kind.hpp"
#include "smr/scheme.hpp"

namespace smr::harness {

enum class Workload { kWrite, kRead };

std::string_view workload_name(Workload w);
std::optional<Workload> parse_workload(std::string_view s);

struct BenchConfig {
  SchemeKind scheme = SchemeKind::kCrystallineW;
  ds::DsKind ds = ds::DsKind::kHashMap;
  int threads = 1;
  // Upper limit for threads; sizes the registry.
  int max_threads = 128;
  double duration_s = 10.0;
  std::uint64_t prefill = 50000;
  std::uint64_t key_range = 100000;
  Workload workload = Workload::kWrite;
  std::uint64_t epoch_freq = 110;
  std::uint64_t retire_freq = 120;
  int max_idx = 3;
  int max_tries = 16;
  std::uint64_t rng_seed = 1;
  int repeats = 5;

  // Throws ConfigError naming the first offending field.
  void validate() const;
};

enum class OpType : std::uint8_t { kInsert, kRemove, kGet, kPut };

struct BenchOp {
  OpType type;
  std::uint64_t key;
};

// The operation sequence of one worker thread in one repeat. It depends on
// the seed, thread and repeat only, never on timing.
class OpStream {
 public:
  OpStream(const BenchConfig& config, int thread, int repeat);
  BenchOp next();

 private:
  std::mt19937_64 rng_;
  Workload workload_;
  bool stack_;
  std::uint64_t key_range_;
};

struct RepeatResult {
  double throughput = 0;  // ops/s
  double avg_retired_per_op = 0;
  std::int64_t peak_unreclaimed = 0;
  std::uint64_t total_ops = 0;
  double elapsed_s = 0;
};

struct BenchReport {
  BenchConfig config;
  std::vector<RepeatResult> repeats;
  double throughput = 0;  // mean over repeats
  double avg_retired_per_op = 0;  // mean over repeats
  std::int64_t peak_unreclaimed = 0;  // max over repeats
};

// Prefills, runs the timed mix on config.threads threads for each repeat
// and aggregates. Throws ConfigError on an invalid config.
BenchReport run_cell(const BenchConfig& config);

// One CSV row; the numeric fields round-trip exactly through the text.
struct CsvRow {
  std::string scheme;
  std::string ds;
  int threads = 0;
  std::string workload;
  double throughput_ops_s = 0;
  double avg_retired_per_op = 0;
  std::int64_t peak_unreclaimed = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kCsvHeader =
    "scheme,ds,threads,workload,throughput_ops_s,avg_retired_per_op,peak_unreclaimed,seed";

// Rows are ordered by (scheme, ds, threads); ties keep their input order.
std::string emit_csv(const std::vector<BenchReport>& reports);

// Throws std::invalid_argument on a malformed document.
std::vector<CsvRow> parse_csv(std::string_view text);

}  // namespace smr::harness
