#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smr/reclaim_core.hpp"
#include "smr/verify/scheduler.hpp"

namespace smr::verify {

// Scripted micro-programs run under the step scheduler.
enum class Scenario {
  // One thread slow-paths a root and then a child link while another bumps
  // the era (helping) and a third replaces and retires both nodes.
  kSlowPathHelperRetirer,
  // A slow path whose result is published while retirers keep swapping the
  // root, so detach_nodes() contends with concurrent try_retire().
  kDetachVsRetirers,
  // Several back-to-back slow-path cycles on one index, so helpers often
  // act on an advert that is already finished.
  kStaleAdvert,
  // Every thread protects two indices and retires; no try_retire() may fail
  // once the batch covers every reservation.
  kBatchCapL,
  kBatchCapW,
};

std::string_view scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view s);
std::vector<Scenario> all_scenarios();

struct ExploreOptions {
  Scenario scenario = Scenario::kSlowPathHelperRetirer;
  int max_threads = 3;
  // Schedules to try; even runs use the random strategy, odd runs PCT.
  std::uint64_t runs = 200;
  std::uint64_t seed = 1;
  std::uint64_t step_limit = 200000;
};

struct ExploreReport {
  std::uint64_t runs = 0;
  std::uint64_t failures = 0;
  std::uint64_t max_steps = 0;
  LoopStats stats;  // merged over all runs
  std::uint64_t failing_seed = 0;
  std::string failure;
  std::string trace;

  bool pass() const { return failures == 0; }
  std::string summary() const;
};

ExploreReport explore(const ExploreOptions& options);

// Checks the loop counters against their bounds for max_threads threads.
// Returns an empty string when every bound holds.
std::string check_loop_bounds(const LoopStats& stats, int max_threads);

}  // namespace smr::verify
