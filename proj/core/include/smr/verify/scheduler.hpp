#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace smr::verify {

enum class Strategy { kRandom, kPct };

struct ScheduleOptions {
  std::uint64_t seed = 1;
  Strategy strategy = Strategy::kRandom;
  // PCT: number of priority change points plus one.
  int pct_depth = 3;
  // PCT: change points are drawn from [1, pct_horizon].
  std::uint64_t pct_horizon = 2000;
  // A run that needs more steps than this is reported as non-terminating.
  std::uint64_t step_limit = 200000;
};

struct ScheduleResult {
  bool ok = true;
  bool step_limit_hit = false;
  std::uint64_t steps = 0;
  std::vector<int> trace;  // thread chosen at each step
  std::string failure;

  // Run-length encoded trace, e.g. "0*3 1*2 0*1".
  std::string trace_string() const;
};

// Runs each body on its own thread but lets exactly one of them execute at
// a time. Every shared access made through Atomics<TestHook> is a
// preemption point where the scheduler picks the next thread to run.
// check() runs between steps while every thread is paused; a non-empty
// result stops the run and becomes the failure message. Exceptions thrown
// by a body are reported as failures too.
ScheduleResult run_schedule(std::vector<std::function<void()>> bodies,
                            const ScheduleOptions& options,
                            const std::function<std::string()>& check = {});

}  // namespace smr::verify
