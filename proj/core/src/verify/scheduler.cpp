#include "smr/verify/scheduler.hpp"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "smr/verify/test_hook.hpp"

namespace smr::verify {

namespace {

struct Aborted {};

class Scheduler {
 public:
  explicit Scheduler(std::size_t n) : state_(n, State::kRunning) {}

  enum class State { kRunning, kParked, kDone };

  class Agent final : public PointListener {
   public:
    Agent(Scheduler& s, int id) : s_(s), id_(id) {}
    void on_point() override { s_.park(id_); }

   private:
    Scheduler& s_;
    int id_;
  };

  void park(int id) {
    std::unique_lock lock(mu_);
    if (aborting_) {
      lock.unlock();
      // Unwinding code runs freely to completion.
      if (std::uncaught_exceptions() == 0) throw Aborted{};
      return;
    }
    state_[id] = State::kParked;
    cv_.notify_all();
    cv_.wait(lock, [&] { return state_[id] == State::kRunning; });
    if (aborting_ && std::uncaught_exceptions() == 0) {
      lock.unlock();
      throw Aborted{};
    }
  }

  void finish(int id, std::string error) {
    std::lock_guard lock(mu_);
    if (!error.empty() && failure_.empty()) failure_ = std::move(error);
    state_[id] = State::kDone;
    cv_.notify_all();
  }

  ScheduleResult drive(const ScheduleOptions& opt, const std::function<std::string()>& check) {
    ScheduleResult res;
    std::mt19937_64 rng(opt.seed);
    const std::size_t n = state_.size();

    std::vector<int> prio(n);
    std::vector<std::uint64_t> change_points;
    if (opt.strategy == Strategy::kPct) {
      std::iota(prio.begin(), prio.end(), opt.pct_depth);
      std::shuffle(prio.begin(), prio.end(), rng);
      std::uniform_int_distribution<std::uint64_t> d(1, std::max<std::uint64_t>(1, opt.pct_horizon));
      for (int i = 1; i < opt.pct_depth; ++i) change_points.push_back(d(rng));
    }

    std::unique_lock lock(mu_);
    while (true) {
      cv_.wait(lock, [&] {
        return std::none_of(state_.begin(), state_.end(),
                            [](State s) { return s == State::kRunning; });
      });
      if (!failure_.empty()) break;
      if (check) {
        std::string msg = check();
        if (!msg.empty()) {
          failure_ = "invariant violated after step " + std::to_string(res.steps) + ": " + msg;
          break;
        }
      }
      std::vector<int> enabled;
      for (std::size_t i = 0; i < n; ++i)
        if (state_[i] == State::kParked) enabled.push_back(static_cast<int>(i));
      if (enabled.empty()) break;
      if (res.steps >= opt.step_limit) {
        res.step_limit_hit = true;
        failure_ = "step limit " + std::to_string(opt.step_limit) + " exceeded";
        break;
      }
      int pick;
      if (opt.strategy == Strategy::kPct) {
        pick = *std::max_element(enabled.begin(), enabled.end(),
                                 [&](int a, int b) { return prio[a] < prio[b]; });
        for (std::size_t c = 0; c < change_points.size(); ++c) {
          if (change_points[c] == res.steps) prio[pick] = static_cast<int>(opt.pct_depth - 1 - c);
        }
      } else {
        pick = enabled[std::uniform_int_distribution<std::size_t>(0, enabled.size() - 1)(rng)];
      }
      res.trace.push_back(pick);
      ++res.steps;
      state_[pick] = State::kRunning;
      cv_.notify_all();
    }

    if (!failure_.empty()) {
      aborting_ = true;
      for (State& s : state_)
        if (s == State::kParked) s = State::kRunning;
      cv_.notify_all();
      cv_.wait(lock, [&] {
        return std::all_of(state_.begin(), state_.end(), [](State s) { return s == State::kDone; });
      });
      res.ok = false;
      res.failure = failure_;
    }
    return res;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<State> state_;
  bool aborting_ = false;
  std::string failure_;
};

}  // namespace

std::string ScheduleResult::trace_string() const {
  std::string out;
  for (std::size_t i = 0; i < trace.size();) {
    std::size_t j = i;
    while (j < trace.size() && trace[j] == trace[i]) ++j;
    if (!out.empty()) out += ' ';
    out += std::to_string(trace[i]) + '*' + std::to_string(j - i);
    i = j;
  }
  return out;
}

ScheduleResult run_schedule(std::vector<std::function<void()>> bodies,
                            const ScheduleOptions& options,
                            const std::function<std::string()>& check) {
  Scheduler sched(bodies.size());
  std::vector<std::thread> threads;
  threads.reserve(bodies.size());
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    threads.emplace_back([&sched, &bodies, i] {
      const int id = static_cast<int>(i);
      Scheduler::Agent agent(sched, id);
      std::string error;
      {
        ScopedListener listen(&agent);
        try {
          agent.on_point();  // wait for the first grant
          bodies[i]();
        } catch (const Aborted&) {
        } catch (const std::exception& e) {
          error = "thread " + std::to_string(id) + ": " + e.what();
        } catch (...) {
          error = "thread " + std::to_string(id) + ": unknown exception";
        }
      }
      sched.finish(id, std::move(error));
    });
  }
  ScheduleResult res = sched.drive(options, check);
  for (std::thread& t : threads) t.join();
  return res;
}

}  // namespace smr::verify
