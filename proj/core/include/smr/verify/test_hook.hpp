#pragma once

#include <cstdint>
#include <thread>

namespace smr::verify {

// Receives every shared-memory access made through Atomics<TestHook> on the
// thread where it is installed.
class PointListener {
 public:
  virtual ~PointListener() = default;
  virtual void on_point() = 0;
};

inline thread_local PointListener* tl_point_listener = nullptr;

struct TestHook {
  static void point() {
    if (PointListener* l = tl_point_listener) l->on_point();
  }
};

// Yields at random shared accesses, on average once every Period of them,
// so that stress runs interleave densely even on machines with fewer cores
// than threads.
template <unsigned Period>
struct BasicJitterHook {
  static_assert((Period & (Period - 1)) == 0, "period must be a power of two");
  static void point() {
    thread_local std::uint64_t s = 0x9E3779B97F4A7C15ull ^
                                   reinterpret_cast<std::uintptr_t>(&s);
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    if ((s & (Period - 1)) == 0) std::this_thread::yield();
  }
};

using JitterHook = BasicJitterHook<64>;

// Installs a listener for the current scope.
class ScopedListener {
 public:
  explicit ScopedListener(PointListener* l) : prev_(tl_point_listener) { tl_point_listener = l; }
  ~ScopedListener() { tl_point_listener = prev_; }
  ScopedListener(const ScopedListener&) = delete;
  ScopedListener& operator=(const ScopedListener&) = delete;

 private:
  PointListener* prev_;
};

}  // namespace smr::verify
