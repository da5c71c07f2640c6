#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace smr {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

int default_max_threads();

struct Config {
  int max_threads = default_max_threads();
  // Reservation indices available to protect() per thread.
  int max_idx = 3;
  // Allocations per thread between global era increments.
  std::uint64_t epoch_freq = 110;
  // Retires between attempts to publish the batch (EBR: between scans).
  std::uint64_t retire_freq = 120;
  // Fast-path iterations of the wait-free protect() before the slow path.
  int max_tries = 16;

  // Throws ConfigError naming the first offending field.
  void validate() const;
};

// Contract checks stay enabled in every build type; they guard cheap
// preconditions whose violation would otherwise corrupt the heap.
using ContractHandler = void (*)(const char* what);

// Returns the previous handler. The default prints and aborts.
ContractHandler set_contract_handler(ContractHandler handler);
void contract_violation(const char* what);

}  // namespace smr

#define SMR_CONTRACT(cond, msg)                             \
  do {                                                      \
    if (!(cond)) [[unlikely]] ::smr::contract_violation(msg); \
  } while (0)
