#pragma once

#include <stdexcept>

#include "smr/config.hpp"

namespace smr::verify {

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// While alive, contract violations throw ContractViolation instead of
// aborting the process.
class ThrowingContracts {
 public:
  ThrowingContracts() : prev_(set_contract_handler(&raise)) {}
  ~ThrowingContracts() { set_contract_handler(prev_); }
  ThrowingContracts(const ThrowingContracts&) = delete;
  ThrowingContracts& operator=(const ThrowingContracts&) = delete;

 private:
  static void raise(const char* what) { throw ContractViolation(what); }
  ContractHandler prev_;
};

}  // namespace smr::verify
