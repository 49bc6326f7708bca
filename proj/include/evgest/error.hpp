#pragma once

#include <stdexcept>
#include <string>

namespace evgest {

// Malformed or inconsistent input data (files, manifests, config text).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition (time regression, bad index,
// invalid configuration values).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace evgest
