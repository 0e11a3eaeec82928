#pragma once

#include <stdexcept>
#include <string>

namespace eegbench {

// Shape disagreement between operands. The message names the offending axis.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Out-of-range hyperparameter or argument (dropout rate, window size, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data that violates a precondition (bad labels, malformed files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Misuse of an API contract (non-scalar loss, misaligned parameter lists).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eegbench
