#pragma once

#include <stdexcept>
#include <string>

namespace tbps {

// Exception hierarchy. The CLI maps these onto process exit codes:
// UsageError -> 1, DataError -> 2, NumericalError -> 3.

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or malformed input data (files, records, vocabularies).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or rank mismatch between tensors / configs.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Out-of-domain scalar parameter (e.g. a non-positive temperature).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values encountered during training or evaluation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tbps
