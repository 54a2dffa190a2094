#pragma once

#include <stdexcept>
#include <string>

namespace lensless {

// Argument outside the mathematical domain of an operation (z <= d, D = 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Incompatible array shapes or counts.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure inside a solver or optimizer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// tau = 0 with a rank-deficient normal matrix at some frequency.
class SingularSystemError : public NumericalError {
 public:
  SingularSystemError(int row, int col)
      : NumericalError("singular per-frequency system at frequency (" + std::to_string(row) + ", " +
                       std::to_string(col) + "); use tau > 0"),
        row_(row),
        col_(col) {}

  int row() const { return row_; }
  int col() const { return col_; }

 private:
  int row_;
  int col_;
};

class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lensless
