#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace survkit {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, missing or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (singular matrix, divergence, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Newton-Raphson ran out of iterations. Carries the last iterate.
class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_beta)
      : NumericError(what), last_beta_(std::move(last_beta)) {}

  const std::vector<double>& last_beta() const noexcept { return last_beta_; }

 private:
  std::vector<double> last_beta_;
};

}  // namespace survkit
