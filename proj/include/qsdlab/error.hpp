#pragma once

#include <stdexcept>
#include <string>

namespace qsdlab {

// Base of every error raised by the library. The CLI maps UsageError and
// DomainError (bad input) to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Regime errors: a chain routine was called outside the rate ordering it needs.
class RegimeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ReducibleBlockError : public NumericalError {
 public:
  ReducibleBlockError(const std::string& block, const std::string& what)
      : NumericalError(what), block_(block) {}
  const std::string& block() const noexcept { return block_; }

 private:
  std::string block_;
};

class ExtinctionError : public NumericalError {
 public:
  ExtinctionError(const std::string& what, long long last_step)
      : NumericalError(what), last_step_(last_step) {}
  // Last step (or time index) at which some mass or particle survived.
  long long last_step() const noexcept { return last_step_; }

 private:
  long long last_step_;
};

}  // namespace qsdlab
