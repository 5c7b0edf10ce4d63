#pragma once

#include <stdexcept>
#include <string>

namespace formfind {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when the free-free stiffness block cannot be factorized reliably.
/// Carries the (1-norm) condition estimate that triggered the failure;
/// infinity when a pivot vanished exactly.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

class DegenerateGeometryError : public std::runtime_error {
 public:
  DegenerateGeometryError(const std::string& what, int bar)
      : std::runtime_error(what), bar_(bar) {}

  int bar() const noexcept { return bar_; }

 private:
  int bar_;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(const std::string& what, int step)
      : std::runtime_error(what), step_(step) {}

  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace formfind
