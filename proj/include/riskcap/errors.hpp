#pragma once

#include <stdexcept>
#include <string>

namespace riskcap {

// Raised when an algorithm fails to deliver a trustworthy numeric result
// (root not bracketed, quadrature depth exhausted, optimizer infeasible, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by allocate::solve when no feasible reserve vector is found.
class InfeasibleError : public NumericalError {
 public:
  InfeasibleError(const std::string& msg, int worst_constraint)
      : NumericalError(msg), worst_constraint_(worst_constraint) {}

  int worst_constraint() const { return worst_constraint_; }

 private:
  int worst_constraint_;
};

}  // namespace riskcap
