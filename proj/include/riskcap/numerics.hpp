#pragma once

#include <functional>
#include <vector>

namespace riskcap {

struct QuadratureConfig {
  double tolerance = 1e-8;  // absolute tolerance on the integral
  int max_depth = 50;       // recursion depth before giving up
};

// Adaptive Simpson integration of f over [a, b] (a <= b required).
// Throws NumericalError when the depth limit is hit, naming the worst
// subinterval.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureConfig& cfg = {});

// Bisection root finding on [lo, hi]. Expects a sign change between the
// endpoints; when both endpoints have the same sign the midpoint is probed
// once so tangent roots hit exactly are still accepted. Returns the bracket
// midpoint once the bracket width is at most tol.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double tol = 1e-10);

struct SimplexConfig {
  double tolerance = 1e-8;    // stop when the simplex objective spread is below this
  int max_iterations = 5000;  // per run
  int restarts = 3;           // re-initialize around the incumbent and re-run
  double initial_step = 0.1;  // simplex edge, as a fraction of scale / box range
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;    // across all runs
  int evaluations = 0;
  int restarts_used = 0;
  bool converged = false;  // objective spread reached tolerance on the final run
};

// Nelder-Mead minimization with optional box constraints. Bounds are enforced
// through a smooth change of variables (sinusoidal for two-sided intervals,
// quadratic for half-open ones), so the objective is never evaluated outside
// [lower, upper] and returned points always satisfy the bounds. Pass +/-inf
// (or empty vectors) for unconstrained coordinates. Deterministic.
MinimizeResult minimize(const std::function<double(const std::vector<double>&)>& f,
                        const std::vector<double>& x0,
                        const std::vector<double>& lower = {},
                        const std::vector<double>& upper = {},
                        const SimplexConfig& cfg = {});

}  // namespace riskcap
