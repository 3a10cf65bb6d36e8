#pragma once

#include <optional>
#include <vector>

#include "riskcap/calibrate.hpp"
#include "riskcap/model.hpp"
#include "riskcap/numerics.hpp"
#include "riskcap/ruin.hpp"

namespace riskcap {

struct PenaltyConfig {
  double rho0_scale = 1e4;      // rho_0 = rho0_scale / min delta_m
  double growth = 10.0;         // geometric escalation factor
  int max_rounds = 6;
  double feasibility_tol = 1e-6;  // accept when every slack >= -feasibility_tol
  double active_tol = 1e-6;       // slack < active_tol marks a constraint active
  int restoration_max = 200;      // multiplicative scale-up passes after escalation
};

// min sum u_i subject to pi_m(u, T) <= delta_m and u >= 0, where pi_m is the
// constraint's subset ruin probability under the given state weights.
struct AllocationProblem {
  ModelSpec model;
  std::vector<double> weights;  // environmental distribution entering pi_m
  double T = 1.0;
  std::vector<SubsetConstraintSpec> constraints;

  std::optional<std::vector<double>> u0;  // explicit start; otherwise derived
  SimplexConfig simplex;
  PenaltyConfig penalty;
  RuinMethod per_line_method = RuinMethod::Auto;
  McOptions mc;  // AggregateRuin constraints; seed pinned so pi_m is deterministic

  void validate() const;
};

struct AllocationResult {
  std::vector<double> u_star;
  double objective = 0.0;
  std::vector<double> slacks;  // delta_m - pi_m(u*, T)
  std::vector<int> active;     // constraint indices with slack < active_tol

  int penalty_rounds = 0;
  int restoration_steps = 0;
  long evaluations = 0;
  bool converged = false;
};

// Exterior-penalty Nelder-Mead solve. Throws InfeasibleError (naming the worst
// constraint) when escalation plus restoration cannot reach slack >= -1e-6.
AllocationResult solve(const AllocationProblem& problem);

struct KktReport {
  std::vector<int> active;  // constraint indices with |slack| below the active tolerance
  bool descent_direction = false;  // interior point: the all-ones gradient is unopposed
  std::vector<std::vector<double>> gradients;  // d pi_m / d u, one row per active constraint
  std::vector<double> multipliers;             // least-squares stationarity multipliers
  double stationarity_residual = 0.0;          // max-norm over coordinates with u_i > 0
  bool multipliers_nonnegative = false;
};

// Numerical first-order diagnostics at a candidate solution. Gradients use
// central differences with h = 1e-4 * max(1, u_i); stationarity is checked on
// coordinates away from the u >= 0 bound.
KktReport kkt_report(const AllocationProblem& problem, const std::vector<double>& u_star);

enum class SubsetFamily { Singletons, FullAndSingletons, AllSubsets };

const char* to_string(SubsetFamily family);

// Constraint list over the chosen family of line subsets, with thresholds
// delta_S = base^|S|.
std::vector<SubsetConstraintSpec> make_subset_family(SubsetFamily family, int n_lines,
                                                     SubsetMode mode, double base);

struct ReserveCycle {
  std::vector<PosteriorState> posterior;      // length M + 1, prior first
  std::vector<AllocationResult> allocations;  // allocation under each posterior
};

// The end-to-end loop: fold observations through the calibration mode carried
// by `initial`, re-solving the allocation after every period (warm-started
// from the previous optimum).
ReserveCycle reserve_update_cycle(const AllocationProblem& tmpl, const PeriodGrid& grid,
                                  const std::vector<ObservationBatch>& batches,
                                  const PosteriorState& initial);

}  // namespace riskcap
