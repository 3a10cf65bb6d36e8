#include "riskcap/allocate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "riskcap/errors.hpp"
#include "riskcap/simulate.hpp"

namespace riskcap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArfwedsonFloor = 1e-9;  // the approximation needs u > 0

// Per-line mixture component phi_i^j(u_i); reserves below the floor are
// evaluated at the floor when the resolved method is Arfwedson.
double line_ruin_value(const AllocationProblem& prob, int i, int j, double u) {
  const BusinessLine& line = prob.model.lines[i];
  RuinMethod method = prob.per_line_method;
  if (method == RuinMethod::Auto)
    method = line.claims[j].is_exponential() ? RuinMethod::Exact : RuinMethod::Arfwedson;
  if (method == RuinMethod::Arfwedson) u = std::max(u, kArfwedsonFloor);
  return ruin_prob(line, j, u, prob.T, method, prob.mc).value;
}

// Evaluates every constraint probability at one reserve vector, computing each
// per-line phi_i^j once and reusing it across constraints. The combination
// arithmetic mirrors subset_prob term for term.
class ConstraintEvaluator {
 public:
  explicit ConstraintEvaluator(const AllocationProblem& prob) : prob_(prob) {
    needed_.assign(prob.model.n_lines(), false);
    for (const auto& c : prob_.constraints)
      if (c.mode != SubsetMode::AggregateRuin)
        for (int i : c.subset) needed_[i] = true;
  }

  std::vector<double> operator()(const std::vector<double>& u) const {
    const int n = prob_.model.n_lines();
    const int J = prob_.model.n_states();
    std::vector<std::vector<double>> phi(n);
    for (int i = 0; i < n; ++i) {
      if (!needed_[i]) continue;
      phi[i].assign(J, 0.0);
      for (int j = 0; j < J; ++j)
        if (prob_.weights[j] > 0.0) phi[i][j] = line_ruin_value(prob_, i, j, u[i]);
    }

    std::vector<double> pi(prob_.constraints.size(), 0.0);
    for (std::size_t m = 0; m < prob_.constraints.size(); ++m) {
      const SubsetConstraintSpec& c = prob_.constraints[m];
      if (c.mode == SubsetMode::AggregateRuin) {
        pi[m] = monte_carlo_ruin(prob_.model, u, prob_.T, StateOrMixture::mixture(prob_.weights),
                                 McEvent::aggregate(c.subset), prob_.mc.n_paths, prob_.mc.seed,
                                 prob_.mc.threads, prob_.mc.period_length)
                    .estimate;
      } else if (c.mode == SubsetMode::AllRuin) {
        std::vector<double> terms;
        terms.reserve(J);
        for (int j = 0; j < J; ++j) {
          if (prob_.weights[j] == 0.0) continue;
          double log_term = std::log(prob_.weights[j]);
          for (int i : c.subset) log_term += std::log(phi[i][j]);
          terms.push_back(log_term);
        }
        double peak = -kInf;
        for (double t : terms) peak = std::max(peak, t);
        if (peak == -kInf) continue;
        double acc = 0.0;
        for (double t : terms) acc += std::exp(t - peak);
        pi[m] = std::exp(peak) * acc;
      } else {
        double value = 0.0;
        for (int j = 0; j < J; ++j) {
          if (prob_.weights[j] == 0.0) continue;
          double log_survival = 0.0;
          for (int i : c.subset) log_survival += std::log1p(-phi[i][j]);
          value += prob_.weights[j] * (-std::expm1(log_survival));
        }
        pi[m] = value;
      }
    }
    return pi;
  }

 private:
  const AllocationProblem& prob_;
  std::vector<char> needed_;
};

double mixture_ruin(const AllocationProblem& prob, int i, double u) {
  double acc = 0.0;
  for (int j = 0; j < prob.model.n_states(); ++j)
    if (prob.weights[j] > 0.0) acc += prob.weights[j] * line_ruin_value(prob, i, j, u);
  return acc;
}

// Reserve putting the line's mixture ruin probability on a target level;
// used only to seed the simplex, so a loose tolerance is fine.
double singleton_reserve(const AllocationProblem& prob, int i, double target, double fallback) {
  auto g = [&](double u) { return mixture_ruin(prob, i, u) - target; };
  if (g(0.0) <= 0.0) return 0.0;
  double hi = std::max(fallback, 1.0);
  int doublings = 0;
  while (g(hi) > 0.0) {
    hi *= 2.0;
    if (++doublings > 60) return fallback;
  }
  return find_root(g, 0.0, hi, 1e-6);
}

// Per-line start: the reserve meeting the tightest constraint that pins this
// line alone. AllRuin singletons bound phi_bar_i directly; any AnyRuin subset
// containing the line does too, because its probability dominates phi_bar_i.
std::vector<double> default_start(const AllocationProblem& prob) {
  const int n = prob.model.n_lines();
  std::vector<double> u0(n);
  for (int i = 0; i < n; ++i) {
    double target = kInf;
    for (const auto& c : prob.constraints) {
      if (std::find(c.subset.begin(), c.subset.end(), i) == c.subset.end()) continue;
      if (c.mode == SubsetMode::AllRuin && c.subset.size() == 1)
        target = std::min(target, c.delta);
      else if (c.mode == SubsetMode::AnyRuin)
        target = std::min(target, c.delta);
    }
    const double fallback = 10.0 * std::max(prob.model.lines[i].premium_rate * prob.T, 1.0);
    u0[i] = std::isfinite(target) ? singleton_reserve(prob, i, target, fallback) : fallback;
  }
  return u0;
}

int worst_constraint_index(const std::vector<double>& slacks) {
  int worst = 0;
  for (std::size_t m = 1; m < slacks.size(); ++m)
    if (slacks[m] < slacks[worst]) worst = static_cast<int>(m);
  return worst;
}

// Least-squares solve of (A^T A + ridge I) x = rhs by Gaussian elimination.
std::vector<double> solve_normal_equations(const std::vector<std::vector<double>>& a,
                                           const std::vector<double>& b) {
  const std::size_t rows = a.size();
  const std::size_t cols = rows == 0 ? 0 : a[0].size();
  std::vector<std::vector<double>> m(cols, std::vector<double>(cols + 1, 0.0));
  double diag_scale = 0.0;
  for (std::size_t p = 0; p < cols; ++p) {
    for (std::size_t q = 0; q < cols; ++q)
      for (std::size_t r = 0; r < rows; ++r) m[p][q] += a[r][p] * a[r][q];
    for (std::size_t r = 0; r < rows; ++r) m[p][cols] += a[r][p] * b[r];
    diag_scale = std::max(diag_scale, m[p][p]);
  }
  const double ridge = 1e-12 * std::max(diag_scale, 1e-300);
  for (std::size_t p = 0; p < cols; ++p) m[p][p] += ridge;

  for (std::size_t p = 0; p < cols; ++p) {
    std::size_t pivot = p;
    for (std::size_t q = p + 1; q < cols; ++q)
      if (std::fabs(m[q][p]) > std::fabs(m[pivot][p])) pivot = q;
    std::swap(m[p], m[pivot]);
    for (std::size_t q = p + 1; q < cols; ++q) {
      const double factor = m[q][p] / m[p][p];
      for (std::size_t k = p; k <= cols; ++k) m[q][k] -= factor * m[p][k];
    }
  }
  std::vector<double> x(cols, 0.0);
  for (std::size_t p = cols; p-- > 0;) {
    double acc = m[p][cols];
    for (std::size_t k = p + 1; k < cols; ++k) acc -= m[p][k] * x[k];
    x[p] = acc / m[p][p];
  }
  return x;
}

}  // namespace

void AllocationProblem::validate() const {
  model.validate();
  if (static_cast<int>(weights.size()) != model.n_states())
    throw std::invalid_argument("allocation: weight vector size must equal the state count");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("allocation: weights must be >= 0");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("allocation: weights must sum to 1");
  if (!(T > 0.0)) throw std::invalid_argument("allocation: T must be > 0");
  if (constraints.empty()) throw std::invalid_argument("allocation: need at least one constraint");
  for (const auto& c : constraints) c.validate(model.n_lines());
  if (u0) {
    if (static_cast<int>(u0->size()) != model.n_lines())
      throw std::invalid_argument("allocation: u0 size must equal the line count");
    for (double ui : *u0)
      if (!(ui >= 0.0)) throw std::invalid_argument("allocation: u0 must be >= 0");
  }
  if (!(penalty.rho0_scale > 0.0) || !(penalty.growth > 1.0) || penalty.max_rounds < 1)
    throw std::invalid_argument("allocation: invalid penalty configuration");
}

AllocationResult solve(const AllocationProblem& problem) {
  problem.validate();
  const int n = problem.model.n_lines();
  const ConstraintEvaluator constraints(problem);

  std::vector<double> delta(problem.constraints.size());
  double min_delta = 1.0;
  for (std::size_t m = 0; m < problem.constraints.size(); ++m) {
    delta[m] = problem.constraints[m].delta;
    min_delta = std::min(min_delta, delta[m]);
  }

  std::vector<double> u = problem.u0 ? *problem.u0 : default_start(problem);
  const std::vector<double> lower(n, 0.0);

  AllocationResult result;
  double rho = problem.penalty.rho0_scale / min_delta;
  auto slacks_at = [&](const std::vector<double>& point) {
    std::vector<double> s = constraints(point);
    for (std::size_t m = 0; m < s.size(); ++m) s[m] = delta[m] - s[m];
    return s;
  };
  auto feasible = [&](const std::vector<double>& s) {
    for (double sm : s)
      if (sm < -problem.penalty.feasibility_tol) return false;
    return true;
  };

  std::vector<double> slacks;
  bool done = false;
  for (int round = 0; round < problem.penalty.max_rounds && !done; ++round) {
    auto objective = [&](const std::vector<double>& x) {
      double value = 0.0;
      for (double xi : x) value += xi;
      const std::vector<double> pi = constraints(x);
      for (std::size_t m = 0; m < pi.size(); ++m) {
        const double violation = pi[m] - delta[m];
        if (violation > 0.0) value += rho * violation * violation;
      }
      return value;
    };
    const MinimizeResult res = minimize(objective, u, lower, {}, problem.simplex);
    u = res.x;
    result.evaluations += res.evaluations;
    result.converged = res.converged;
    result.penalty_rounds = round + 1;
    slacks = slacks_at(u);
    done = feasible(slacks);
    rho *= problem.penalty.growth;
  }

  if (!done) {
    for (int i = 0; i < n; ++i) {
      const double floor =
          std::max(0.01 * problem.model.lines[i].premium_rate * problem.T, 0.01);
      u[i] = std::max(u[i], floor);
    }
    while (!done && result.restoration_steps < problem.penalty.restoration_max) {
      for (double& ui : u) ui *= 1.05;
      ++result.restoration_steps;
      slacks = slacks_at(u);
      done = feasible(slacks);
    }
  }
  if (!done) {
    const int worst = worst_constraint_index(slacks);
    std::ostringstream msg;
    msg << "allocation infeasible: constraint " << worst << " ("
        << to_string(problem.constraints[worst].mode) << ", delta "
        << problem.constraints[worst].delta << ") still violated by " << -slacks[worst]
        << " after penalty escalation and restoration";
    throw InfeasibleError(msg.str(), worst);
  }

  result.u_star = u;
  result.objective = 0.0;
  for (double ui : u) result.objective += ui;
  result.slacks = slacks;
  for (std::size_t m = 0; m < slacks.size(); ++m)
    if (slacks[m] < problem.penalty.active_tol) result.active.push_back(static_cast<int>(m));
  return result;
}

KktReport kkt_report(const AllocationProblem& problem, const std::vector<double>& u_star) {
  problem.validate();
  const int n = problem.model.n_lines();
  if (static_cast<int>(u_star.size()) != n)
    throw std::invalid_argument("kkt_report: point size must equal the line count");
  const ConstraintEvaluator constraints(problem);

  KktReport report;
  const std::vector<double> pi = constraints(u_star);
  for (std::size_t m = 0; m < pi.size(); ++m)
    if (problem.constraints[m].delta - pi[m] < problem.penalty.active_tol)
      report.active.push_back(static_cast<int>(m));
  if (report.active.empty()) {
    report.descent_direction = true;  // objective gradient (all ones) is unopposed
    return report;
  }

  report.gradients.assign(report.active.size(), std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    const double h = 1e-4 * std::max(1.0, u_star[i]);
    std::vector<double> up = u_star;
    std::vector<double> down = u_star;
    up[i] += h;
    down[i] = std::max(0.0, u_star[i] - h);
    const std::vector<double> pi_up = constraints(up);
    const std::vector<double> pi_down = constraints(down);
    const double denom = up[i] - down[i];
    for (std::size_t a = 0; a < report.active.size(); ++a)
      report.gradients[a][i] = (pi_up[report.active[a]] - pi_down[report.active[a]]) / denom;
  }

  std::vector<int> free_coords;
  for (int i = 0; i < n; ++i)
    if (u_star[i] > 1e-9) free_coords.push_back(i);

  // Stationarity 1 + sum_a lambda_a d pi_a / d u_i = 0 on free coordinates,
  // solved for the multipliers in least squares.
  std::vector<std::vector<double>> a(free_coords.size(),
                                     std::vector<double>(report.active.size(), 0.0));
  std::vector<double> b(free_coords.size(), -1.0);
  for (std::size_t f = 0; f < free_coords.size(); ++f)
    for (std::size_t k = 0; k < report.active.size(); ++k)
      a[f][k] = report.gradients[k][free_coords[f]];
  report.multipliers = solve_normal_equations(a, b);

  double residual = 0.0;
  for (std::size_t f = 0; f < free_coords.size(); ++f) {
    double r = 1.0;
    for (std::size_t k = 0; k < report.multipliers.size(); ++k)
      r += report.multipliers[k] * a[f][k];
    residual = std::max(residual, std::fabs(r));
  }
  report.stationarity_residual = residual;
  report.multipliers_nonnegative = true;
  for (double lambda : report.multipliers)
    if (lambda < -1e-6) report.multipliers_nonnegative = false;
  return report;
}

const char* to_string(SubsetFamily family) {
  switch (family) {
    case SubsetFamily::Singletons: return "singletons";
    case SubsetFamily::FullAndSingletons: return "full_and_singletons";
    case SubsetFamily::AllSubsets: return "all_subsets";
  }
  return "?";
}

std::vector<SubsetConstraintSpec> make_subset_family(SubsetFamily family, int n_lines,
                                                     SubsetMode mode, double base) {
  if (n_lines < 1) throw std::invalid_argument("subset family: need at least one line");
  if (n_lines > 20) throw std::invalid_argument("subset family: too many lines to enumerate");
  if (!(base > 0.0 && base < 1.0))
    throw std::invalid_argument("subset family: base must lie in (0,1)");

  auto constraint = [&](std::vector<int> subset) {
    SubsetConstraintSpec c;
    c.delta = std::pow(base, static_cast<double>(subset.size()));
    c.mode = mode;
    c.subset = std::move(subset);
    return c;
  };

  std::vector<SubsetConstraintSpec> out;
  std::vector<int> all(n_lines);
  for (int i = 0; i < n_lines; ++i) all[i] = i;

  switch (family) {
    case SubsetFamily::Singletons:
      for (int i = 0; i < n_lines; ++i) out.push_back(constraint({i}));
      break;
    case SubsetFamily::FullAndSingletons:
      for (int i = 0; i < n_lines; ++i) out.push_back(constraint({i}));
      if (n_lines > 1) out.push_back(constraint(all));
      break;
    case SubsetFamily::AllSubsets:
      for (unsigned mask = 1; mask < (1u << n_lines); ++mask) {
        std::vector<int> subset;
        for (int i = 0; i < n_lines; ++i)
          if (mask & (1u << i)) subset.push_back(i);
        out.push_back(constraint(std::move(subset)));
      }
      break;
  }
  return out;
}

ReserveCycle reserve_update_cycle(const AllocationProblem& tmpl, const PeriodGrid& grid,
                                  const std::vector<ObservationBatch>& batches,
                                  const PosteriorState& initial) {
  ReserveCycle cycle;
  cycle.posterior = calibrate_trace(tmpl.model, grid, batches, initial);
  cycle.allocations.reserve(cycle.posterior.size());
  AllocationProblem prob = tmpl;
  for (const PosteriorState& post : cycle.posterior) {
    prob.weights = post.p;
    AllocationResult res = solve(prob);
    prob.u0 = res.u_star;  // warm start for the next period
    cycle.allocations.push_back(std::move(res));
  }
  return cycle;
}

}  // namespace riskcap
