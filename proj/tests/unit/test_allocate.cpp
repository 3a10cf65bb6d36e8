#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "riskcap/allocate.hpp"
#include "riskcap/errors.hpp"
#include "riskcap/numerics.hpp"
#include "riskcap/scenarios.hpp"

using namespace riskcap;

namespace {

ModelSpec flat_model(std::vector<double> lambdas) {
  ModelSpec model;
  model.environment.n_states = 1;
  model.environment.p = {1.0};
  for (double lam : lambdas) {
    BusinessLine line;
    line.premium_rate = 1.0;
    line.lambda = {lam};
    line.claims = {ClaimDistribution::exponential_rate(1.0)};
    model.lines.push_back(line);
  }
  return model;
}

AllocationProblem singleton_problem(std::vector<double> lambdas, double delta, double T) {
  AllocationProblem problem;
  problem.model = flat_model(lambdas);
  problem.weights = {1.0};
  problem.T = T;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    SubsetConstraintSpec spec;
    spec.subset = {static_cast<int>(i)};
    spec.mode = SubsetMode::AllRuin;
    spec.delta = delta;
    problem.constraints.push_back(spec);
  }
  return problem;
}

// Independent 1-D oracle: bisect the exact ruin probability to the cap.
double reserve_oracle(double lambda, double delta, double T) {
  return find_root(
      [&](double u) { return ruin_exact_exponential(u, T, lambda, 1.0, 1.0) - delta; }, 0.0,
      300.0, 1e-10);
}

}  // namespace

TEST_SUITE("allocate") {

TEST_CASE("one-line problem hits the constraint boundary") {
  const double delta = 0.01, T = 1.0;
  const AllocationResult res = solve(singleton_problem({0.5}, delta, T));
  const double oracle = reserve_oracle(0.5, delta, T);
  CHECK(res.converged);
  CHECK(std::fabs(res.u_star[0] - oracle) < 5e-3);
  CHECK(res.slacks[0] >= -1e-6);
  CHECK(res.active == std::vector<int>{0});
}

TEST_CASE("symmetric two-line problem splits evenly") {
  const AllocationResult res = solve(singleton_problem({0.5, 0.5}, 0.01, 1.0));
  CHECK(res.converged);
  CHECK(res.u_star[0] == doctest::Approx(res.u_star[1]).epsilon(2e-3));
  const double oracle = reserve_oracle(0.5, 0.01, 1.0);
  CHECK(std::fabs(res.u_star[0] - oracle) < 5e-3);
  CHECK(std::fabs(res.u_star[1] - oracle) < 5e-3);
  CHECK(res.objective == doctest::Approx(res.u_star[0] + res.u_star[1]));
}

TEST_CASE("tighter caps demand more capital") {
  const AllocationResult loose = solve(singleton_problem({0.5}, 0.01, 1.0));
  const AllocationResult tight = solve(singleton_problem({0.5}, 0.001, 1.0));
  CHECK(tight.u_star[0] > loose.u_star[0] + 1.0);
}

TEST_CASE("joint constraints price in the dependence structure") {
  // Two lines and a pairwise all-ruin cap equal to the product of the
  // singleton caps: at the singleton optimum the pair constraint is exactly
  // tight, so adding it must not move the solution materially.
  AllocationProblem problem = singleton_problem({0.5, 0.7}, 0.01, 1.0);
  SubsetConstraintSpec pair;
  pair.subset = {0, 1};
  pair.mode = SubsetMode::AllRuin;
  pair.delta = 0.01 * 0.01;
  problem.constraints.push_back(pair);
  const AllocationResult res = solve(problem);
  CHECK(res.converged);
  CHECK(std::fabs(res.u_star[0] - reserve_oracle(0.5, 0.01, 1.0)) < 5e-3);
  CHECK(std::fabs(res.u_star[1] - reserve_oracle(0.7, 0.01, 1.0)) < 5e-3);
  for (double s : res.slacks) CHECK(s >= -1e-6);

  // A strictly tighter pair cap must push at least one reserve up.
  problem.constraints.back().delta = 0.01 * 0.01 / 4.0;
  const AllocationResult tighter = solve(problem);
  CHECK(tighter.objective > res.objective + 0.1);
}

TEST_CASE("any-ruin caps dominate singleton caps") {
  AllocationProblem problem = singleton_problem({0.5, 0.7}, 1.0, 1.0);
  problem.constraints.clear();
  SubsetConstraintSpec any;
  any.subset = {0, 1};
  any.mode = SubsetMode::AnyRuin;
  any.delta = 0.02;
  problem.constraints.push_back(any);
  const AllocationResult res = solve(problem);
  CHECK(res.converged);
  // The union cap binds and both marginals stay below it.
  CHECK(res.slacks[0] >= -1e-6);
  CHECK(res.slacks[0] < 1e-4);
  const double f0 = ruin_exact_exponential(res.u_star[0], 1.0, 0.5, 1.0, 1.0);
  const double f1 = ruin_exact_exponential(res.u_star[1], 1.0, 0.7, 1.0, 1.0);
  CHECK(f0 < 0.02);
  CHECK(f1 < 0.02);
  CHECK(1.0 - (1.0 - f0) * (1.0 - f1) == doctest::Approx(0.02).epsilon(5e-3));
}

TEST_CASE("kkt report identifies a boundary optimum") {
  const AllocationProblem problem = singleton_problem({0.5}, 0.01, 1.0);
  const AllocationResult res = solve(problem);
  const KktReport kkt = kkt_report(problem, res.u_star);
  REQUIRE(kkt.active.size() == 1);
  CHECK_FALSE(kkt.descent_direction);
  CHECK(kkt.multipliers_nonnegative);
  CHECK(kkt.stationarity_residual < 1e-3);

  // Stationarity pins the multiplier to -1 / phi'(u*).
  const double h = 1e-5;
  const double phi_prime = (ruin_exact_exponential(res.u_star[0] + h, 1.0, 0.5, 1.0, 1.0) -
                            ruin_exact_exponential(res.u_star[0] - h, 1.0, 0.5, 1.0, 1.0)) /
                           (2.0 * h);
  CHECK(kkt.multipliers[0] == doctest::Approx(-1.0 / phi_prime).epsilon(1e-3));
}

TEST_CASE("kkt report flags an interior point as non-stationary") {
  const AllocationProblem problem = singleton_problem({0.5}, 0.01, 1.0);
  const KktReport kkt = kkt_report(problem, {40.0});
  CHECK(kkt.active.empty());
  CHECK(kkt.descent_direction);
}

TEST_CASE("unreachable caps raise an infeasibility error naming the constraint") {
  // A cap around u = 40 with an optimizer crippled to stay near u = 0, so the
  // penalty rounds and the restoration sweep both run out while infeasible.
  AllocationProblem problem;
  problem.model = flat_model({0.5});
  problem.weights = {1.0};
  problem.T = 1.0;
  SubsetConstraintSpec spec;
  spec.subset = {0};
  spec.mode = SubsetMode::AllRuin;
  spec.delta = 1e-9;
  problem.constraints.push_back(spec);
  problem.u0 = std::vector<double>{0.0};
  problem.simplex.max_iterations = 5;
  problem.simplex.restarts = 0;
  problem.simplex.initial_step = 0.001;
  problem.penalty.max_rounds = 1;
  problem.penalty.restoration_max = 10;
  bool threw = false;
  try {
    solve(problem);
  } catch (const InfeasibleError& e) {
    threw = true;
    CHECK(e.worst_constraint() == 0);
    CHECK(std::string(e.what()).find("constraint") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("subset families expand as documented") {
  const auto singles = make_subset_family(SubsetFamily::Singletons, 3, SubsetMode::AllRuin, 0.01);
  REQUIRE(singles.size() == 3);
  for (const auto& spec : singles) {
    CHECK(spec.subset.size() == 1);
    CHECK(spec.delta == doctest::Approx(0.01));
  }

  const auto full = make_subset_family(SubsetFamily::FullAndSingletons, 3, SubsetMode::AllRuin,
                                       0.01);
  REQUIRE(full.size() == 4);
  CHECK(full.back().subset.size() == 3);
  CHECK(full.back().delta == doctest::Approx(0.01 * 0.01 * 0.01));

  const auto all = make_subset_family(SubsetFamily::AllSubsets, 3, SubsetMode::AnyRuin, 0.1);
  REQUIRE(all.size() == 7);
  int by_size[4] = {0, 0, 0, 0};
  for (const auto& spec : all) {
    ++by_size[spec.subset.size()];
    CHECK(spec.delta == doctest::Approx(std::pow(0.1, spec.subset.size())));
    CHECK(spec.mode == SubsetMode::AnyRuin);
  }
  CHECK(by_size[1] == 3);
  CHECK(by_size[2] == 3);
  CHECK(by_size[3] == 1);

  CHECK_THROWS_AS(make_subset_family(SubsetFamily::AllSubsets, 25, SubsetMode::AllRuin, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_subset_family(SubsetFamily::Singletons, 2, SubsetMode::AllRuin, 1.5),
                  std::invalid_argument);
}

TEST_CASE("allocation problem validation") {
  AllocationProblem problem = singleton_problem({0.5}, 0.01, 1.0);
  CHECK_NOTHROW(problem.validate());
  problem.weights = {0.7};
  CHECK_THROWS_AS(problem.validate(), std::invalid_argument);
  problem.weights = {1.0};
  problem.T = 0.0;
  CHECK_THROWS_AS(problem.validate(), std::invalid_argument);
  problem.T = 1.0;
  problem.constraints.clear();
  CHECK_THROWS_AS(problem.validate(), std::invalid_argument);
  problem = singleton_problem({0.5}, 0.01, 1.0);
  problem.u0 = std::vector<double>{1.0, 2.0};
  CHECK_THROWS_AS(problem.validate(), std::invalid_argument);
}

TEST_CASE("explicit starts and derived starts agree at the optimum") {
  AllocationProblem derived = singleton_problem({0.5, 0.7}, 0.005, 1.0);
  AllocationProblem explicit_start = derived;
  explicit_start.u0 = std::vector<double>{12.0, 12.0};
  const AllocationResult a = solve(derived);
  const AllocationResult b = solve(explicit_start);
  CHECK(a.u_star[0] == doctest::Approx(b.u_star[0]).epsilon(2e-3));
  CHECK(a.u_star[1] == doctest::Approx(b.u_star[1]).epsilon(2e-3));
}

TEST_CASE("reserve cycle tracks the posterior") {
  const AllocationProblem tmpl = example1_problem();
  const PeriodGrid grid = PeriodGrid::uniform(1.0, 8);
  const ObservationRun run = simulate_observations(tmpl.model, grid, 321);
  const ReserveCycle cycle = reserve_update_cycle(
      tmpl, grid, run.batches, PosteriorState::bayes(tmpl.model.environment.p));
  REQUIRE(cycle.posterior.size() == 9);
  REQUIRE(cycle.allocations.size() == 9);
  for (const AllocationResult& res : cycle.allocations) {
    REQUIRE(res.u_star.size() == 2);
    CHECK(res.u_star[0] > 0.0);
    for (double s : res.slacks) CHECK(s >= -1e-6);
  }
  // Line 2 has a state-independent intensity: its reserve must not drift.
  const double first = cycle.allocations.front().u_star[1];
  const double last = cycle.allocations.back().u_star[1];
  CHECK(first == doctest::Approx(last).epsilon(5e-3));
}

}
