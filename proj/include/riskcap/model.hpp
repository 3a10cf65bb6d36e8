#pragma once

#include <vector>

#include "riskcap/claims.hpp"
#include "riskcap/rng.hpp"

namespace riskcap {

// One insured business line: surplus u + r t - sum of claims, where claims
// arrive Poisson(lambda[j]) with sizes from claims[j] while the environment
// sits in state j.
struct BusinessLine {
  double premium_rate = 1.0;
  std::vector<double> lambda;              // per environmental state
  std::vector<ClaimDistribution> claims;   // per environmental state
};

// Latent environmental state shared by every line. States are 0-based in
// code; file formats use 1-based indices.
struct EnvironmentSpec {
  enum class Dynamics { Fixed, SwitchAt, Resampled };

  int n_states = 1;
  std::vector<double> p;  // true/prior state distribution, sums to 1

  Dynamics dynamics = Dynamics::Fixed;
  int fixed_state = 0;
  int switch_period = 1;  // SwitchAt: last period spent in switch_from
  int switch_from = 0;
  int switch_to = 0;

  // State occupied during 1-based period m. Resampled dynamics draw from p.
  int state_at(int period, Stream& rng) const;

  // Realized state sequence for periods 1..n_periods.
  std::vector<int> realize(int n_periods, Stream& rng) const;
};

struct ModelSpec {
  std::vector<BusinessLine> lines;
  EnvironmentSpec environment;

  int n_lines() const { return static_cast<int>(lines.size()); }
  int n_states() const { return environment.n_states; }

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

// Cumulant function kappa(s) = lambda (mgf(s) - 1) - r s of one line in one
// state, with derivatives.
double kappa(const BusinessLine& line, int state, double s);
double kappa_prime(const BusinessLine& line, int state, double s);
double kappa_second(const BusinessLine& line, int state, double s);

// Net profit condition kappa'(0) < 0, i.e. lambda E[C] < r.
bool net_profit(const BusinessLine& line, int state);

// Unique positive root of kappa (the adjustment coefficient). Requires the
// net profit condition; found by bisection to absolute tolerance 1e-10.
double lundberg_root(const BusinessLine& line, int state);

}  // namespace riskcap
