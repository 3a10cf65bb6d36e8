#include "riskcap/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "riskcap/errors.hpp"
#include "riskcap/numerics.hpp"

namespace riskcap {

int EnvironmentSpec::state_at(int period, Stream& rng) const {
  switch (dynamics) {
    case Dynamics::Fixed:
      return fixed_state;
    case Dynamics::SwitchAt:
      return period <= switch_period ? switch_from : switch_to;
    case Dynamics::Resampled:
    default:
      return rng.categorical(p.data(), n_states);
  }
}

std::vector<int> EnvironmentSpec::realize(int n_periods, Stream& rng) const {
  std::vector<int> states(n_periods);
  for (int m = 1; m <= n_periods; ++m) states[m - 1] = state_at(m, rng);
  return states;
}

void ModelSpec::validate() const {
  if (lines.empty()) throw std::invalid_argument("model: at least one line required");
  const int J = environment.n_states;
  if (J < 1) throw std::invalid_argument("model: at least one environmental state required");
  if (static_cast<int>(environment.p.size()) != J)
    throw std::invalid_argument("model: state distribution size must equal the state count");
  double total = 0.0;
  for (double pj : environment.p) {
    if (!(pj >= 0.0)) throw std::invalid_argument("model: state probabilities must be >= 0");
    total += pj;
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw std::invalid_argument("model: state probabilities must sum to 1");
  auto check_state = [J](int s, const char* what) {
    if (s < 0 || s >= J) {
      std::ostringstream msg;
      msg << "model: " << what << " out of range";
      throw std::invalid_argument(msg.str());
    }
  };
  switch (environment.dynamics) {
    case EnvironmentSpec::Dynamics::Fixed:
      check_state(environment.fixed_state, "fixed state");
      break;
    case EnvironmentSpec::Dynamics::SwitchAt:
      check_state(environment.switch_from, "switch-from state");
      check_state(environment.switch_to, "switch-to state");
      if (environment.switch_period < 1)
        throw std::invalid_argument("model: switch period must be >= 1");
      break;
    case EnvironmentSpec::Dynamics::Resampled:
      break;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const BusinessLine& line = lines[i];
    std::ostringstream where;
    where << "model: line " << (i + 1);
    if (!(line.premium_rate >= 0.0))
      throw std::invalid_argument(where.str() + ": premium rate must be non-negative");
    if (static_cast<int>(line.lambda.size()) != J)
      throw std::invalid_argument(where.str() + ": lambda size must equal the state count");
    if (static_cast<int>(line.claims.size()) != J)
      throw std::invalid_argument(where.str() + ": claim list size must equal the state count");
    for (double lam : line.lambda)
      if (!(lam > 0.0))
        throw std::invalid_argument(where.str() + ": claim intensities must be positive");
  }
}

double kappa(const BusinessLine& line, int state, double s) {
  return line.lambda[state] * (line.claims[state].mgf(s) - 1.0) - line.premium_rate * s;
}

double kappa_prime(const BusinessLine& line, int state, double s) {
  return line.lambda[state] * line.claims[state].mgf_prime(s) - line.premium_rate;
}

double kappa_second(const BusinessLine& line, int state, double s) {
  return line.lambda[state] * line.claims[state].mgf_second(s);
}

bool net_profit(const BusinessLine& line, int state) {
  return line.lambda[state] * line.claims[state].mean() < line.premium_rate;
}

double lundberg_root(const BusinessLine& line, int state) {
  if (!net_profit(line, state))
    throw NumericalError("lundberg_root: net profit condition violated, no positive root");
  const ClaimDistribution& claim = line.claims[state];
  double hi;
  if (claim.is_exponential()) {
    hi = claim.mgf_sup();
    if (!(kappa(line, state, hi) > 0.0))
      throw NumericalError("lundberg_root: no sign change up to the mgf domain edge");
  } else {
    hi = 1.0;
    int growth = 0;
    while (!(kappa(line, state, hi) > 0.0)) {
      hi *= 2.0;
      if (++growth > 200) throw NumericalError("lundberg_root: bracket growth failed");
    }
  }
  // kappa(0) = 0, so bracket strictly away from the trivial root.
  const double lo = std::min(1e-12, 0.5 * hi);
  return find_root([&](double s) { return kappa(line, state, s); }, lo, hi, 1e-10);
}

}  // namespace riskcap
