#include "riskcap/ruin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "riskcap/errors.hpp"
#include "riskcap/simulate.hpp"

namespace riskcap {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kClampWindow = 1e-9;
constexpr double kBoundaryRelTol = 1e-9;

double clamp_probability(double raw, const char* what) {
  if (raw >= 0.0 && raw <= 1.0) return raw;
  if (raw > -kClampWindow && raw < 1.0 + kClampWindow) return std::clamp(raw, 0.0, 1.0);
  std::ostringstream msg;
  msg << what << ": value " << raw << " outside [0,1] beyond tolerance";
  throw NumericalError(msg.str());
}

}  // namespace

const char* to_string(RuinMethod method) {
  switch (method) {
    case RuinMethod::Auto: return "auto";
    case RuinMethod::Exact: return "exact";
    case RuinMethod::Arfwedson: return "arfwedson";
    case RuinMethod::MonteCarlo: return "monte_carlo";
  }
  return "?";
}

const char* to_string(ArfwedsonRegime regime) {
  switch (regime) {
    case ArfwedsonRegime::Case1Early: return "case1_early";
    case ArfwedsonRegime::Case1Critical: return "case1_critical";
    case ArfwedsonRegime::Case1Late: return "case1_late";
    case ArfwedsonRegime::Case2Early: return "case2_early";
    case ArfwedsonRegime::Case2Critical: return "case2_critical";
    case ArfwedsonRegime::Case2Late: return "case2_late";
    case ArfwedsonRegime::Case3: return "case3_zero_drift";
  }
  return "?";
}

const char* to_string(SubsetMode mode) {
  switch (mode) {
    case SubsetMode::AllRuin: return "all_ruin";
    case SubsetMode::AnyRuin: return "any_ruin";
    case SubsetMode::AggregateRuin: return "aggregate_ruin";
  }
  return "?";
}

void RuinQuery::validate() const {
  if (!(u >= 0.0)) throw std::invalid_argument("ruin query: u must be >= 0");
  if (!(T > 0.0)) throw std::invalid_argument("ruin query: T must be > 0");
}

void SubsetConstraintSpec::validate(int n_lines) const {
  if (subset.empty()) throw std::invalid_argument("constraint: subset must be nonempty");
  for (int i : subset)
    if (i < 0 || i >= n_lines) throw std::invalid_argument("constraint: line index out of range");
  std::vector<int> sorted = subset;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("constraint: subset contains a duplicate line index");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("constraint: delta must lie in (0,1)");
}

double ruin_exact_exponential(double u, double T, double lambda, double theta, double r,
                              const QuadratureConfig& quad) {
  if (!(u >= 0.0)) throw std::invalid_argument("ruin_exact_exponential: u must be >= 0");
  if (!(T > 0.0)) throw std::invalid_argument("ruin_exact_exponential: T must be > 0");
  if (!(lambda > 0.0) || !(theta > 0.0))
    throw std::invalid_argument("ruin_exact_exponential: lambda and theta must be positive");
  if (!(r > 0.0))
    throw std::invalid_argument(
        "ruin_exact_exponential: r must be positive (the formula rescales time by r)");

  const double c = lambda / (theta * r);
  const double sqc = std::sqrt(c);
  const double time_amp = 2.0 * T * std::sqrt(theta * r * lambda);
  const double time_off = (r * theta + lambda) * T;
  const double cap_amp = u * theta;
  const double freq = u * std::sqrt(theta * lambda / r);

  // f2 and f3 are written in product form (cos A - cos B and 1 + c - 2 sqrt(c) cos mu
  // rewritten through half-angle identities) so that their mutual zero at mu = 0
  // when lambda = theta r cancels without catastrophic rounding.
  auto integrand = [&](double mu) {
    const double cos_mu = std::cos(mu);
    const double f1 = c * std::exp(time_amp * cos_mu - time_off + cap_amp * (sqc * cos_mu - 1.0));
    const double phase = freq * std::sin(mu);
    const double f2 = 2.0 * std::sin(phase + mu) * std::sin(mu);
    const double half = std::sin(0.5 * mu);
    const double f3 = (1.0 - sqc) * (1.0 - sqc) + 4.0 * sqc * half * half;
    return f1 * f2 / f3;
  };

  // f3(0) = (1 - sqrt(c))^2 vanishes when lambda = theta r; start a hair
  // inside the interval in that case (the integrand's limit there is finite).
  const double a = (sqc == 1.0) ? 1e-12 : 0.0;

  // For large T the mass sits in a spike of width ~1/sqrt(time_amp) at mu = 0,
  // where both endpoints evaluate to zero; a single adaptive pass over [0, pi]
  // never samples it. Integrate over geometrically growing panels instead so
  // the first panel always straddles the spike.
  std::vector<double> cuts{a};
  for (double b = kPi / 1024.0; b < kPi; b *= 2.0)
    if (b > a) cuts.push_back(b);
  cuts.push_back(kPi);
  QuadratureConfig panel = quad;
  panel.tolerance = quad.tolerance / static_cast<double>(cuts.size() - 1);
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
    integral += integrate(integrand, cuts[k], cuts[k + 1], panel);
  integral /= kPi;
  const double raw = (theta * r > lambda)
                         ? c * std::exp(-(theta - lambda / r) * u) - integral
                         : 1.0 - integral;
  return clamp_probability(raw, "ruin_exact_exponential");
}

namespace {

// Increasing-function bracket solve for kappa'(s) = target.
double solve_kappa_prime(const BusinessLine& line, int state, double target) {
  auto g = [&](double s) { return kappa_prime(line, state, s) - target; };
  const double sup = line.claims[state].mgf_sup();
  double lo = 0.0;
  if (!(g(lo) < 0.0)) {
    double step = 1.0;
    int tries = 0;
    do {
      lo -= step;
      step *= 2.0;
      if (++tries > 200)
        throw NumericalError("ruin_arfwedson: cannot bracket kappa' from below");
    } while (!(g(lo) < 0.0));
  }
  double hi = std::min(1.0, sup);
  int tries = 0;
  while (!(g(hi) > 0.0)) {
    if (hi >= sup)
      throw NumericalError(
          "ruin_arfwedson: kappa'(alpha) = u/T unsolvable in the MGF domain; use Monte Carlo");
    hi = std::min(2.0 * hi, sup);
    if (++tries > 200)
      throw NumericalError(
          "ruin_arfwedson: kappa'(alpha) = u/T unsolvable in the MGF domain; use Monte Carlo");
  }
  return find_root(g, lo, hi, 1e-12);
}

}  // namespace

ArfwedsonResult ruin_arfwedson(const BusinessLine& line, int state, double u, double T) {
  if (!(u > 0.0)) throw std::invalid_argument("ruin_arfwedson: u must be > 0 (asymptotic in u)");
  if (!(T > 0.0)) throw std::invalid_argument("ruin_arfwedson: T must be > 0");
  const double lambda = line.lambda[state];
  const double r = line.premium_rate;
  const ClaimDistribution& claim = line.claims[state];
  const double drift = r - lambda * claim.mean();

  const double alpha = solve_kappa_prime(line, state, u / T);
  const double kappa_alpha = kappa(line, state, alpha);
  const double beta = alpha - (T / u) * kappa_alpha;

  // Minimizer of kappa, which separates alpha from the companion root.
  const double s_star = solve_kappa_prime(line, state, 0.0);
  const double kappa_star = kappa(line, state, s_star);

  // When u/T sits below the float resolution of the saddlepoint the two roots
  // of kappa(s) = kappa(alpha) collapse onto the minimizer and the companion
  // term vanishes.
  double alpha_tilde = alpha;
  double k_tilde = 0.0;
  if (kappa_alpha > kappa_star) {
    double s_lo = s_star - 1.0;
    double step = 1.0;
    int tries = 0;
    while (!(kappa(line, state, s_lo) > kappa_alpha)) {
      step *= 2.0;
      s_lo -= step;
      if (++tries > 200) throw NumericalError("ruin_arfwedson: cannot bracket alpha-tilde");
    }
    alpha_tilde = find_root([&](double s) { return kappa(line, state, s) - kappa_alpha; }, s_lo,
                            s_star, 1e-12);
    k_tilde = -(alpha - alpha_tilde) /
              (alpha * alpha_tilde * std::sqrt(2.0 * kPi * T * lambda * claim.mgf_second(alpha)));
  }

  ArfwedsonDiagnostics diag;
  diag.alpha = alpha;
  diag.alpha_tilde = alpha_tilde;
  diag.beta = beta;
  diag.k_tilde = k_tilde;

  double raw;
  if (drift > 0.0) {
    diag.gamma = lundberg_root(line, state);
    diag.big_k = drift / (lambda * claim.mgf_prime(diag.gamma) - r);
    const double critical = u / kappa_prime(line, state, diag.gamma);
    if (std::fabs(T - critical) <= kBoundaryRelTol * std::max(std::fabs(T), std::fabs(critical))) {
      diag.regime = ArfwedsonRegime::Case1Critical;
      raw = 0.5 * diag.big_k * std::exp(-diag.gamma * u);
    } else if (T < critical) {
      diag.regime = ArfwedsonRegime::Case1Early;
      raw = k_tilde * std::exp(-beta * u);
    } else {
      diag.regime = ArfwedsonRegime::Case1Late;
      raw = diag.big_k * std::exp(-diag.gamma * u) + k_tilde * std::exp(-beta * u);
    }
  } else if (drift < 0.0) {
    const double critical = u / kappa_prime(line, state, 0.0);
    if (std::fabs(T - critical) <= kBoundaryRelTol * std::max(std::fabs(T), std::fabs(critical))) {
      diag.regime = ArfwedsonRegime::Case2Critical;
      raw = alpha / (2.0 * alpha_tilde);
    } else if (T < critical) {
      diag.regime = ArfwedsonRegime::Case2Early;
      raw = k_tilde * std::exp(-beta * u);
    } else {
      diag.regime = ArfwedsonRegime::Case2Late;
      raw = alpha / alpha_tilde + k_tilde * std::exp(-beta * u);
    }
  } else {
    diag.regime = ArfwedsonRegime::Case3;
    raw = k_tilde * std::exp(-beta * u);
  }

  if (!std::isfinite(raw))
    throw NumericalError("ruin_arfwedson: non-finite approximation value");
  diag.raw_value = raw;
  diag.clamp_warning = (raw < -kClampWindow) || (raw > 1.0 + kClampWindow);
  ArfwedsonResult result;
  result.value = std::clamp(raw, 0.0, 1.0);
  result.diag = diag;
  return result;
}

RuinResult ruin_prob(const BusinessLine& line, int state, double u, double T, RuinMethod method,
                     const McOptions& mc) {
  if (state < 0 || state >= static_cast<int>(line.lambda.size()))
    throw std::invalid_argument("ruin_prob: state index out of range");
  const bool exponential = line.claims[state].is_exponential();
  RuinMethod chosen = method;
  if (chosen == RuinMethod::Auto)
    chosen = exponential ? RuinMethod::Exact : RuinMethod::Arfwedson;

  RuinResult result;
  result.method = chosen;
  switch (chosen) {
    case RuinMethod::Exact: {
      if (!exponential)
        throw std::invalid_argument("ruin_prob: Exact method requires exponential claims");
      result.value = ruin_exact_exponential(u, T, line.lambda[state],
                                            line.claims[state].rate(), line.premium_rate);
      break;
    }
    case RuinMethod::Arfwedson: {
      ArfwedsonResult arf = ruin_arfwedson(line, state, u, T);
      result.value = arf.value;
      result.arfwedson = arf.diag;
      break;
    }
    case RuinMethod::MonteCarlo: {
      ModelSpec single;
      single.lines.push_back(line);
      const int J = static_cast<int>(line.lambda.size());
      single.environment.n_states = J;
      single.environment.p.assign(J, 0.0);
      single.environment.p[state] = 1.0;
      single.environment.dynamics = EnvironmentSpec::Dynamics::Fixed;
      single.environment.fixed_state = state;
      const McEstimate est =
          monte_carlo_ruin(single, {u}, T, StateOrMixture::fixed(state), McEvent::per_line(0),
                           mc.n_paths, mc.seed, mc.threads, mc.period_length);
      result.value = est.estimate;
      result.mc_standard_error = est.standard_error;
      break;
    }
    case RuinMethod::Auto:
      break;  // unreachable
  }
  return result;
}

RuinResult ruin_prob(const ModelSpec& model, const RuinQuery& query, RuinMethod method,
                     const McOptions& mc) {
  query.validate();
  if (query.line < 0 || query.line >= model.n_lines())
    throw std::invalid_argument("ruin_prob: line index out of range");
  const BusinessLine& line = model.lines[query.line];
  if (!query.marginal) return ruin_prob(line, query.state, query.u, query.T, method, mc);

  RuinResult result;
  result.method = method;
  double value = 0.0;
  for (int j = 0; j < model.n_states(); ++j) {
    const double w = model.environment.p[j];
    if (w == 0.0) continue;
    RuinResult part = ruin_prob(line, j, query.u, query.T, method, mc);
    result.method = part.method;
    value += w * part.value;
  }
  result.value = value;
  return result;
}

double subset_prob(const ModelSpec& model, const std::vector<double>& weights,
                   const SubsetConstraintSpec& constraint, const std::vector<double>& u, double T,
                   RuinMethod per_line_method, const McOptions& mc) {
  const int n = model.n_lines();
  const int J = model.n_states();
  constraint.validate(n);
  if (static_cast<int>(weights.size()) != J)
    throw std::invalid_argument("subset_prob: weight vector size must equal the state count");
  if (static_cast<int>(u.size()) != n)
    throw std::invalid_argument("subset_prob: reserve vector size must equal the line count");
  for (double ui : u)
    if (!(ui >= 0.0)) throw std::invalid_argument("subset_prob: reserves must be >= 0");

  if (constraint.mode == SubsetMode::AggregateRuin) {
    return monte_carlo_ruin(model, u, T, StateOrMixture::mixture(weights),
                            McEvent::aggregate(constraint.subset), mc.n_paths, mc.seed, mc.threads,
                            mc.period_length)
        .estimate;
  }

  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (constraint.mode == SubsetMode::AllRuin) {
    // log-sum-exp over states of log p_j + sum_i log phi_i^j
    std::vector<double> terms;
    terms.reserve(J);
    for (int j = 0; j < J; ++j) {
      if (weights[j] == 0.0) continue;
      double log_term = std::log(weights[j]);
      for (int i : constraint.subset) {
        const double phi =
            ruin_prob(model.lines[i], j, u[i], T, per_line_method, mc).value;
        log_term += std::log(phi);
      }
      terms.push_back(log_term);
    }
    double peak = neg_inf;
    for (double t : terms) peak = std::max(peak, t);
    if (peak == neg_inf) return 0.0;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - peak);
    return std::exp(peak) * acc;
  }

  // AnyRuin: sum_j p_j (1 - prod_i (1 - phi_i^j)), with the inner complement
  // kept accurate for tiny phi via log1p/expm1.
  double value = 0.0;
  for (int j = 0; j < J; ++j) {
    if (weights[j] == 0.0) continue;
    double log_survival = 0.0;
    for (int i : constraint.subset) {
      const double phi = ruin_prob(model.lines[i], j, u[i], T, per_line_method, mc).value;
      log_survival += std::log1p(-phi);
    }
    value += weights[j] * (-std::expm1(log_survival));
  }
  return value;
}

}  // namespace riskcap
