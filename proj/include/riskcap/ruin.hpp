#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "riskcap/model.hpp"
#include "riskcap/numerics.hpp"

namespace riskcap {

enum class RuinMethod { Auto, Exact, Arfwedson, MonteCarlo };

const char* to_string(RuinMethod method);

// Finite-time ruin probability query for one line, either conditional on an
// environmental state or marginal over the model's state distribution.
struct RuinQuery {
  double u = 0.0;
  double T = 1.0;
  int line = 0;
  int state = 0;
  bool marginal = false;  // mix over states with the model's p when set

  void validate() const;
};

// Exact finite-time ruin probability for exponential claims: closed branch
// term plus an oscillatory integral over (0, pi) evaluated by adaptive
// Simpson quadrature. The branch is chosen by the sign of theta*r - lambda.
double ruin_exact_exponential(double u, double T, double lambda, double theta, double r,
                              const QuadratureConfig& quad = {});

enum class ArfwedsonRegime {
  Case1Early,     // net profit, T < u/kappa'(gamma)
  Case1Critical,  // net profit, T = u/kappa'(gamma)
  Case1Late,      // net profit, T > u/kappa'(gamma)
  Case2Early,     // no net profit, T < u/kappa'(0)
  Case2Critical,  // no net profit, T = u/kappa'(0)
  Case2Late,      // no net profit, T > u/kappa'(0)
  Case3,          // zero drift, r = lambda E[C]
};

const char* to_string(ArfwedsonRegime regime);

struct ArfwedsonDiagnostics {
  ArfwedsonRegime regime;
  double alpha = 0.0;
  double alpha_tilde = 0.0;
  double beta = 0.0;
  double gamma = 0.0;       // net-profit cases only
  double big_k = 0.0;       // net-profit cases only
  double k_tilde = 0.0;
  double raw_value = 0.0;   // before clamping to [0,1]
  bool clamp_warning = false;  // raw value more than 1e-9 outside [0,1]
};

struct ArfwedsonResult {
  double value = 0.0;
  ArfwedsonDiagnostics diag;
};

// Large-u asymptotic finite-time ruin probability (three drift cases, each
// split at a critical horizon). Requires u > 0 and kappa'(alpha) = u/T
// solvable inside the MGF domain.
ArfwedsonResult ruin_arfwedson(const BusinessLine& line, int state, double u, double T);

struct McOptions {
  long n_paths = 100000;
  std::uint64_t seed = 1;
  int threads = 0;       // 0: one task per hardware thread
  double period_length = 1.0;  // environment dynamics granularity
};

struct RuinResult {
  double value = 0.0;
  RuinMethod method = RuinMethod::Auto;  // method actually used
  double mc_standard_error = 0.0;        // Monte Carlo only
  std::optional<ArfwedsonDiagnostics> arfwedson;
};

// Dispatcher: Auto resolves to Exact for exponential claims and Arfwedson
// otherwise; explicit Exact on non-exponential claims is rejected.
RuinResult ruin_prob(const BusinessLine& line, int state, double u, double T,
                     RuinMethod method = RuinMethod::Auto, const McOptions& mc = {});

// Marginal or conditional query against a full model.
RuinResult ruin_prob(const ModelSpec& model, const RuinQuery& query,
                     RuinMethod method = RuinMethod::Auto, const McOptions& mc = {});

enum class SubsetMode { AllRuin, AnyRuin, AggregateRuin };

const char* to_string(SubsetMode mode);

// Ruin-event constraint on a subset of lines: joint ruin of all lines in the
// subset, ruin of at least one, or ruin of the pooled surplus process.
struct SubsetConstraintSpec {
  std::vector<int> subset;  // 0-based line indices
  double delta = 0.001;
  SubsetMode mode = SubsetMode::AllRuin;

  void validate(int n_lines) const;
};

// Probability of the constraint's ruin event under reserves u, mixing over
// environmental states with the given weights. AllRuin and AnyRuin are
// combined from per-line probabilities in log space; AggregateRuin is a
// Monte Carlo estimate with the seed pinned in mc.
double subset_prob(const ModelSpec& model, const std::vector<double>& weights,
                   const SubsetConstraintSpec& constraint, const std::vector<double>& u, double T,
                   RuinMethod per_line_method = RuinMethod::Auto, const McOptions& mc = {});

}  // namespace riskcap
