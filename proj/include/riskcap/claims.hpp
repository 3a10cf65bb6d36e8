#pragma once

#include "riskcap/rng.hpp"

namespace riskcap {

// Claim size distribution of one business line in one environmental state.
// Exponential claims carry the full exact machinery; Gaussian claims are
// supported by the asymptotic and Monte Carlo paths (values are not
// truncated, negative claims increase the surplus).
class ClaimDistribution {
 public:
  enum class Kind { Exponential, Gaussian };

  static ClaimDistribution exponential_rate(double theta);
  static ClaimDistribution exponential_mean(double mean);
  static ClaimDistribution gaussian(double mean, double sd);

  Kind kind() const { return kind_; }
  bool is_exponential() const { return kind_ == Kind::Exponential; }

  double mean() const;
  double rate() const;     // exponential only
  double std_dev() const;  // gaussian only

  // Moment generating function E[e^{sC}] and its first two derivatives.
  // Exponential claims require s <= rate - 1e-9; violations throw
  // std::domain_error.
  double mgf(double s) const;
  double mgf_prime(double s) const;
  double mgf_second(double s) const;

  // Largest admissible argument for mgf (rate - 1e-9, or +inf for Gaussian).
  double mgf_sup() const;

  // Log density; -inf for exponential claims at z < 0.
  double log_density(double z) const;

  double sample(Stream& rng) const;

 private:
  ClaimDistribution(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  void check_domain(double s) const;

  Kind kind_;
  double a_;  // exponential: rate; gaussian: mean
  double b_;  // gaussian: standard deviation
};

}  // namespace riskcap
