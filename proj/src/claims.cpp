#include "riskcap/claims.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace riskcap {

namespace {
constexpr double kMgfMargin = 1e-9;
constexpr double kHalfLog2Pi = 0.91893853320467274178;
}  // namespace

ClaimDistribution ClaimDistribution::exponential_rate(double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("exponential claim rate must be positive");
  return {Kind::Exponential, theta, 0.0};
}

ClaimDistribution ClaimDistribution::exponential_mean(double mean) {
  if (!(mean > 0.0)) throw std::invalid_argument("exponential claim mean must be positive");
  return {Kind::Exponential, 1.0 / mean, 0.0};
}

ClaimDistribution ClaimDistribution::gaussian(double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("gaussian claim std dev must be positive");
  if (!std::isfinite(mean)) throw std::invalid_argument("gaussian claim mean must be finite");
  return {Kind::Gaussian, mean, sd};
}

double ClaimDistribution::mean() const {
  return kind_ == Kind::Exponential ? 1.0 / a_ : a_;
}

double ClaimDistribution::rate() const {
  if (kind_ != Kind::Exponential) throw std::logic_error("rate(): not an exponential claim");
  return a_;
}

double ClaimDistribution::std_dev() const {
  if (kind_ != Kind::Gaussian) throw std::logic_error("std_dev(): not a gaussian claim");
  return b_;
}

void ClaimDistribution::check_domain(double s) const {
  if (kind_ == Kind::Exponential && s > a_ - kMgfMargin)
    throw std::domain_error("exponential mgf evaluated at s too close to the claim rate");
}

double ClaimDistribution::mgf(double s) const {
  check_domain(s);
  if (kind_ == Kind::Exponential) return a_ / (a_ - s);
  return std::exp(a_ * s + 0.5 * b_ * b_ * s * s);
}

double ClaimDistribution::mgf_prime(double s) const {
  check_domain(s);
  if (kind_ == Kind::Exponential) {
    const double d = a_ - s;
    return a_ / (d * d);
  }
  return (a_ + b_ * b_ * s) * mgf(s);
}

double ClaimDistribution::mgf_second(double s) const {
  check_domain(s);
  if (kind_ == Kind::Exponential) {
    const double d = a_ - s;
    return 2.0 * a_ / (d * d * d);
  }
  const double m1 = a_ + b_ * b_ * s;
  return (b_ * b_ + m1 * m1) * mgf(s);
}

double ClaimDistribution::mgf_sup() const {
  return kind_ == Kind::Exponential ? a_ - kMgfMargin : std::numeric_limits<double>::infinity();
}

double ClaimDistribution::log_density(double z) const {
  if (kind_ == Kind::Exponential) {
    if (z < 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(a_) - a_ * z;
  }
  const double t = (z - a_) / b_;
  return -kHalfLog2Pi - std::log(b_) - 0.5 * t * t;
}

double ClaimDistribution::sample(Stream& rng) const {
  return kind_ == Kind::Exponential ? rng.exponential(a_) : rng.normal(a_, b_);
}

}  // namespace riskcap
