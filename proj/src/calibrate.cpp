#include "riskcap/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "riskcap/errors.hpp"

namespace riskcap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> checked_prior(std::vector<double> prior) {
  if (prior.empty()) throw std::invalid_argument("calibrate: prior must be nonempty");
  double total = 0.0;
  for (double pj : prior) {
    if (!(pj >= 0.0)) throw std::invalid_argument("calibrate: prior entries must be >= 0");
    total += pj;
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw std::invalid_argument("calibrate: prior must sum to 1");
  return prior;
}

// Shared posterior core; Bayes is the w = 1 special case (exact, since
// multiplying a log-prior by 1.0 is the identity).
PosteriorState posterior_core(const PosteriorState& post, const ModelSpec& model,
                              const ObservationBatch& obs, double t_bar, double w) {
  post.validate();
  const int J = model.n_states();
  if (static_cast<int>(post.p.size()) != J)
    throw std::invalid_argument("calibrate: posterior size must equal the state count");

  std::vector<double> log_post(J);
  double peak = kNegInf;
  for (int j = 0; j < J; ++j) {
    const double log_prior = post.p[j] > 0.0 ? w * std::log(post.p[j]) : kNegInf;
    log_post[j] = log_prior == kNegInf
                      ? kNegInf
                      : log_prior + log_likelihood_period(model, j, obs, t_bar);
    peak = std::max(peak, log_post[j]);
  }
  if (peak == kNegInf)
    throw NumericalError("calibrate: observation has zero likelihood under every state");

  PosteriorState next = post;
  double total = 0.0;
  for (int j = 0; j < J; ++j) {
    next.p[j] = std::exp(log_post[j] - peak);
    total += next.p[j];
  }
  for (int j = 0; j < J; ++j) next.p[j] /= total;
  next.m = post.m + 1;
  return next;
}

}  // namespace

const char* to_string(CalibrationMode mode) {
  switch (mode) {
    case CalibrationMode::Bayes: return "bayes";
    case CalibrationMode::WeightedBayes: return "weighted_bayes";
    case CalibrationMode::MleFrequency: return "mle_frequency";
  }
  return "?";
}

PosteriorState PosteriorState::bayes(std::vector<double> prior) {
  PosteriorState state;
  state.p = checked_prior(std::move(prior));
  state.mode = CalibrationMode::Bayes;
  return state;
}

PosteriorState PosteriorState::weighted_bayes(std::vector<double> prior, double w) {
  if (!(w > 0.0)) throw std::invalid_argument("calibrate: weight exponent must be > 0");
  PosteriorState state;
  state.p = checked_prior(std::move(prior));
  state.mode = CalibrationMode::WeightedBayes;
  state.w = w;
  return state;
}

PosteriorState PosteriorState::mle_frequency(int n_states) {
  if (n_states < 1) throw std::invalid_argument("calibrate: need at least one state");
  PosteriorState state;
  state.p.assign(n_states, 1.0 / n_states);
  state.mode = CalibrationMode::MleFrequency;
  state.argmax_counts.assign(n_states, 0);
  return state;
}

void PosteriorState::validate() const {
  if (p.empty()) throw std::invalid_argument("posterior: empty probability vector");
  double total = 0.0;
  for (double pj : p) {
    if (!(pj >= 0.0)) throw std::invalid_argument("posterior: entries must be >= 0");
    total += pj;
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw std::invalid_argument("posterior: probabilities must sum to 1");
  if (mode == CalibrationMode::WeightedBayes && !(w > 0.0))
    throw std::invalid_argument("posterior: weight exponent must be > 0");
  if (mode == CalibrationMode::MleFrequency && argmax_counts.size() != p.size())
    throw std::invalid_argument("posterior: tally vector must match the state count");
}

double log_likelihood_period(const ModelSpec& model, int state, const ObservationBatch& obs,
                             double t_bar) {
  if (state < 0 || state >= model.n_states())
    throw std::invalid_argument("calibrate: state index out of range");
  if (!(t_bar > 0.0)) throw std::invalid_argument("calibrate: period length must be > 0");
  obs.validate(model.n_lines());

  double ll = 0.0;
  for (int i = 0; i < model.n_lines(); ++i) {
    const double lambda = model.lines[i].lambda[state];
    ll -= lambda * t_bar;
    if (obs.counts[i] > 0) ll += obs.counts[i] * std::log(lambda);
    for (double z : obs.sizes[i]) ll += model.lines[i].claims[state].log_density(z);
  }
  return ll;
}

PosteriorState bayes_update(const PosteriorState& post, const ModelSpec& model,
                            const ObservationBatch& obs, double t_bar) {
  if (post.mode != CalibrationMode::Bayes)
    throw std::invalid_argument("bayes_update: posterior mode mismatch");
  return posterior_core(post, model, obs, t_bar, 1.0);
}

PosteriorState weighted_bayes_update(const PosteriorState& post, const ModelSpec& model,
                                     const ObservationBatch& obs, double t_bar, double w) {
  if (!(w > 0.0)) throw std::invalid_argument("weighted_bayes_update: w must be > 0");
  return posterior_core(post, model, obs, t_bar, w);
}

int mle_state(const ModelSpec& model, const ObservationBatch& obs, double t_bar) {
  int best = 0;
  double best_ll = kNegInf;
  for (int j = 0; j < model.n_states(); ++j) {
    const double ll = log_likelihood_period(model, j, obs, t_bar);
    if (ll > best_ll) {
      best_ll = ll;
      best = j;
    }
  }
  return best;
}

PosteriorState mle_frequency_update(const PosteriorState& post, int j_hat) {
  if (post.mode != CalibrationMode::MleFrequency)
    throw std::invalid_argument("mle_frequency_update: posterior mode mismatch");
  post.validate();
  if (j_hat < 0 || j_hat >= static_cast<int>(post.p.size()))
    throw std::invalid_argument("mle_frequency_update: state index out of range");

  PosteriorState next = post;
  next.argmax_counts[j_hat] += 1;
  next.m = post.m + 1;
  for (std::size_t j = 0; j < next.p.size(); ++j)
    next.p[j] = static_cast<double>(next.argmax_counts[j]) / next.m;
  return next;
}

PosteriorState calibrate_update(const PosteriorState& post, const ModelSpec& model,
                                const ObservationBatch& obs, double t_bar) {
  switch (post.mode) {
    case CalibrationMode::Bayes:
      return bayes_update(post, model, obs, t_bar);
    case CalibrationMode::WeightedBayes:
      return weighted_bayes_update(post, model, obs, t_bar, post.w);
    case CalibrationMode::MleFrequency:
      return mle_frequency_update(post, mle_state(model, obs, t_bar));
  }
  throw std::invalid_argument("calibrate: unknown mode");
}

std::vector<PosteriorState> calibrate_trace(const ModelSpec& model, const PeriodGrid& grid,
                                            const std::vector<ObservationBatch>& batches,
                                            PosteriorState initial) {
  grid.validate();
  if (batches.size() != static_cast<std::size_t>(grid.n_periods()))
    throw std::invalid_argument("calibrate: batch count must equal the period count");
  std::vector<PosteriorState> trace;
  trace.reserve(batches.size() + 1);
  trace.push_back(std::move(initial));
  for (std::size_t k = 0; k < batches.size(); ++k)
    trace.push_back(
        calibrate_update(trace.back(), model, batches[k], grid.length(static_cast<int>(k) + 1)));
  return trace;
}

}  // namespace riskcap
