#pragma once

#include <vector>

#include "riskcap/model.hpp"
#include "riskcap/simulate.hpp"

namespace riskcap {

enum class CalibrationMode { Bayes, WeightedBayes, MleFrequency };

const char* to_string(CalibrationMode mode);

// Running estimate of the environmental-state distribution. Updates are
// value-producing; a calibration run is a fold over observation batches.
struct PosteriorState {
  std::vector<double> p;
  int m = 0;  // periods absorbed so far
  CalibrationMode mode = CalibrationMode::Bayes;
  double w = 1.0;                      // WeightedBayes exponent
  std::vector<long> argmax_counts;     // MleFrequency running tallies

  static PosteriorState bayes(std::vector<double> prior);
  static PosteriorState weighted_bayes(std::vector<double> prior, double w);
  // Starts from the uniform vector as a display placeholder; p becomes the
  // pure argmax frequency after the first update.
  static PosteriorState mle_frequency(int n_states);

  void validate() const;
};

// Sum over lines of -lambda_ij tbar + y_i log lambda_ij + sum_l log f_ij(z_il).
// The y_i! term is omitted; it cancels from every ratio taken downstream.
double log_likelihood_period(const ModelSpec& model, int state, const ObservationBatch& obs,
                             double t_bar);

// Posterior recursion p_j^m proportional to p_j^{m-1} exp(ll_j), normalized via
// log-sum-exp. Zero prior entries stay zero. Throws NumericalError when the
// observation is impossible under every state.
PosteriorState bayes_update(const PosteriorState& post, const ModelSpec& model,
                            const ObservationBatch& obs, double t_bar);

// Same recursion with the prior factor tempered entry-wise to p^w before
// renormalizing; w = 1 reproduces bayes_update bit for bit.
PosteriorState weighted_bayes_update(const PosteriorState& post, const ModelSpec& model,
                                     const ObservationBatch& obs, double t_bar, double w);

// Argmax state of the per-period likelihood; ties go to the lowest index.
int mle_state(const ModelSpec& model, const ObservationBatch& obs, double t_bar);

// Running relative frequency of argmax states:
// p_i^m = ((m-1)/m) p_i^{m-1} + (1/m) 1{j_hat = i}, kept as exact counts.
PosteriorState mle_frequency_update(const PosteriorState& post, int j_hat);

// One period of whichever mode `post` carries.
PosteriorState calibrate_update(const PosteriorState& post, const ModelSpec& model,
                                const ObservationBatch& obs, double t_bar);

// Full fold over a run of observations; element k of the result has absorbed
// the first k batches (element 0 is the initial state).
std::vector<PosteriorState> calibrate_trace(const ModelSpec& model, const PeriodGrid& grid,
                                            const std::vector<ObservationBatch>& batches,
                                            PosteriorState initial);

}  // namespace riskcap
