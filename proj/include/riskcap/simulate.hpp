#pragma once

#include <cstdint>
#include <vector>

#include "riskcap/model.hpp"

namespace riskcap {

// Observation period boundaries t_0 = 0 < t_1 < ... < t_M.
struct PeriodGrid {
  std::vector<double> boundaries;  // includes the leading 0

  static PeriodGrid uniform(double period_length, int n_periods);

  int n_periods() const { return static_cast<int>(boundaries.size()) - 1; }
  double length(int m) const { return boundaries[m] - boundaries[m - 1]; }  // 1-based m

  void validate() const;
};

// Claim data observed in one period: per line, the claim count and sizes.
struct ObservationBatch {
  int period = 0;  // 1-based
  std::vector<std::uint32_t> counts;
  std::vector<std::vector<double>> sizes;

  void validate(int n_lines) const;
};

struct LineOutcome {
  bool ruined = false;
  double ruin_time = 0.0;  // meaningful only when ruined
  double terminal = 0.0;   // surplus at T (at ruin time when ruined)
};

struct PathResult {
  std::vector<LineOutcome> lines;
  std::vector<int> states;  // realized state per period covering [0, T]
};

// Exact event-driven simulation of all lines over [0, T]: exponential
// inter-arrivals at the active state's intensity, claim draws from the active
// state's law, ruin checked at jump epochs (the level only falls at jumps).
// Environment dynamics advance on a unit-length period grid scaled by
// period_length.
PathResult simulate_path(const ModelSpec& model, const std::vector<double>& u, double T,
                         std::uint64_t seed, double period_length = 1.0);

struct ObservationRun {
  std::vector<ObservationBatch> batches;
  std::vector<int> states;  // realized state per period
};

// Per-period claim counts and sizes for calibration, under the model's
// environment dynamics.
ObservationRun simulate_observations(const ModelSpec& model, const PeriodGrid& grid,
                                     std::uint64_t seed);

// Environmental state fixed for a whole path: either a known state index or a
// draw per path from mixture weights.
struct StateOrMixture {
  int state = -1;                // >= 0: conditional on this state
  std::vector<double> weights;   // used when state < 0

  static StateOrMixture fixed(int j) { return {j, {}}; }
  static StateOrMixture mixture(std::vector<double> w) { return {-1, std::move(w)}; }
};

// Ruin event monitored by monte_carlo_ruin.
struct McEvent {
  enum class Kind { PerLine, AllRuin, AnyRuin, AggregateRuin };

  Kind kind = Kind::PerLine;
  int line = 0;              // PerLine
  std::vector<int> subset;   // other kinds; 0-based line indices

  static McEvent per_line(int i) { return {Kind::PerLine, i, {}}; }
  static McEvent all_ruin(std::vector<int> s) { return {Kind::AllRuin, 0, std::move(s)}; }
  static McEvent any_ruin(std::vector<int> s) { return {Kind::AnyRuin, 0, std::move(s)}; }
  static McEvent aggregate(std::vector<int> s) {
    return {Kind::AggregateRuin, 0, std::move(s)};
  }
};

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  long n_paths = 0;
};

// Monte Carlo frequency estimate of the event probability over n_paths
// independent paths. Substreams are derived from (seed, path index), so the
// result is byte-identical for any worker count; threads = 0 uses the
// hardware concurrency.
McEstimate monte_carlo_ruin(const ModelSpec& model, const std::vector<double>& u, double T,
                            const StateOrMixture& env, const McEvent& event, long n_paths,
                            std::uint64_t seed, int threads = 0, double period_length = 1.0);

}  // namespace riskcap
