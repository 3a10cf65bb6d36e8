#include "riskcap/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

namespace riskcap {

namespace {

// Substream keys within one seed (or one per-path sub-master).
constexpr std::uint64_t kEnvKey = 0;
constexpr std::uint64_t kLineKeyBase = 1;  // line i -> key 1 + i
constexpr std::uint64_t kPooledKey = 1;    // aggregate paths use a single pooled stream

// Compound Poisson over (t0, t1] in a fixed state, continuing from an already
// accumulated claim total. Ruin is checked at jump epochs only.
struct LineSim {
  double claims_total = 0.0;

  bool run_segment(const BusinessLine& line, int state, double u, double t0, double t1,
                   Stream& rng, LineOutcome& out) {
    const double lam = line.lambda[state];
    const ClaimDistribution& claim = line.claims[state];
    double t = t0 + rng.exponential(lam);
    while (t <= t1) {
      claims_total += claim.sample(rng);
      const double level = u + line.premium_rate * t - claims_total;
      if (level < 0.0) {
        out.ruined = true;
        out.ruin_time = t;
        out.terminal = level;
        return true;
      }
      t += rng.exponential(lam);
    }
    return false;
  }
};

bool line_ruins_fixed_state(const BusinessLine& line, int state, double u, double T, Stream& rng) {
  LineSim sim;
  LineOutcome out;
  return sim.run_segment(line, state, u, 0.0, T, rng, out);
}

bool aggregate_ruins(const ModelSpec& model, const std::vector<int>& subset,
                     const std::vector<double>& u, int state, double T, Stream& rng) {
  double pooled_u = 0.0;
  double pooled_r = 0.0;
  double pooled_lambda = 0.0;
  std::vector<double> rates(subset.size());
  for (std::size_t k = 0; k < subset.size(); ++k) {
    const int i = subset[k];
    pooled_u += u[i];
    pooled_r += model.lines[i].premium_rate;
    rates[k] = model.lines[i].lambda[state];
    pooled_lambda += rates[k];
  }
  double claims_total = 0.0;
  double t = rng.exponential(pooled_lambda);
  while (t <= T) {
    const int k = rng.categorical(rates.data(), static_cast<int>(rates.size()));
    claims_total += model.lines[subset[k]].claims[state].sample(rng);
    if (pooled_u + pooled_r * t - claims_total < 0.0) return true;
    t += rng.exponential(pooled_lambda);
  }
  return false;
}

}  // namespace

PeriodGrid PeriodGrid::uniform(double period_length, int n_periods) {
  if (!(period_length > 0.0)) throw std::invalid_argument("period grid: length must be > 0");
  if (n_periods < 1) throw std::invalid_argument("period grid: need at least one period");
  PeriodGrid grid;
  grid.boundaries.resize(n_periods + 1);
  for (int m = 0; m <= n_periods; ++m) grid.boundaries[m] = period_length * m;
  return grid;
}

void PeriodGrid::validate() const {
  if (boundaries.size() < 2) throw std::invalid_argument("period grid: need at least one period");
  if (boundaries.front() != 0.0) throw std::invalid_argument("period grid: must start at 0");
  for (std::size_t m = 1; m < boundaries.size(); ++m)
    if (!(boundaries[m] > boundaries[m - 1]))
      throw std::invalid_argument("period grid: boundaries must be strictly increasing");
}

void ObservationBatch::validate(int n_lines) const {
  if (period < 1) throw std::invalid_argument("observation batch: period index is 1-based");
  if (static_cast<int>(counts.size()) != n_lines ||
      static_cast<int>(sizes.size()) != n_lines)
    throw std::invalid_argument("observation batch: per-line vectors must match the line count");
  for (int i = 0; i < n_lines; ++i)
    if (sizes[i].size() != counts[i])
      throw std::invalid_argument("observation batch: size list length must equal the count");
}

PathResult simulate_path(const ModelSpec& model, const std::vector<double>& u, double T,
                         std::uint64_t seed, double period_length) {
  model.validate();
  if (static_cast<int>(u.size()) != model.n_lines())
    throw std::invalid_argument("simulate_path: reserve vector size must equal the line count");
  for (double ui : u)
    if (!(ui >= 0.0)) throw std::invalid_argument("simulate_path: reserves must be >= 0");
  if (!(T > 0.0)) throw std::invalid_argument("simulate_path: T must be > 0");
  if (!(period_length > 0.0))
    throw std::invalid_argument("simulate_path: period length must be > 0");

  const int n_periods = std::max(1, static_cast<int>(std::ceil(T / period_length - 1e-12)));
  Stream env_rng = make_stream(seed, kEnvKey);
  PathResult result;
  result.states = model.environment.realize(n_periods, env_rng);
  result.lines.resize(model.n_lines());

  for (int i = 0; i < model.n_lines(); ++i) {
    Stream rng = make_stream(seed, kLineKeyBase + i);
    LineSim sim;
    LineOutcome& out = result.lines[i];
    for (int m = 1; m <= n_periods; ++m) {
      const double t0 = period_length * (m - 1);
      const double t1 = std::min(period_length * m, T);
      if (sim.run_segment(model.lines[i], result.states[m - 1], u[i], t0, t1, rng, out)) break;
      if (t1 >= T) break;
    }
    if (!out.ruined)
      out.terminal = u[i] + model.lines[i].premium_rate * T - sim.claims_total;
  }
  return result;
}

ObservationRun simulate_observations(const ModelSpec& model, const PeriodGrid& grid,
                                     std::uint64_t seed) {
  model.validate();
  grid.validate();
  const int M = grid.n_periods();
  const int n = model.n_lines();

  Stream env_rng = make_stream(seed, kEnvKey);
  ObservationRun run;
  run.states = model.environment.realize(M, env_rng);
  run.batches.resize(M);

  std::vector<Stream> line_rngs;
  line_rngs.reserve(n);
  for (int i = 0; i < n; ++i) line_rngs.push_back(make_stream(seed, kLineKeyBase + i));

  for (int m = 1; m <= M; ++m) {
    ObservationBatch& batch = run.batches[m - 1];
    batch.period = m;
    batch.counts.resize(n);
    batch.sizes.resize(n);
    const int j = run.states[m - 1];
    for (int i = 0; i < n; ++i) {
      Stream& rng = line_rngs[i];
      const std::uint32_t y = rng.poisson(model.lines[i].lambda[j] * grid.length(m));
      batch.counts[i] = y;
      batch.sizes[i].resize(y);
      for (std::uint32_t k = 0; k < y; ++k)
        batch.sizes[i][k] = model.lines[i].claims[j].sample(rng);
    }
  }
  return run;
}

McEstimate monte_carlo_ruin(const ModelSpec& model, const std::vector<double>& u, double T,
                            const StateOrMixture& env, const McEvent& event, long n_paths,
                            std::uint64_t seed, int threads, double period_length) {
  (void)period_length;  // paths hold one state, so the period grid is immaterial
  model.validate();
  if (n_paths < 1) throw std::invalid_argument("monte_carlo_ruin: need at least one path");
  if (static_cast<int>(u.size()) != model.n_lines())
    throw std::invalid_argument("monte_carlo_ruin: reserve vector size must equal the line count");
  if (!(T > 0.0)) throw std::invalid_argument("monte_carlo_ruin: T must be > 0");
  if (env.state >= model.n_states())
    throw std::invalid_argument("monte_carlo_ruin: state index out of range");
  if (env.state < 0) {
    if (static_cast<int>(env.weights.size()) != model.n_states())
      throw std::invalid_argument("monte_carlo_ruin: mixture weight size must equal the state count");
    double total = 0.0;
    for (double w : env.weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("monte_carlo_ruin: mixture weights must be >= 0");
      total += w;
    }
    if (std::fabs(total - 1.0) > 1e-9)
      throw std::invalid_argument("monte_carlo_ruin: mixture weights must sum to 1");
  }

  std::vector<int> subset = event.subset;
  if (event.kind == McEvent::Kind::PerLine) subset = {event.line};
  if (subset.empty()) throw std::invalid_argument("monte_carlo_ruin: empty line subset");
  for (int i : subset)
    if (i < 0 || i >= model.n_lines())
      throw std::invalid_argument("monte_carlo_ruin: line index out of range");

  auto run_range = [&](long first, long last) -> long {
    long hits = 0;
    for (long p = first; p < last; ++p) {
      const std::uint64_t path_master = mix_key(seed, static_cast<std::uint64_t>(p));
      int j = env.state;
      if (j < 0) {
        Stream env_rng = make_stream(path_master, kEnvKey);
        j = env_rng.categorical(env.weights.data(), model.n_states());
      }
      bool hit = false;
      switch (event.kind) {
        case McEvent::Kind::PerLine: {
          Stream rng = make_stream(path_master, kLineKeyBase + subset[0]);
          hit = line_ruins_fixed_state(model.lines[subset[0]], j, u[subset[0]], T, rng);
          break;
        }
        case McEvent::Kind::AllRuin: {
          hit = true;
          for (int i : subset) {
            Stream rng = make_stream(path_master, kLineKeyBase + i);
            if (!line_ruins_fixed_state(model.lines[i], j, u[i], T, rng)) {
              hit = false;
              break;
            }
          }
          break;
        }
        case McEvent::Kind::AnyRuin: {
          hit = false;
          for (int i : subset) {
            Stream rng = make_stream(path_master, kLineKeyBase + i);
            if (line_ruins_fixed_state(model.lines[i], j, u[i], T, rng)) {
              hit = true;
              break;
            }
          }
          break;
        }
        case McEvent::Kind::AggregateRuin: {
          Stream rng = make_stream(path_master, kPooledKey);
          hit = aggregate_ruins(model, subset, u, j, T, rng);
          break;
        }
      }
      if (hit) ++hits;
    }
    return hits;
  };

  int n_workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (n_workers < 1) n_workers = 1;
  n_workers = static_cast<int>(std::min<long>(n_workers, n_paths));

  long total_hits = 0;
  if (n_workers == 1) {
    total_hits = run_range(0, n_paths);
  } else {
    std::vector<long> hits(n_workers, 0);
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) {
      const long first = n_paths * w / n_workers;
      const long last = n_paths * (w + 1) / n_workers;
      pool.emplace_back([&, w, first, last] { hits[w] = run_range(first, last); });
    }
    for (auto& t : pool) t.join();
    for (long h : hits) total_hits += h;
  }

  McEstimate est;
  est.n_paths = n_paths;
  est.estimate = static_cast<double>(total_hits) / static_cast<double>(n_paths);
  est.standard_error = std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(n_paths));
  return est;
}

}  // namespace riskcap
