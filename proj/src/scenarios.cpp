#include "riskcap/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "riskcap/calibrate.hpp"
#include "riskcap/io.hpp"
#include "riskcap/simulate.hpp"

namespace riskcap {

namespace {

BusinessLine exponential_line(std::vector<double> lambda, std::vector<double> claim_means) {
  BusinessLine line;
  line.premium_rate = 1.0;
  line.lambda = std::move(lambda);
  for (double mean : claim_means)
    line.claims.push_back(ClaimDistribution::exponential_mean(mean));
  return line;
}

EnvironmentSpec uniform_fixed_env(int n_states, int true_state) {
  EnvironmentSpec env;
  env.n_states = n_states;
  env.p.assign(n_states, 1.0 / n_states);
  env.dynamics = EnvironmentSpec::Dynamics::Fixed;
  env.fixed_state = true_state;
  return env;
}

// Linear-interpolation empirical quantile of an unsorted sample.
double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t k = static_cast<std::size_t>(pos);
  if (k + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(k);
  return values[k] * (1.0 - frac) + values[k + 1] * frac;
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  if (dir.back() == '/') return dir + name;
  return dir + "/" + name;
}

}  // namespace

ModelSpec example1_model() {
  ModelSpec model;
  model.lines.push_back(exponential_line({0.5, 0.7, 0.92}, {1.0, 1.0, 1.0}));
  model.lines.push_back(exponential_line({0.6, 0.6, 0.6}, {1.0, 1.0, 1.0}));
  model.environment = uniform_fixed_env(3, 0);
  return model;
}

ModelSpec example2_model(char set) {
  ModelSpec model = example1_model();
  switch (set) {
    case 'a':
      break;
    case 'b':  // claim-size means react to the state too
      model.lines[0] = exponential_line({0.5, 0.7, 0.92}, {1.0, 0.65, 0.4});
      break;
    case 'c':  // wider intensity spread
      model.lines[0] = exponential_line({0.4, 0.7, 1.1}, {1.0, 1.0, 1.0});
      break;
    case 'd':  // states 1 and 2 indistinguishable
      model.lines[0] = exponential_line({0.5, 0.5, 0.92}, {1.0, 1.0, 1.0});
      break;
    default:
      throw std::invalid_argument("example 2: set must be one of a, b, c, d");
  }
  return model;
}

ModelSpec example3_switch_model() {
  ModelSpec model = example1_model();
  model.environment.dynamics = EnvironmentSpec::Dynamics::SwitchAt;
  model.environment.switch_period = 10;
  model.environment.switch_from = 0;
  model.environment.switch_to = 1;
  return model;
}

ModelSpec example3_resampled_model() {
  ModelSpec model;
  model.lines.push_back(exponential_line({0.50, 0.70, 0.92}, {1.0, 0.65, 0.4}));
  model.lines.push_back(exponential_line({0.92, 0.70, 0.50}, {1.0, 0.65, 0.4}));
  model.environment.n_states = 3;
  model.environment.p = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  model.environment.dynamics = EnvironmentSpec::Dynamics::Resampled;
  return model;
}

ModelSpec example4_model() {
  const std::vector<std::vector<double>> lambda = {
      {0.709, 0.544, 0.609, 0.536, 0.580},
      {0.611, 0.537, 0.588, 0.541, 0.725},
      {0.730, 0.601, 0.636, 0.620, 0.691},
      {0.639, 0.605, 0.638, 0.713, 0.591},
      {0.637, 0.615, 0.600, 0.623, 0.740}};
  ModelSpec model;
  for (const auto& row : lambda) {
    BusinessLine line;
    line.premium_rate = 1.0;
    line.lambda = row;
    line.claims.assign(5, ClaimDistribution::gaussian(1.0, 1.0));
    model.lines.push_back(std::move(line));
  }
  model.environment = uniform_fixed_env(5, 0);
  return model;
}

AllocationProblem example1_problem() {
  AllocationProblem problem;
  problem.model = example1_model();
  problem.weights = problem.model.environment.p;
  problem.T = 1.0;
  problem.constraints = make_subset_family(SubsetFamily::AllSubsets, 2, SubsetMode::AllRuin, 0.001);
  problem.simplex.restarts = 1;  // re-solved every period from a warm start
  return problem;
}

AllocationProblem example4_problem(SubsetMode mode) {
  AllocationProblem problem;
  problem.model = example4_model();
  problem.weights = {1.0, 0.0, 0.0, 0.0, 0.0};  // allocation at the realized state
  problem.T = 200.0;
  problem.constraints = make_subset_family(SubsetFamily::AllSubsets, 5, mode, 0.001);
  return problem;
}

namespace {

std::string run_example1(const RunOptions& opt, std::vector<std::string>& files) {
  const ModelSpec model = example1_model();
  const PeriodGrid grid = PeriodGrid::uniform(1.0, opt.n_periods);
  const int J = model.n_states();

  // errors[m][j][t] = |p_hat_j^m - 1{j = true}| in trial t
  std::vector<std::vector<std::vector<double>>> errors(
      opt.n_periods + 1, std::vector<std::vector<double>>(J));
  std::vector<PosteriorState> first_trace;
  std::vector<ObservationBatch> first_batches;

  for (int t = 0; t < opt.trials; ++t) {
    const std::uint64_t trial_seed = mix_key(opt.seed, 1000 + static_cast<std::uint64_t>(t));
    ObservationRun run = simulate_observations(model, grid, trial_seed);
    const auto trace =
        calibrate_trace(model, grid, run.batches, PosteriorState::bayes(model.environment.p));
    for (int m = 0; m <= opt.n_periods; ++m)
      for (int j = 0; j < J; ++j)
        errors[m][j].push_back(std::fabs(trace[m].p[j] - (j == 0 ? 1.0 : 0.0)));
    if (t == 0) {
      first_trace = trace;
      first_batches = std::move(run.batches);
    }
  }

  CsvTable bands;
  bands.header = {"m"};
  for (int j = 1; j <= J; ++j) {
    bands.header.push_back("err" + std::to_string(j) + "_mean");
    bands.header.push_back("err" + std::to_string(j) + "_lo");
    bands.header.push_back("err" + std::to_string(j) + "_hi");
  }
  for (int m = 0; m <= opt.n_periods; ++m) {
    std::vector<std::string> row = {std::to_string(m)};
    for (int j = 0; j < J; ++j) {
      double mean = 0.0;
      for (double e : errors[m][j]) mean += e;
      mean /= static_cast<double>(errors[m][j].size());
      row.push_back(format_double(mean));
      row.push_back(format_double(quantile(errors[m][j], 0.025)));
      row.push_back(format_double(quantile(errors[m][j], 0.975)));
    }
    bands.rows.push_back(std::move(row));
  }
  const std::string bands_path = join_path(opt.out_dir, "example1_bands.csv");
  write_csv(bands_path, bands);
  files.push_back(bands_path);

  const std::string trace_path = join_path(opt.out_dir, "example1_trace.csv");
  write_trace_csv(trace_path, first_trace);
  files.push_back(trace_path);

  const std::string obs_path = join_path(opt.out_dir, "example1_observations.csv");
  write_observations_csv(obs_path, first_batches);
  files.push_back(obs_path);

  // Reserve re-allocation along the first trial, against the known-state optimum.
  AllocationProblem problem = example1_problem();
  AllocationProblem true_problem = problem;
  true_problem.weights = {1.0, 0.0, 0.0};
  const AllocationResult truth = solve(true_problem);

  const ReserveCycle cycle = reserve_update_cycle(problem, grid, first_batches,
                                                  PosteriorState::bayes(model.environment.p));
  CsvTable reserves;
  reserves.header = {"m", "u1", "u2", "objective", "relative_error"};
  for (std::size_t m = 0; m < cycle.allocations.size(); ++m) {
    const AllocationResult& res = cycle.allocations[m];
    double rel = 0.0;
    for (std::size_t i = 0; i < res.u_star.size(); ++i)
      rel = std::max(rel, std::fabs(res.u_star[i] - truth.u_star[i]) / truth.u_star[i]);
    reserves.rows.push_back({std::to_string(m), format_double(res.u_star[0]),
                             format_double(res.u_star[1]), format_double(res.objective),
                             format_double(rel)});
  }
  const std::string reserves_path = join_path(opt.out_dir, "example1_reserves.csv");
  write_csv(reserves_path, reserves);
  files.push_back(reserves_path);
  return reserves_path;
}

void run_example2(const RunOptions& opt, std::vector<std::string>& files) {
  const PeriodGrid grid = PeriodGrid::uniform(1.0, opt.n_periods);
  for (char set : {'a', 'b', 'c', 'd'}) {
    const ModelSpec model = example2_model(set);
    const std::uint64_t seed = mix_key(opt.seed, 2000 + static_cast<std::uint64_t>(set - 'a'));
    const ObservationRun run = simulate_observations(model, grid, seed);
    const auto trace =
        calibrate_trace(model, grid, run.batches, PosteriorState::bayes(model.environment.p));
    const std::string path =
        join_path(opt.out_dir, std::string("example2") + set + "_trace.csv");
    write_trace_csv(path, trace);
    files.push_back(path);
  }
}

void run_example3(const RunOptions& opt, std::vector<std::string>& files) {
  const PeriodGrid grid = PeriodGrid::uniform(1.0, opt.n_periods);

  // One observation stream, three weight exponents.
  const ModelSpec switch_model = example3_switch_model();
  const ObservationRun run = simulate_observations(switch_model, grid, mix_key(opt.seed, 3000));
  for (double w : {0.5, 1.0, 2.0}) {
    const auto trace =
        calibrate_trace(switch_model, grid, run.batches,
                        PosteriorState::weighted_bayes(switch_model.environment.p, w));
    const std::string path =
        join_path(opt.out_dir, "example3_trace_w" + format_double(w) + ".csv");
    write_trace_csv(path, trace);
    files.push_back(path);
  }

  const ModelSpec resampled = example3_resampled_model();
  const ObservationRun mle_run = simulate_observations(resampled, grid, mix_key(opt.seed, 3001));
  const auto trace = calibrate_trace(resampled, grid, mle_run.batches,
                                     PosteriorState::mle_frequency(resampled.n_states()));
  const std::string path = join_path(opt.out_dir, "example3_mle_trace.csv");
  write_trace_csv(path, trace);
  files.push_back(path);
}

void run_example4(const RunOptions& opt, std::vector<std::string>& files) {
  const ModelSpec model = example4_model();
  const PeriodGrid grid = PeriodGrid::uniform(1.0, opt.n_periods);
  const ObservationRun run = simulate_observations(model, grid, mix_key(opt.seed, 4000));
  const auto trace =
      calibrate_trace(model, grid, run.batches, PosteriorState::bayes(model.environment.p));
  const std::string trace_path = join_path(opt.out_dir, "example4_trace.csv");
  write_trace_csv(trace_path, trace);
  files.push_back(trace_path);

  CsvTable reserves;
  reserves.header = {"mode", "u1", "u2", "u3", "u4", "u5", "objective"};
  for (SubsetMode mode : {SubsetMode::AllRuin, SubsetMode::AnyRuin}) {
    const AllocationResult res = solve(example4_problem(mode));
    std::vector<std::string> row = {to_string(mode)};
    for (double ui : res.u_star) row.push_back(format_double(ui));
    row.push_back(format_double(res.objective));
    reserves.rows.push_back(std::move(row));
  }
  const std::string reserves_path = join_path(opt.out_dir, "example4_reserves.csv");
  write_csv(reserves_path, reserves);
  files.push_back(reserves_path);
}

}  // namespace

std::vector<std::string> run_example(int which, const RunOptions& opt) {
  if (opt.trials < 1) throw std::invalid_argument("run_example: trials must be >= 1");
  if (opt.n_periods < 1) throw std::invalid_argument("run_example: periods must be >= 1");
  std::vector<std::string> files;
  switch (which) {
    case 1:
      run_example1(opt, files);
      break;
    case 2:
      run_example2(opt, files);
      break;
    case 3:
      run_example3(opt, files);
      break;
    case 4:
      run_example4(opt, files);
      break;
    default:
      throw std::invalid_argument("run_example: example number must be 1, 2, 3, or 4");
  }
  return files;
}

}  // namespace riskcap
