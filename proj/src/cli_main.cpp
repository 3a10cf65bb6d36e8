#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "riskcap/allocate.hpp"
#include "riskcap/calibrate.hpp"
#include "riskcap/errors.hpp"
#include "riskcap/io.hpp"
#include "riskcap/ruin.hpp"
#include "riskcap/scenarios.hpp"
#include "riskcap/simulate.hpp"

namespace {

using namespace riskcap;

std::string default_out_dir() {
  const char* env = std::getenv("RISKCAP_OUT_DIR");
  return env && *env ? env : ".";
}

RuinMethod parse_method(const std::string& name) {
  if (name == "auto") return RuinMethod::Auto;
  if (name == "exact") return RuinMethod::Exact;
  if (name == "arfwedson") return RuinMethod::Arfwedson;
  if (name == "monte_carlo") return RuinMethod::MonteCarlo;
  throw std::invalid_argument("unknown method '" + name + "'");
}

struct RuinProbArgs {
  double u = 0.0;
  double T = 1.0;
  double lambda = 0.5;
  double r = 1.0;
  std::optional<double> theta;
  std::optional<double> claim_mean;
  std::optional<double> claim_std;
  std::string method = "auto";
  std::string format = "json";
  long paths = 100000;
  std::uint64_t seed = 1;
  int threads = 0;
};

void cmd_ruin_prob(const RuinProbArgs& args) {
  BusinessLine line;
  line.premium_rate = args.r;
  line.lambda = {args.lambda};
  if (args.claim_mean && args.claim_std) {
    line.claims = {ClaimDistribution::gaussian(*args.claim_mean, *args.claim_std)};
  } else if (args.claim_mean || args.claim_std) {
    throw std::invalid_argument("gaussian claims need both --claim-mean and --claim-std");
  } else {
    line.claims = {ClaimDistribution::exponential_rate(args.theta.value_or(1.0))};
  }

  McOptions mc;
  mc.n_paths = args.paths;
  mc.seed = args.seed;
  mc.threads = args.threads;
  const RuinResult result = ruin_prob(line, 0, args.u, args.T, parse_method(args.method), mc);

  if (args.format == "csv") {
    std::cout << "u,T,value,method\n"
              << format_double(args.u) << ',' << format_double(args.T) << ','
              << format_double(result.value) << ',' << to_string(result.method) << '\n';
    return;
  }
  nlohmann::json j = to_json(result);
  j["u"] = args.u;
  j["T"] = args.T;
  std::cout << j.dump(2) << '\n';
}

struct CalibrateArgs {
  std::string observations;
  std::string config;
  std::string mode = "bayes";
  double w = 1.0;
  double t_bar = 1.0;
  std::string out;
};

void cmd_calibrate(const CalibrateArgs& args) {
  const ModelSpec model = load_model_file(args.config);
  const auto batches = read_observations_csv(args.observations, model.n_lines());
  const PeriodGrid grid =
      PeriodGrid::uniform(args.t_bar, std::max<int>(1, static_cast<int>(batches.size())));
  if (batches.empty()) {
    // Nothing observed: the trace is just the prior row.
    std::vector<PosteriorState> trace = {PosteriorState::bayes(model.environment.p)};
    write_trace_csv(args.out, trace);
    std::cout << args.out << '\n';
    return;
  }

  PosteriorState initial = PosteriorState::bayes(model.environment.p);
  if (args.mode == "weighted_bayes")
    initial = PosteriorState::weighted_bayes(model.environment.p, args.w);
  else if (args.mode == "mle")
    initial = PosteriorState::mle_frequency(model.n_states());
  else if (args.mode != "bayes")
    throw std::invalid_argument("unknown mode '" + args.mode + "'");

  const auto trace = calibrate_trace(model, grid, batches, initial);
  write_trace_csv(args.out, trace);
  std::cout << args.out << '\n';
}

struct AllocateArgs {
  std::string config;
  std::vector<double> weights;
  bool kkt = false;
  std::string format = "json";
};

void cmd_allocate(const AllocateArgs& args) {
  AllocationProblem problem = load_allocation_file(args.config);
  if (!args.weights.empty()) problem.weights = args.weights;
  problem.validate();
  const AllocationResult result = solve(problem);

  if (args.format == "csv") {
    std::cout << "line,u\n";
    for (std::size_t i = 0; i < result.u_star.size(); ++i)
      std::cout << i + 1 << ',' << format_double(result.u_star[i]) << '\n';
    return;
  }
  nlohmann::json j = to_json(result);
  if (args.kkt) j["kkt"] = to_json(kkt_report(problem, result.u_star));
  std::cout << j.dump(2) << '\n';
}

struct ArfwedsonArgs {
  double lambda = 0.5;
  double theta = 1.0;
  double r = 1.0;
  double T = 1.0;
  double u_min = 1.0;
  double u_max = 30.0;
  double u_step = 1.0;
  std::string out;
};

void cmd_arfwedson_report(const ArfwedsonArgs& args) {
  if (!(args.u_min > 0.0) || !(args.u_step > 0.0) || args.u_max < args.u_min)
    throw std::invalid_argument("arfwedson-report: need 0 < u-min <= u-max and u-step > 0");
  BusinessLine line;
  line.premium_rate = args.r;
  line.lambda = {args.lambda};
  line.claims = {ClaimDistribution::exponential_rate(args.theta)};

  std::vector<ArfwedsonReportRow> rows;
  for (double u = args.u_min; u <= args.u_max + 1e-12; u += args.u_step) {
    ArfwedsonReportRow row;
    row.u = u;
    row.T = args.T;
    row.exact = ruin_exact_exponential(u, args.T, args.lambda, args.theta, args.r);
    const ArfwedsonResult approx = ruin_arfwedson(line, 0, u, args.T);
    row.approx = approx.value;
    row.regime = approx.diag.regime;
    row.relative_error = row.exact != 0.0 ? std::fabs(row.approx - row.exact) / row.exact
                                          : std::fabs(row.approx);
    rows.push_back(row);
  }
  write_arfwedson_csv(args.out, rows);
  std::cout << args.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-line ruin probabilities, environment calibration, and reserve allocation"};
  app.require_subcommand(1);
  const std::string out_dir = default_out_dir();

  RuinProbArgs ruin_args;
  CLI::App* ruin = app.add_subcommand("ruin-prob", "Single-line finite-time ruin probability");
  ruin->add_option("--u", ruin_args.u, "Initial reserve (>= 0)");
  ruin->add_option("--T", ruin_args.T, "Horizon (> 0)");
  ruin->add_option("--lambda", ruin_args.lambda, "Claim intensity");
  ruin->add_option("--r", ruin_args.r, "Premium rate");
  ruin->add_option("--theta", ruin_args.theta, "Exponential claim rate");
  ruin->add_option("--claim-mean", ruin_args.claim_mean, "Gaussian claim mean");
  ruin->add_option("--claim-std", ruin_args.claim_std, "Gaussian claim std");
  ruin->add_option("--method", ruin_args.method, "auto|exact|arfwedson|monte_carlo");
  ruin->add_option("--format", ruin_args.format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  ruin->add_option("--paths", ruin_args.paths, "Monte Carlo path count");
  ruin->add_option("--seed", ruin_args.seed, "Monte Carlo seed");
  ruin->add_option("--threads", ruin_args.threads, "Monte Carlo workers (0 = hardware)");
  ruin->callback([&] { cmd_ruin_prob(ruin_args); });

  RunOptions run_opt;
  run_opt.out_dir = out_dir;
  int example_no = 1;
  CLI::App* run = app.add_subcommand("run-example", "Reproduce a canned example's data files");
  run->add_option("--n", example_no, "Example number (1-4)")->required();
  run->add_option("--seed", run_opt.seed, "Master seed");
  run->add_option("--trials", run_opt.trials, "Trial count (Example 1 bands)");
  run->add_option("--periods", run_opt.n_periods, "Observation periods");
  run->add_option("--out", run_opt.out_dir, "Output directory");
  run->callback([&] {
    for (const std::string& path : run_example(example_no, run_opt)) std::cout << path << '\n';
  });

  CalibrateArgs cal_args;
  cal_args.out = out_dir + "/trace.csv";
  CLI::App* cal = app.add_subcommand("calibrate", "Posterior trace from an observation CSV");
  cal->add_option("--observations", cal_args.observations, "Observation CSV path")->required();
  cal->add_option("--config", cal_args.config, "Model JSON path")->required();
  cal->add_option("--mode", cal_args.mode, "bayes|weighted_bayes|mle");
  cal->add_option("--w", cal_args.w, "Weight exponent (weighted_bayes)");
  cal->add_option("--t-bar", cal_args.t_bar, "Observation period length");
  cal->add_option("--out", cal_args.out, "Trace CSV output path");
  cal->callback([&] { cmd_calibrate(cal_args); });

  AllocateArgs alloc_args;
  CLI::App* alloc = app.add_subcommand("allocate", "Solve a reserve-allocation problem");
  alloc->add_option("--config", alloc_args.config, "Problem JSON path")->required();
  alloc->add_option("--weights", alloc_args.weights,
                    "Override the environmental weights (space-separated)");
  alloc->add_flag("--kkt", alloc_args.kkt, "Include first-order diagnostics");
  alloc->add_option("--format", alloc_args.format, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  alloc->callback([&] { cmd_allocate(alloc_args); });

  ArfwedsonArgs arf_args;
  arf_args.out = out_dir + "/arfwedson_report.csv";
  CLI::App* arf =
      app.add_subcommand("arfwedson-report", "Exact vs Arfwedson over a reserve grid");
  arf->add_option("--lambda", arf_args.lambda, "Claim intensity");
  arf->add_option("--theta", arf_args.theta, "Exponential claim rate");
  arf->add_option("--r", arf_args.r, "Premium rate");
  arf->add_option("--T", arf_args.T, "Horizon");
  arf->add_option("--u-min", arf_args.u_min, "Grid start (> 0)");
  arf->add_option("--u-max", arf_args.u_max, "Grid end");
  arf->add_option("--u-step", arf_args.u_step, "Grid step");
  arf->add_option("--out", arf_args.out, "Report CSV output path");
  arf->callback([&] { cmd_arfwedson_report(arf_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
