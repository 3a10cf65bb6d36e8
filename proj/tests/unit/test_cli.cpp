#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "riskcap/io.hpp"
#include "riskcap/ruin.hpp"
#include "riskcap/scenarios.hpp"

namespace fs = std::filesystem;
using namespace riskcap;

namespace {

struct RunOutput {
  int exit_code = -1;
  std::string out;
};

RunOutput run_cli(const std::string& args) {
  const std::string cmd = std::string(RISKCAP_CLI_PATH) + " " + args + " 2>/dev/null";
  RunOutput result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) result.out.append(buf.data(), got);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "cli_test_tmp") {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and parse errors use the documented exit codes") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("ruin-prob --help").exit_code == 0);
  CHECK(run_cli("").exit_code == 2);               // a subcommand is required
  CHECK(run_cli("ruin-prob --nope 1").exit_code == 2);
  CHECK(run_cli("calibrate").exit_code == 2);      // missing required options
  CHECK(run_cli("run-example --n 9").exit_code == 2);
}

TEST_CASE("ruin-prob emits the library value as json") {
  const RunOutput res = run_cli("ruin-prob --u 2 --T 1 --lambda 0.5 --theta 1 --r 1");
  REQUIRE(res.exit_code == 0);
  const auto j = nlohmann::json::parse(res.out);
  CHECK(j.at("method") == "exact");
  CHECK(j.at("value").get<double>() == ruin_exact_exponential(2.0, 1.0, 0.5, 1.0, 1.0));
}

TEST_CASE("ruin-prob csv format has a body row") {
  const RunOutput res =
      run_cli("ruin-prob --u 2 --T 1 --lambda 0.5 --theta 1 --r 1 --format csv");
  REQUIRE(res.exit_code == 0);
  CHECK(res.out.rfind("u,T,value,method\n", 0) == 0);
  CHECK(res.out.find("exact") != std::string::npos);
}

TEST_CASE("ruin-prob validates argument combinations") {
  CHECK(run_cli("ruin-prob --u 2 --T 1 --lambda 0.5 --claim-mean 1").exit_code == 2);
  CHECK(run_cli("ruin-prob --u -3 --T 1 --lambda 0.5").exit_code == 2);
  CHECK(run_cli("ruin-prob --u 2 --T 1 --lambda 0.5 --claim-mean 1 --claim-std 1 "
                "--method exact")
            .exit_code == 2);
}

TEST_CASE("monte carlo output is identical across reruns and thread counts") {
  const std::string cmd =
      "ruin-prob --u 1 --T 2 --lambda 0.8 --theta 1 --r 1 --method monte_carlo "
      "--paths 40000 --seed 9 --format csv";
  const RunOutput a = run_cli(cmd + " --threads 1");
  const RunOutput b = run_cli(cmd + " --threads 1");
  const RunOutput c = run_cli(cmd + " --threads 4");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
}

TEST_CASE("calibrate reproduces the library trace from files") {
  TempDir tmp;
  const ModelSpec model = example1_model();
  const fs::path model_path = tmp.path / "model.json";
  {
    std::ofstream out(model_path);
    out << model_to_json(model).dump(2) << "\n";
  }
  const PeriodGrid grid = PeriodGrid::uniform(1.0, 15);
  const ObservationRun run = simulate_observations(model, grid, 777);
  const fs::path obs_path = tmp.path / "obs.csv";
  write_observations_csv(obs_path.string(), run.batches);

  const fs::path trace_path = tmp.path / "trace.csv";
  const RunOutput res = run_cli("calibrate --observations " + obs_path.string() + " --config " +
                                model_path.string() + " --out " + trace_path.string());
  REQUIRE(res.exit_code == 0);

  const auto trace =
      calibrate_trace(model, grid, run.batches, PosteriorState::bayes(model.environment.p));
  const fs::path expect_path = tmp.path / "expect.csv";
  write_trace_csv(expect_path.string(), trace);
  CHECK(slurp(trace_path) == slurp(expect_path));
}

TEST_CASE("calibrate honors the output directory variable") {
  TempDir tmp;
  const ModelSpec model = example1_model();
  const fs::path model_path = tmp.path / "model.json";
  {
    std::ofstream out(model_path);
    out << model_to_json(model).dump(2) << "\n";
  }
  const PeriodGrid grid = PeriodGrid::uniform(1.0, 3);
  const ObservationRun run = simulate_observations(model, grid, 31);
  const fs::path obs_path = tmp.path / "obs.csv";
  write_observations_csv(obs_path.string(), run.batches);

  setenv("RISKCAP_OUT_DIR", tmp.path.string().c_str(), 1);
  const RunOutput res =
      run_cli("calibrate --observations " + obs_path.string() + " --config " +
              model_path.string());
  unsetenv("RISKCAP_OUT_DIR");
  REQUIRE(res.exit_code == 0);
  CHECK(fs::exists(tmp.path / "trace.csv"));
}

TEST_CASE("allocate solves a config file and reports kkt data") {
  TempDir tmp;
  AllocationProblem problem;
  problem.model = example1_model();
  problem.model.environment.p = {1.0, 0.0, 0.0};
  problem.weights = {1.0, 0.0, 0.0};
  problem.T = 1.0;
  problem.constraints = make_subset_family(SubsetFamily::Singletons, 2, SubsetMode::AllRuin, 0.01);

  nlohmann::json j = model_to_json(problem.model);
  nlohmann::json family;
  family["family"] = "singletons";
  family["mode"] = "all_ruin";
  family["base"] = 0.01;
  j["allocation"]["T"] = 1.0;
  j["allocation"]["constraints"] = nlohmann::json::array({family});
  const fs::path cfg = tmp.path / "alloc.json";
  {
    std::ofstream out(cfg);
    out << j.dump(2) << "\n";
  }
  const RunOutput res = run_cli("allocate --config " + cfg.string() + " --kkt");
  REQUIRE(res.exit_code == 0);
  const auto parsed = nlohmann::json::parse(res.out);
  const AllocationResult expect = solve(problem);
  CHECK(parsed.at("u")[0].get<double>() == expect.u_star[0]);
  CHECK(parsed.at("u")[1].get<double>() == expect.u_star[1]);
  CHECK(parsed.at("kkt").at("multipliers_nonnegative").get<bool>());

  // Same config, csv body.
  const RunOutput csv = run_cli("allocate --config " + cfg.string() + " --format csv");
  REQUIRE(csv.exit_code == 0);
  CHECK(csv.out.rfind("line,u\n", 0) == 0);
}

TEST_CASE("allocate reports infeasible problems with exit code 3") {
  TempDir tmp;
  const auto j = nlohmann::json::parse(R"({
    "environment": {"J": 1, "p": [1.0], "dynamics": "fixed", "state": 1},
    "lines": [{"r": 1.0, "lambda": [0.5], "claims": {"type": "exponential", "rate": 1.0}}],
    "allocation": {
      "T": 1.0,
      "constraints": [{"subset": [1], "mode": "all_ruin", "delta": 1e-9}],
      "u0": [0.0],
      "optimizer": {"max_iterations": 5, "restarts": 0, "initial_step": 0.001},
      "penalty": {"max_rounds": 1, "restoration_max": 10}
    }
  })");
  const fs::path cfg = tmp.path / "infeasible.json";
  {
    std::ofstream out(cfg);
    out << j.dump(2) << "\n";
  }
  CHECK(run_cli("allocate --config " + cfg.string()).exit_code == 3);
}

TEST_CASE("allocate rejects malformed configs with exit code 2") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "broken.json";
  {
    std::ofstream out(cfg);
    out << "{\"environment\": {}}\n";
  }
  CHECK(run_cli("allocate --config " + cfg.string()).exit_code == 2);
  CHECK(run_cli("allocate --config " + (tmp.path / "missing.json").string()).exit_code == 2);
}

TEST_CASE("run-example writes byte-identical files on rerun") {
  TempDir tmp;
  const fs::path dir_a = tmp.path / "a";
  const fs::path dir_b = tmp.path / "b";
  fs::create_directories(dir_a);
  fs::create_directories(dir_b);
  const RunOutput a =
      run_cli("run-example --n 2 --seed 5 --periods 12 --out " + dir_a.string());
  const RunOutput b =
      run_cli("run-example --n 2 --seed 5 --periods 12 --out " + dir_b.string());
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  for (const char* name :
       {"example2a_trace.csv", "example2b_trace.csv", "example2c_trace.csv",
        "example2d_trace.csv"}) {
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    CHECK(!slurp(dir_a / name).empty());
  }
}

TEST_CASE("arfwedson-report writes the comparison grid") {
  TempDir tmp;
  const fs::path out = tmp.path / "report.csv";
  const RunOutput res = run_cli(
      "arfwedson-report --lambda 0.5 --theta 1 --r 1 --T 1 --u-min 2 --u-max 10 --u-step 2 "
      "--out " +
      out.string());
  REQUIRE(res.exit_code == 0);
  const CsvTable table = read_csv(out.string());
  CHECK(table.header ==
        std::vector<std::string>{"u", "T", "exact", "arfwedson", "relative_error", "regime"});
  REQUIRE(table.rows.size() == 5);
  // Relative error at the last grid point is below the first one.
  const double first = std::stod(table.rows.front()[4]);
  const double last = std::stod(table.rows.back()[4]);
  CHECK(last < first);
}

}
