#include "riskcap/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace riskcap {

namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k) out.push_back(sep);
    out += parts[k];
  }
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("config: " + what); }

const json& require(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing field '") + key + "'");
  return *it;
}

double as_double(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

int as_int(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

std::string as_string(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> as_double_vector(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_array()) fail(std::string("field '") + key + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& e : v) {
    if (!e.is_number()) fail(std::string("field '") + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

ClaimDistribution claim_from_json(const json& j) {
  const std::string type = as_string(j, "type");
  if (type == "exponential") {
    if (j.contains("rate")) return ClaimDistribution::exponential_rate(as_double(j, "rate"));
    if (j.contains("mean")) return ClaimDistribution::exponential_mean(as_double(j, "mean"));
    fail("exponential claim needs 'rate' or 'mean'");
  }
  if (type == "gaussian")
    return ClaimDistribution::gaussian(as_double(j, "mean"), as_double(j, "std"));
  fail("unknown claim type '" + type + "'");
}

json claim_to_json(const ClaimDistribution& claim) {
  json j;
  if (claim.is_exponential()) {
    j["type"] = "exponential";
    j["rate"] = claim.rate();
  } else {
    j["type"] = "gaussian";
    j["mean"] = claim.mean();
    j["std"] = claim.std_dev();
  }
  return j;
}

int state_index(const json& j, const char* key, int n_states) {
  const int s = as_int(j, key);
  if (s < 1 || s > n_states) fail(std::string("field '") + key + "' must be a 1-based state index");
  return s - 1;
}

RuinMethod method_from_string(const std::string& s) {
  if (s == "auto") return RuinMethod::Auto;
  if (s == "exact") return RuinMethod::Exact;
  if (s == "arfwedson") return RuinMethod::Arfwedson;
  if (s == "monte_carlo") return RuinMethod::MonteCarlo;
  fail("unknown ruin method '" + s + "'");
}

SubsetMode mode_from_string(const std::string& s) {
  if (s == "all_ruin") return SubsetMode::AllRuin;
  if (s == "any_ruin") return SubsetMode::AnyRuin;
  if (s == "aggregate_ruin") return SubsetMode::AggregateRuin;
  fail("unknown constraint mode '" + s + "'");
}

SubsetFamily family_from_string(const std::string& s) {
  if (s == "singletons") return SubsetFamily::Singletons;
  if (s == "full_and_singletons") return SubsetFamily::FullAndSingletons;
  if (s == "all_subsets") return SubsetFamily::AllSubsets;
  fail("unknown subset family '" + s + "'");
}

json parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: " + std::string(e.what()));
  }
  return j;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

ModelSpec model_from_json(const json& j) {
  ModelSpec model;
  const json& env = require(j, "environment");
  model.environment.n_states = as_int(env, "J");
  if (model.environment.n_states < 1) fail("environment J must be >= 1");
  model.environment.p = as_double_vector(env, "p");

  const std::string dyn = env.contains("dynamics") ? as_string(env, "dynamics") : "fixed";
  if (dyn == "fixed") {
    model.environment.dynamics = EnvironmentSpec::Dynamics::Fixed;
    model.environment.fixed_state =
        env.contains("state") ? state_index(env, "state", model.environment.n_states) : 0;
  } else if (dyn == "switch_at") {
    model.environment.dynamics = EnvironmentSpec::Dynamics::SwitchAt;
    model.environment.switch_period = as_int(env, "period");
    model.environment.switch_from = state_index(env, "from", model.environment.n_states);
    model.environment.switch_to = state_index(env, "to", model.environment.n_states);
  } else if (dyn == "resampled") {
    model.environment.dynamics = EnvironmentSpec::Dynamics::Resampled;
  } else {
    fail("unknown dynamics '" + dyn + "'");
  }

  const json& lines = require(j, "lines");
  if (!lines.is_array() || lines.empty()) fail("'lines' must be a nonempty array");
  for (const json& entry : lines) {
    BusinessLine line;
    line.premium_rate = as_double(entry, "r");
    line.lambda = as_double_vector(entry, "lambda");
    const json& claims = require(entry, "claims");
    if (claims.is_object()) {
      const ClaimDistribution claim = claim_from_json(claims);
      line.claims.assign(model.environment.n_states, claim);
    } else if (claims.is_array()) {
      for (const json& c : claims) line.claims.push_back(claim_from_json(c));
    } else {
      fail("'claims' must be an object or an array");
    }
    model.lines.push_back(std::move(line));
  }
  model.validate();
  return model;
}

json model_to_json(const ModelSpec& model) {
  json env;
  env["J"] = model.environment.n_states;
  env["p"] = model.environment.p;
  switch (model.environment.dynamics) {
    case EnvironmentSpec::Dynamics::Fixed:
      env["dynamics"] = "fixed";
      env["state"] = model.environment.fixed_state + 1;
      break;
    case EnvironmentSpec::Dynamics::SwitchAt:
      env["dynamics"] = "switch_at";
      env["period"] = model.environment.switch_period;
      env["from"] = model.environment.switch_from + 1;
      env["to"] = model.environment.switch_to + 1;
      break;
    case EnvironmentSpec::Dynamics::Resampled:
      env["dynamics"] = "resampled";
      break;
  }

  json lines = json::array();
  for (const BusinessLine& line : model.lines) {
    json entry;
    entry["r"] = line.premium_rate;
    entry["lambda"] = line.lambda;
    json claims = json::array();
    for (const ClaimDistribution& c : line.claims) claims.push_back(claim_to_json(c));
    entry["claims"] = std::move(claims);
    lines.push_back(std::move(entry));
  }
  return json{{"lines", std::move(lines)}, {"environment", std::move(env)}};
}

ModelSpec load_model_file(const std::string& path) { return model_from_json(parse_file(path)); }

AllocationProblem allocation_from_json(const json& j) {
  AllocationProblem problem;
  problem.model = model_from_json(j);
  const int n = problem.model.n_lines();

  const json& a = require(j, "allocation");
  problem.T = as_double(a, "T");
  problem.weights =
      a.contains("weights") ? as_double_vector(a, "weights") : problem.model.environment.p;

  const json& cons = require(a, "constraints");
  if (!cons.is_array() || cons.empty()) fail("'constraints' must be a nonempty array");
  for (const json& entry : cons) {
    const SubsetMode mode = mode_from_string(as_string(entry, "mode"));
    if (entry.contains("family")) {
      const double base = entry.contains("base") ? as_double(entry, "base") : 0.001;
      const auto family =
          make_subset_family(family_from_string(as_string(entry, "family")), n, mode, base);
      problem.constraints.insert(problem.constraints.end(), family.begin(), family.end());
      continue;
    }
    SubsetConstraintSpec c;
    c.mode = mode;
    const json& subset = require(entry, "subset");
    if (!subset.is_array() || subset.empty()) fail("'subset' must be a nonempty array");
    for (const json& idx : subset) {
      if (!idx.is_number_integer()) fail("'subset' must hold 1-based line indices");
      const int i = idx.get<int>();
      if (i < 1 || i > n) fail("'subset' line index out of range");
      c.subset.push_back(i - 1);
    }
    if (entry.contains("delta")) {
      c.delta = as_double(entry, "delta");
    } else {
      const double base = entry.contains("base") ? as_double(entry, "base") : 0.001;
      c.delta = std::pow(base, static_cast<double>(c.subset.size()));
    }
    problem.constraints.push_back(std::move(c));
  }

  if (a.contains("u0")) problem.u0 = as_double_vector(a, "u0");
  if (a.contains("method")) problem.per_line_method = method_from_string(as_string(a, "method"));
  if (a.contains("optimizer")) {
    const json& o = a["optimizer"];
    if (o.contains("tolerance")) problem.simplex.tolerance = as_double(o, "tolerance");
    if (o.contains("max_iterations")) problem.simplex.max_iterations = as_int(o, "max_iterations");
    if (o.contains("restarts")) problem.simplex.restarts = as_int(o, "restarts");
    if (o.contains("initial_step")) problem.simplex.initial_step = as_double(o, "initial_step");
  }
  if (a.contains("penalty")) {
    const json& p = a["penalty"];
    if (p.contains("rho0_scale")) problem.penalty.rho0_scale = as_double(p, "rho0_scale");
    if (p.contains("growth")) problem.penalty.growth = as_double(p, "growth");
    if (p.contains("max_rounds")) problem.penalty.max_rounds = as_int(p, "max_rounds");
    if (p.contains("feasibility_tol"))
      problem.penalty.feasibility_tol = as_double(p, "feasibility_tol");
    if (p.contains("active_tol")) problem.penalty.active_tol = as_double(p, "active_tol");
    if (p.contains("restoration_max"))
      problem.penalty.restoration_max = as_int(p, "restoration_max");
  }
  if (a.contains("mc")) {
    const json& m = a["mc"];
    if (m.contains("n_paths")) problem.mc.n_paths = m["n_paths"].get<long>();
    if (m.contains("seed")) problem.mc.seed = m["seed"].get<std::uint64_t>();
    if (m.contains("threads")) problem.mc.threads = as_int(m, "threads");
    if (m.contains("period_length")) problem.mc.period_length = as_double(m, "period_length");
  }
  problem.validate();
  return problem;
}

AllocationProblem load_allocation_file(const std::string& path) {
  return allocation_from_json(parse_file(path));
}

json to_json(const ArfwedsonDiagnostics& diag) {
  json j;
  j["regime"] = to_string(diag.regime);
  j["alpha"] = diag.alpha;
  j["alpha_tilde"] = diag.alpha_tilde;
  j["beta"] = diag.beta;
  j["gamma"] = diag.gamma;
  j["K"] = diag.big_k;
  j["K_tilde"] = diag.k_tilde;
  j["raw_value"] = diag.raw_value;
  j["clamp_warning"] = diag.clamp_warning;
  return j;
}

json to_json(const RuinResult& result) {
  json j;
  j["value"] = result.value;
  j["method"] = to_string(result.method);
  if (result.method == RuinMethod::MonteCarlo)
    j["standard_error"] = result.mc_standard_error;
  if (result.arfwedson) j["arfwedson"] = to_json(*result.arfwedson);
  return j;
}

json to_json(const AllocationResult& result) {
  json j;
  j["u"] = result.u_star;
  j["objective"] = result.objective;
  j["slacks"] = result.slacks;
  json active = json::array();
  for (int m : result.active) active.push_back(m + 1);  // 1-based for output
  j["active_constraints"] = std::move(active);
  j["penalty_rounds"] = result.penalty_rounds;
  j["restoration_steps"] = result.restoration_steps;
  j["evaluations"] = result.evaluations;
  j["converged"] = result.converged;
  return j;
}

json to_json(const KktReport& report) {
  json j;
  json active = json::array();
  for (int m : report.active) active.push_back(m + 1);
  j["active_constraints"] = std::move(active);
  j["descent_direction"] = report.descent_direction;
  j["gradients"] = report.gradients;
  j["multipliers"] = report.multipliers;
  j["stationarity_residual"] = report.stationarity_residual;
  j["multipliers_nonnegative"] = report.multipliers_nonnegative;
  return j;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << join(table.header, ',') << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw std::invalid_argument("csv: row width differs from header");
    out << join(row, ',') << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open csv file: " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      table.header = split(line, ',');
      first = false;
    } else {
      table.rows.push_back(split(line, ','));
    }
  }
  if (first) throw std::invalid_argument("csv: empty file: " + path);
  return table;
}

namespace {

int parse_int(const std::string& text, const char* what) {
  int value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::invalid_argument(std::string("csv: bad ") + what + " value '" + text + "'");
  return value;
}

double parse_double(const std::string& text, const char* what) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::invalid_argument(std::string("csv: bad ") + what + " value '" + text + "'");
  return value;
}

}  // namespace

void write_observations_csv(const std::string& path,
                            const std::vector<ObservationBatch>& batches) {
  CsvTable table;
  table.header = {"period", "line", "count", "sizes"};
  for (const ObservationBatch& batch : batches) {
    for (std::size_t i = 0; i < batch.counts.size(); ++i) {
      std::vector<std::string> sizes;
      sizes.reserve(batch.sizes[i].size());
      for (double z : batch.sizes[i]) sizes.push_back(format_double(z));
      table.rows.push_back({std::to_string(batch.period), std::to_string(i + 1),
                            std::to_string(batch.counts[i]), join(sizes, ';')});
    }
  }
  write_csv(path, table);
}

std::vector<ObservationBatch> read_observations_csv(const std::string& path, int n_lines) {
  const CsvTable table = read_csv(path);
  const std::vector<std::string> expected = {"period", "line", "count", "sizes"};
  if (table.header != expected)
    throw std::invalid_argument("csv: expected header period,line,count,sizes in " + path);

  int max_period = 0;
  for (const auto& row : table.rows) {
    if (row.size() != 4) throw std::invalid_argument("csv: observation rows need 4 fields");
    max_period = std::max(max_period, parse_int(row[0], "period"));
  }

  std::vector<ObservationBatch> batches(max_period);
  std::vector<std::vector<bool>> seen(max_period, std::vector<bool>(n_lines, false));
  for (int m = 0; m < max_period; ++m) {
    batches[m].period = m + 1;
    batches[m].counts.assign(n_lines, 0);
    batches[m].sizes.assign(n_lines, {});
  }
  for (const auto& row : table.rows) {
    const int period = parse_int(row[0], "period");
    const int line = parse_int(row[1], "line");
    if (period < 1) throw std::invalid_argument("csv: period indices are 1-based");
    if (line < 1 || line > n_lines)
      throw std::invalid_argument("csv: line index out of range: " + row[1]);
    ObservationBatch& batch = batches[period - 1];
    if (seen[period - 1][line - 1])
      throw std::invalid_argument("csv: duplicate (period, line) row");
    seen[period - 1][line - 1] = true;
    batch.counts[line - 1] = static_cast<std::uint32_t>(parse_int(row[2], "count"));
    if (!row[3].empty())
      for (const std::string& z : split(row[3], ';'))
        batch.sizes[line - 1].push_back(parse_double(z, "size"));
    if (batch.sizes[line - 1].size() != batch.counts[line - 1])
      throw std::invalid_argument("csv: size list length must equal the count");
  }
  for (int m = 0; m < max_period; ++m)
    for (int i = 0; i < n_lines; ++i)
      if (!seen[m][i])
        throw std::invalid_argument("csv: missing row for period " + std::to_string(m + 1) +
                                    ", line " + std::to_string(i + 1));
  return batches;
}

void write_trace_csv(const std::string& path, const std::vector<PosteriorState>& trace) {
  if (trace.empty()) throw std::invalid_argument("trace: nothing to write");
  const std::size_t J = trace.front().p.size();
  CsvTable table;
  table.header = {"m"};
  for (std::size_t j = 1; j <= J; ++j) table.header.push_back("p" + std::to_string(j));
  table.header.push_back("mode");
  table.header.push_back("w");
  for (const PosteriorState& state : trace) {
    std::vector<std::string> row;
    row.push_back(std::to_string(state.m));
    for (double pj : state.p) row.push_back(format_double(pj));
    row.push_back(to_string(state.mode));
    row.push_back(format_double(state.w));
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

void write_arfwedson_csv(const std::string& path, const std::vector<ArfwedsonReportRow>& rows) {
  CsvTable table;
  table.header = {"u", "T", "exact", "arfwedson", "relative_error", "regime"};
  for (const ArfwedsonReportRow& r : rows)
    table.rows.push_back({format_double(r.u), format_double(r.T), format_double(r.exact),
                          format_double(r.approx), format_double(r.relative_error),
                          to_string(r.regime)});
  write_csv(path, table);
}

}  // namespace riskcap
