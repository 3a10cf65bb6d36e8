#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "riskcap/allocate.hpp"
#include "riskcap/calibrate.hpp"
#include "riskcap/model.hpp"
#include "riskcap/ruin.hpp"
#include "riskcap/simulate.hpp"

namespace riskcap {

// Shortest decimal rendering that round-trips the exact double.
std::string format_double(double value);

// Model and allocation configuration (JSON; states and lines are 1-based in
// files, 0-based in code). Schema errors throw std::invalid_argument.
ModelSpec model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelSpec& model);
ModelSpec load_model_file(const std::string& path);

AllocationProblem allocation_from_json(const nlohmann::json& j);
AllocationProblem load_allocation_file(const std::string& path);

nlohmann::json to_json(const ArfwedsonDiagnostics& diag);
nlohmann::json to_json(const RuinResult& result);
nlohmann::json to_json(const AllocationResult& result);
nlohmann::json to_json(const KktReport& report);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Plain comma-separated values, LF line endings, no quoting (no emitted field
// ever contains a comma). Rewrites are byte-identical for identical tables.
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

// Observation schema: period,line,count,sizes with the claim sizes joined by
// ';'. One row per (period, line); periods must cover 1..M.
void write_observations_csv(const std::string& path,
                            const std::vector<ObservationBatch>& batches);
std::vector<ObservationBatch> read_observations_csv(const std::string& path, int n_lines);

// Calibration trace schema: m,p_1..p_J,mode,w with the prior in row m = 0.
void write_trace_csv(const std::string& path, const std::vector<PosteriorState>& trace);

struct ArfwedsonReportRow {
  double u = 0.0;
  double T = 0.0;
  double exact = 0.0;
  double approx = 0.0;
  double relative_error = 0.0;
  ArfwedsonRegime regime = ArfwedsonRegime::Case1Early;
};

// Report schema: u,T,exact,arfwedson,relative_error,regime.
void write_arfwedson_csv(const std::string& path, const std::vector<ArfwedsonReportRow>& rows);

}  // namespace riskcap
