#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecopark/design.hpp"
#include "ecopark/evaluator.hpp"
#include "ecopark/park_model.hpp"
#include "ecopark/solver.hpp"

namespace ecopark::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad command line or manifest; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunManifest {
  std::string name;           // label in comparison tables; variant when empty
  std::string scenario_path;
  std::string variant;        // empty selects the base scenario
  double rel_gap = 1e-4;
  double time_limit = 3600.0;  // seconds
  int workers = 1;
  std::string solver_cmd;     // external MPS solver; internal when empty
  std::string out_dir;        // no artifacts when empty
  std::uint64_t seed = 0;     // recorded only; the solver is deterministic

  std::string label() const;
};

/// Parses a manifest JSON document. Relative scenario and output paths are
/// resolved against base_dir.
RunManifest manifest_from_json(std::string_view text, const std::string& base_dir = {});
RunManifest load_manifest(const std::string& path);

/// Loads the scenario of a manifest. Unknown variants raise UsageError.
park::Scenario load_manifest_scenario(const RunManifest& m);

struct SolverSummary {
  solver::SolveStatus status = solver::SolveStatus::kInfeasible;
  double objective = 0.0;
  double best_bound = 0.0;
  double gap = 0.0;
  std::int64_t nodes = 0;
  std::int64_t lp_iterations = 0;
  std::vector<std::string> diagnostics;
};

struct RunOutcome {
  int exit_code = kExitFailure;
  park::Scenario scenario;
  std::optional<SolverSummary> solver;
  std::optional<formulation::Design> design;
  std::optional<evaluator::DesignReport> report;
  std::string error;  // set when the run could not produce a design
};

/// Builds and solves the model, decodes and re-evaluates the incumbent and
/// writes the artifacts when an output directory is set. Progress goes to log.
RunOutcome run_solve(const RunManifest& m, std::ostream& log);

/// Evaluates a fixed design; exit code 0 iff it is feasible.
RunOutcome run_evaluate(const RunManifest& m, const std::string& design_path, std::ostream& log);

// Artifact renderers. All output is deterministic for identical inputs.
std::string report_to_json(const park::Scenario& s, const std::string& variant,
                           const evaluator::DesignReport& r, const SolverSummary* solver);
std::string costs_csv(const park::Scenario& s, const evaluator::DesignReport& r);
std::string series_csv(const park::Scenario& s, const evaluator::DesignReport& r);
std::string layout_text(const park::Scenario& s, const formulation::Design& d);
std::string layout_csv(const park::Scenario& s, const formulation::Design& d);
std::string violation_table(const std::vector<evaluator::Violation>& v);

/// Writes design.json, report.json, costs.csv, series.csv, layout.txt and
/// layout.csv into dir (created when missing).
void write_artifacts(const std::string& dir, const park::Scenario& s, const std::string& variant,
                     const formulation::Design& d, const evaluator::DesignReport& r,
                     const SolverSummary* solver);

struct ComparisonRow {
  std::string label;
  bool ok = false;
  std::string status;
  double total = 0.0;
  std::vector<double> discharged_t;  // per scenario component, tonnes over the horizon
  std::vector<double> recovered;     // per scenario resource, horizon units
};

/// One row per run; relative deltas of cost and discharge against the first
/// row that succeeded.
std::string comparison_table(const std::vector<std::string>& components,
                             const std::vector<std::string>& resources,
                             const std::vector<ComparisonRow>& rows);
std::string comparison_csv(const std::vector<std::string>& components,
                           const std::vector<std::string>& resources,
                           const std::vector<ComparisonRow>& rows);

/// Entry point of the `ecopark` tool. Returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ecopark::cli
