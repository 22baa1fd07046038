#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecopark/milp_core.hpp"

namespace ecopark::solver {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit, kNumericalFailure };

struct LpOptions {
  double primal_tol = 1e-7;
  double dual_tol = 1e-7;
  std::int64_t iteration_limit = 1'000'000;
  bool perturb = true;
};

struct LpResult {
  LpStatus status = LpStatus::kNumericalFailure;
  double objective = 0.0;
  std::vector<double> x;  // by variable id; empty unless optimal
  std::int64_t iterations = 0;
};

/// LP relaxation (binaries relaxed to their bounds) with optional fixings.
LpResult solve_lp(const milp::MilpModel& model, const std::map<milp::VarId, double>& fixings = {},
                  const LpOptions& options = {});

struct SolveOptions {
  double rel_gap = 1e-6;
  double abs_gap = 1e-9;
  std::int64_t node_limit = 10'000'000;
  double time_limit = 1e9;  // seconds
  double integrality_tol = 1e-6;
  double feasibility_tol = 1e-7;
  int worker_count = 1;
  // Called for every new incumbent with (objective, nodes so far).
  std::function<void(double, std::int64_t)> on_incumbent;
};

enum class SolveStatus { kOptimal, kFeasible, kInfeasible, kUnbounded, kLimit };

struct SolveResult {
  SolveStatus status = SolveStatus::kInfeasible;
  std::optional<std::vector<double>> incumbent;
  double objective = milp::kInfinity;
  double best_bound = -milp::kInfinity;
  double gap = milp::kInfinity;
  double root_bound = -milp::kInfinity;
  std::int64_t nodes_explored = 0;
  std::int64_t lp_iterations = 0;
  double wall_time = 0.0;
  // Global lower bound recorded after every processed node.
  std::vector<double> bound_trace;
  std::vector<std::string> diagnostics;

  bool has_incumbent() const { return incumbent.has_value(); }
};

double relative_gap(double incumbent, double bound);

SolveResult solve_milp(const milp::MilpModel& model, const SolveOptions& options = {});

struct ExternalOptions {
  std::string command;
  // Directory for the exported model; a fresh temporary one when empty.
  std::string work_dir;
  // Extra domain check on the imported assignment; returns violation texts.
  std::function<std::vector<std::string>(const std::vector<double>&)> verifier;
  // Bound from an internal solve for cross-checking the external answer.
  std::optional<double> reference_bound;
  double rel_gap = 1e-6;
  double feasibility_tol = 1e-7;
};

/// Exports the model, runs `command <file.mps>`, reads `<file.mps>.sol`.
SolveResult solve_external(const milp::MilpModel& model, const ExternalOptions& options);

std::string to_string(LpStatus s);
std::string to_string(SolveStatus s);

}  // namespace ecopark::solver
