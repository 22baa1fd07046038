#include <algorithm>
#include <cmath>

#include "dual_simplex.hpp"
#include "ecopark/solver.hpp"

namespace ecopark::solver {

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration_limit";
    case LpStatus::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kLimit: return "limit";
  }
  return "unknown";
}

double relative_gap(double incumbent, double bound) {
  if (!std::isfinite(incumbent) || !std::isfinite(bound)) return milp::kInfinity;
  return std::max(0.0, incumbent - bound) / std::max(std::fabs(incumbent), 1e-10);
}

LpResult solve_lp(const milp::MilpModel& model, const std::map<milp::VarId, double>& fixings,
                  const LpOptions& options) {
  detail::DualSimplex lp(model, options);
  for (const auto& [id, value] : fixings) {
    const milp::Variable& v = model.variable(id);
    if (value < v.lower - 1e-12 || value > v.upper + 1e-12) {
      // Fixing outside the bounds: the restricted LP is empty.
      return LpResult{LpStatus::kInfeasible, 0.0, {}, 0};
    }
    lp.set_bounds(static_cast<std::size_t>(id.index), value, value);
  }
  LpResult result;
  result.status = lp.solve();
  result.iterations = lp.iterations();
  if (result.status == LpStatus::kOptimal) {
    result.objective = lp.objective();
    result.x = lp.primal();
  }
  return result;
}

}  // namespace ecopark::solver
