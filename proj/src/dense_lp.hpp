#pragma once

#include <vector>

namespace ecopark::evaluator::detail {

enum class DenseStatus { kOptimal, kInfeasible, kUnbounded };

struct DenseResult {
  DenseStatus status = DenseStatus::kInfeasible;
  double objective = 0.0;
  std::vector<double> x;
};

/// min c'x  s.t.  A x <= b,  x >= 0.  Row-major dense A. Two-phase tableau
/// simplex with Bland's rule; meant for a few dozen rows and columns.
DenseResult solve_dense_lp(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                           const std::vector<double>& c);

}  // namespace ecopark::evaluator::detail
