#include "dense_lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace ecopark::evaluator::detail {

namespace {

struct Tableau {
  std::size_t rows = 0, cols = 0;  // cols excludes the rhs column
  std::vector<double> t;           // (rows + 1) x (cols + 1), last row = reduced costs
  std::vector<std::size_t> basis;

  double& at(std::size_t r, std::size_t c) { return t[r * (cols + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols); }

  void pivot(std::size_t pr, std::size_t pc) {
    const double p = at(pr, pc);
    for (std::size_t c = 0; c <= cols; ++c) at(pr, c) /= p;
    for (std::size_t r = 0; r <= rows; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
    basis[pr] = pc;
  }

  void set_costs(const std::vector<double>& cost) {
    for (std::size_t c = 0; c <= cols; ++c) at(rows, c) = c < cols ? cost[c] : 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double f = at(rows, basis[r]);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols; ++c) at(rows, c) -= f * at(r, c);
    }
  }

  // Bland's rule: lowest-index improving column, lowest-index basic variable
  // among ratio ties. Returns false when unbounded.
  bool optimize(std::size_t allowed_cols, double cost_tol) {
    constexpr double kPivotTol = 1e-11;
    for (;;) {
      std::size_t enter = cols;
      for (std::size_t c = 0; c < allowed_cols; ++c) {
        if (at(rows, c) < -cost_tol) {
          enter = c;
          break;
        }
      }
      if (enter == cols) return true;
      std::size_t leave = rows;
      double best = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double a = at(r, enter);
        if (a <= kPivotTol) continue;
        const double ratio = rhs(r) / a;
        if (leave == rows || ratio < best - 1e-12 ||
            (ratio <= best + 1e-12 && basis[r] < basis[leave])) {
          leave = r;
          best = ratio;
        }
      }
      if (leave == rows) return false;
      pivot(leave, enter);
    }
  }
};

}  // namespace

DenseResult solve_dense_lp(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                           const std::vector<double>& c) {
  const std::size_t m = a.size();
  const std::size_t n = c.size();
  std::size_t n_art = 0;
  for (double bi : b) n_art += bi < 0.0 ? 1 : 0;

  Tableau tab;
  tab.rows = m;
  tab.cols = n + m + n_art;
  tab.t.assign((m + 1) * (tab.cols + 1), 0.0);
  tab.basis.assign(m, 0);
  std::size_t art = n + m;
  for (std::size_t r = 0; r < m; ++r) {
    const double sign = b[r] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.at(r, j) = sign * a[r][j];
    tab.at(r, n + r) = sign;
    tab.rhs(r) = sign * b[r];
    if (sign < 0.0) {
      tab.at(r, art) = 1.0;
      tab.basis[r] = art++;
    } else {
      tab.basis[r] = n + r;
    }
  }

  double cmax = 1.0;
  for (double cj : c) cmax = std::max(cmax, std::fabs(cj));
  DenseResult res;

  if (n_art > 0) {
    std::vector<double> phase1(tab.cols, 0.0);
    for (std::size_t j = n + m; j < tab.cols; ++j) phase1[j] = 1.0;
    tab.set_costs(phase1);
    tab.optimize(tab.cols, 1e-10);
    double bmax = 1.0;
    for (double bi : b) bmax = std::max(bmax, std::fabs(bi));
    if (-tab.at(m, tab.cols) > 1e-9 * bmax) return res;
    // Drive zero-level artificials out of the basis where possible.
    for (std::size_t r = 0; r < m; ++r) {
      if (tab.basis[r] < n + m) continue;
      for (std::size_t j = 0; j < n + m; ++j) {
        if (std::fabs(tab.at(r, j)) > 1e-9) {
          tab.pivot(r, j);
          break;
        }
      }
    }
    // Artificials still basic sit on redundant rows at level zero; phase two
    // never lets an artificial enter, so those rows stay untouched.
  }

  std::vector<double> cost(tab.cols, 0.0);
  std::copy(c.begin(), c.end(), cost.begin());
  tab.set_costs(cost);
  if (!tab.optimize(n + m, 1e-10 * cmax)) {
    res.status = DenseStatus::kUnbounded;
    return res;
  }
  res.status = DenseStatus::kOptimal;
  res.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (tab.basis[r] < n) res.x[tab.basis[r]] = std::max(0.0, tab.rhs(r));
  }
  res.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) res.objective += c[j] * res.x[j];
  return res;
}

}  // namespace ecopark::evaluator::detail
