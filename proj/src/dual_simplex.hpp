#pragma once

// Bounded dual simplex on the scaled form  [A I] (x, s) = 0, where the
// logical s_i = -a_i x carries the row bounds. Every variable is kept boxed
// (infinite bounds become large artificial ones) so any basis can be made
// dual feasible by moving nonbasic variables to the bound matching the sign
// of their reduced cost; no phase 1 is needed.

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cstdint>
#include <vector>

#include "ecopark/milp_core.hpp"
#include "ecopark/solver.hpp"

namespace ecopark::solver::detail {

enum class VarStatus : std::uint8_t { kLower = 0, kUpper = 1, kBasic = 2 };

struct Basis {
  std::vector<VarStatus> status;  // structurals then logicals

  bool empty() const { return status.empty(); }
};

class DualSimplex {
 public:
  DualSimplex(const milp::MilpModel& model, const LpOptions& options);

  std::size_t num_structurals() const { return n_; }

  /// Bounds in model units.
  void set_bounds(std::size_t j, double lower, double upper);
  double lower(std::size_t j) const;
  double upper(std::size_t j) const;
  void reset_bounds();

  LpStatus solve();

  /// Objective in model units including the constant.
  double objective() const;
  std::vector<double> primal() const;
  std::int64_t iterations() const { return iterations_; }

  Basis basis() const;
  void set_basis(const Basis& basis);
  void reset_basis() { slack_basis(); }

 private:
  using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  using SpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

  struct Eta {
    int row = 0;
    double pivot = 1.0;
    std::vector<int> index;
    std::vector<double> value;
  };

  void build(const milp::MilpModel& model);
  void compute_logical_bounds();
  void slack_basis();
  bool refactor();
  void base_solve(Eigen::VectorXd& v) const;
  void base_solve_transposed(Eigen::VectorXd& v) const;
  void ftran(Eigen::VectorXd& v) const;
  void btran(Eigen::VectorXd& v) const;
  void add_column(Eigen::VectorXd& v, std::size_t j, double scale) const;
  double column_dot(std::size_t j, const Eigen::VectorXd& y) const;
  void recompute_primal();
  void recompute_dual();
  bool make_dual_feasible();
  void place_nonbasic(std::size_t j);
  void perturb_costs();
  void remove_perturbation();
  int choose_leaving() const;
  bool artificial_active() const;
  LpStatus iterate();

  LpOptions options_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  SpMat a_;      // scaled constraint matrix, m x n
  SpMatRow ar_;  // row-major copy
  std::vector<double> col_scale_;
  std::vector<double> row_scale_;
  double cost_scale_ = 1.0;
  double objective_constant_ = 0.0;

  // Model-unit bounds for structurals; scaled working bounds for all.
  std::vector<double> model_lower_;
  std::vector<double> model_upper_;
  std::vector<double> user_lower_;
  std::vector<double> user_upper_;
  std::vector<double> row_lower_;  // scaled bounds of logicals from row senses
  std::vector<double> row_upper_;
  std::vector<double> lo_;
  std::vector<double> up_;
  std::vector<bool> art_lo_;
  std::vector<bool> art_up_;

  std::vector<double> cost_base_;
  std::vector<double> cost_;
  bool perturbed_ = false;

  std::vector<double> x_;
  std::vector<double> d_;
  std::vector<VarStatus> status_;
  std::vector<int> head_;
  std::vector<int> pos_;
  std::vector<double> weight_;

  // Factor of the structural block of the basis (see refactor()).
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<int> block_pos_;    // basis positions holding structurals
  std::vector<int> block_col_;    // structural column at each of those, when factored
  std::vector<int> block_rows_;   // rows whose logical is nonbasic
  std::vector<int> block_row_;    // row -> index in block_rows_, or -1
  std::vector<int> logical_pos_;  // row -> basis position of its logical, or -1
  std::vector<Eta> etas_;
  bool factored_ = false;
  bool bounds_dirty_ = true;

  std::int64_t iterations_ = 0;

  // Scratch.
  std::vector<double> alpha_row_;
  std::vector<int> touched_;
};

}  // namespace ecopark::solver::detail
