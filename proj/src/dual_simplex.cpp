#include "dual_simplex.hpp"

#include <algorithm>
#include <cmath>

namespace ecopark::solver::detail {

namespace {

constexpr double kArtificialBound = 1e7;
constexpr int kScalingPasses = 6;
constexpr std::size_t kRefactorInterval = 100;
constexpr double kPivotTol = 1e-9;
constexpr double kPerturbBase = 5e-7;

double power_of_two(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) return 1.0;
  return std::exp2(std::round(std::log2(v)));
}

// Deterministic value in [0.5, 1) per index.
double jitter(std::size_t j) {
  std::uint64_t h = static_cast<std::uint64_t>(j) * 0x9E3779B97F4A7C15ull;
  h ^= h >> 29;
  return 0.5 + 0.5 * static_cast<double>(h % 1000003) / 1000003.0;
}

}  // namespace

DualSimplex::DualSimplex(const milp::MilpModel& model, const LpOptions& options)
    : options_(options) {
  build(model);
}

void DualSimplex::build(const milp::MilpModel& model) {
  n_ = model.num_variables();
  m_ = model.num_constraints();

  std::vector<Eigen::Triplet<double, int>> triplets;
  for (std::size_t i = 0; i < m_; ++i) {
    for (const milp::Term& t : model.constraints()[i].terms) {
      triplets.emplace_back(static_cast<int>(i), t.var.index, t.coef);
    }
  }
  SpMat a(static_cast<int>(m_), static_cast<int>(n_));
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.prune(0.0);
  a.makeCompressed();

  // Geometric scaling with power-of-two factors (exact in floating point).
  row_scale_.assign(m_, 1.0);
  col_scale_.assign(n_, 1.0);
  for (int pass = 0; pass < kScalingPasses; ++pass) {
    std::vector<double> rmin(m_, milp::kInfinity), rmax(m_, 0.0);
    for (int j = 0; j < a.outerSize(); ++j) {
      for (SpMat::InnerIterator it(a, j); it; ++it) {
        const double v = std::fabs(it.value()) * col_scale_[static_cast<std::size_t>(j)];
        const auto i = static_cast<std::size_t>(it.row());
        rmin[i] = std::min(rmin[i], v);
        rmax[i] = std::max(rmax[i], v);
      }
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (rmax[i] > 0.0) row_scale_[i] = 1.0 / std::sqrt(rmin[i] * rmax[i]);
    }
    for (int j = 0; j < a.outerSize(); ++j) {
      double cmin = milp::kInfinity, cmax = 0.0;
      for (SpMat::InnerIterator it(a, j); it; ++it) {
        const double v = std::fabs(it.value()) * row_scale_[static_cast<std::size_t>(it.row())];
        cmin = std::min(cmin, v);
        cmax = std::max(cmax, v);
      }
      if (cmax > 0.0) col_scale_[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(cmin * cmax);
    }
  }
  for (double& r : row_scale_) r = power_of_two(r);
  for (double& s : col_scale_) s = power_of_two(s);
  for (int j = 0; j < a.outerSize(); ++j) {
    for (SpMat::InnerIterator it(a, j); it; ++it) {
      it.valueRef() *= row_scale_[static_cast<std::size_t>(it.row())] *
                       col_scale_[static_cast<std::size_t>(j)];
    }
  }
  a_ = std::move(a);
  ar_ = a_;

  const std::size_t total = n_ + m_;
  cost_base_.assign(total, 0.0);
  for (const milp::Term& t : model.objective().terms) {
    const auto j = static_cast<std::size_t>(t.var.index);
    cost_base_[j] += t.coef * col_scale_[j];
  }
  double cmax = 0.0;
  for (double c : cost_base_) cmax = std::max(cmax, std::fabs(c));
  cost_scale_ = cmax > 0.0 ? power_of_two(cmax) : 1.0;
  for (double& c : cost_base_) c /= cost_scale_;
  cost_ = cost_base_;
  objective_constant_ = model.objective().constant;

  model_lower_.resize(n_);
  model_upper_.resize(n_);
  for (std::size_t j = 0; j < n_; ++j) {
    model_lower_[j] = model.variables()[j].lower;
    model_upper_[j] = model.variables()[j].upper;
  }
  user_lower_ = model_lower_;
  user_upper_ = model_upper_;

  row_lower_.assign(m_, -milp::kInfinity);
  row_upper_.assign(m_, milp::kInfinity);
  for (std::size_t i = 0; i < m_; ++i) {
    const auto& c = model.constraints()[i];
    const double rhs = -c.rhs * row_scale_[i];
    switch (c.sense) {
      case milp::Sense::kLessEqual: row_lower_[i] = rhs; break;
      case milp::Sense::kGreaterEqual: row_upper_[i] = rhs; break;
      case milp::Sense::kEqual: row_lower_[i] = row_upper_[i] = rhs; break;
    }
  }

  lo_.assign(total, 0.0);
  up_.assign(total, 0.0);
  art_lo_.assign(total, false);
  art_up_.assign(total, false);
  x_.assign(total, 0.0);
  d_.assign(total, 0.0);
  status_.assign(total, VarStatus::kLower);
  head_.assign(m_, 0);
  pos_.assign(total, -1);
  weight_.assign(m_, 1.0);
  alpha_row_.assign(total, 0.0);
  bounds_dirty_ = true;
  slack_basis();
}

void DualSimplex::set_bounds(std::size_t j, double lower, double upper) {
  if (lower > upper) throw SolverError("empty bound interval in LP");
  user_lower_.at(j) = lower;
  user_upper_.at(j) = upper;
  bounds_dirty_ = true;
}

double DualSimplex::lower(std::size_t j) const { return user_lower_.at(j); }
double DualSimplex::upper(std::size_t j) const { return user_upper_.at(j); }

void DualSimplex::reset_bounds() {
  user_lower_ = model_lower_;
  user_upper_ = model_upper_;
  bounds_dirty_ = true;
}

void DualSimplex::compute_logical_bounds() {
  for (std::size_t j = 0; j < n_; ++j) {
    const double s = col_scale_[j];
    art_lo_[j] = !std::isfinite(user_lower_[j]);
    art_up_[j] = !std::isfinite(user_upper_[j]);
    lo_[j] = art_lo_[j] ? -kArtificialBound : user_lower_[j] / s;
    up_[j] = art_up_[j] ? kArtificialBound : user_upper_[j] / s;
  }
  // Implied range of a_i x over the structural box, with infinities when any
  // contributing structural bound is missing.
  std::vector<double> act_min(m_, 0.0), act_max(m_, 0.0);
  std::vector<bool> min_inf(m_, false), max_inf(m_, false);
  for (std::size_t j = 0; j < n_; ++j) {
    for (SpMat::InnerIterator it(a_, static_cast<int>(j)); it; ++it) {
      const auto i = static_cast<std::size_t>(it.row());
      const double v = it.value();
      const double at_lo = v * lo_[j];
      const double at_up = v * up_[j];
      const bool lo_missing = art_lo_[j];
      const bool up_missing = art_up_[j];
      if (v > 0.0) {
        if (lo_missing) min_inf[i] = true; else act_min[i] += at_lo;
        if (up_missing) max_inf[i] = true; else act_max[i] += at_up;
      } else {
        if (up_missing) min_inf[i] = true; else act_min[i] += at_up;
        if (lo_missing) max_inf[i] = true; else act_max[i] += at_lo;
      }
    }
  }
  for (std::size_t i = 0; i < m_; ++i) {
    const std::size_t k = n_ + i;
    // The logical equals -a_i x.
    double lo = row_lower_[i];
    double up = row_upper_[i];
    if (!max_inf[i]) lo = std::max(lo, -act_max[i]);
    if (!min_inf[i]) up = std::min(up, -act_min[i]);
    if (lo > up) {
      // Within round-off the row is tight over the box; otherwise the empty
      // interval is reported as infeasibility by solve().
      const double tol = 1e-9 * std::max({1.0, std::fabs(lo), std::fabs(up)});
      if (lo - up <= tol) {
        lo = up = row_lower_[i] == row_upper_[i] ? row_lower_[i] : 0.5 * (lo + up);
      }
    }
    art_lo_[k] = !std::isfinite(lo);
    art_up_[k] = !std::isfinite(up);
    lo_[k] = art_lo_[k] ? -kArtificialBound : lo;
    up_[k] = art_up_[k] ? kArtificialBound : up;
  }
  bounds_dirty_ = false;
}

void DualSimplex::slack_basis() {
  for (std::size_t j = 0; j < n_; ++j) {
    status_[j] = cost_[j] >= 0.0 ? VarStatus::kLower : VarStatus::kUpper;
    pos_[j] = -1;
  }
  for (std::size_t i = 0; i < m_; ++i) {
    status_[n_ + i] = VarStatus::kBasic;
    head_[i] = static_cast<int>(n_ + i);
    pos_[n_ + i] = static_cast<int>(i);
  }
  std::fill(weight_.begin(), weight_.end(), 1.0);
  factored_ = false;
}

Basis DualSimplex::basis() const { return Basis{status_}; }

void DualSimplex::set_basis(const Basis& basis) {
  if (basis.status.size() != n_ + m_) throw SolverError("basis size mismatch");
  std::size_t basic = 0;
  for (VarStatus s : basis.status) basic += s == VarStatus::kBasic ? 1 : 0;
  if (basic != m_) throw SolverError("basis has the wrong number of basic variables");
  status_ = basis.status;
  std::size_t r = 0;
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (status_[j] == VarStatus::kBasic) {
      head_[r] = static_cast<int>(j);
      pos_[j] = static_cast<int>(r);
      ++r;
    } else {
      pos_[j] = -1;
    }
  }
  std::fill(weight_.begin(), weight_.end(), 1.0);
  factored_ = false;
}

// The basis is [A_S | I_L]: structural columns S and the unit columns of
// the rows L whose logical is basic. Only the block A[R, S] over the other
// rows R is factored; the logical part is eliminated explicitly.
bool DualSimplex::refactor() {
  etas_.clear();
  block_pos_.clear();
  block_col_.clear();
  block_row_.assign(m_, -1);
  logical_pos_.assign(m_, -1);
  std::vector<int> rows;
  for (std::size_t r = 0; r < m_; ++r) {
    const auto j = static_cast<std::size_t>(head_[r]);
    if (j >= n_) {
      logical_pos_[j - n_] = static_cast<int>(r);
    } else {
      block_pos_.push_back(static_cast<int>(r));
      block_col_.push_back(static_cast<int>(j));
    }
  }
  for (std::size_t i = 0; i < m_; ++i) {
    if (logical_pos_[i] < 0) {
      block_row_[i] = static_cast<int>(rows.size());
      rows.push_back(static_cast<int>(i));
    }
  }
  block_rows_ = std::move(rows);
  const std::size_t k = block_pos_.size();
  if (block_rows_.size() != k) {
    factored_ = false;
    return false;
  }
  if (k == 0) {
    factored_ = true;
    return true;
  }
  std::vector<Eigen::Triplet<double, int>> triplets;
  for (std::size_t c = 0; c < k; ++c) {
    for (SpMat::InnerIterator it(a_, block_col_[c]); it; ++it) {
      const int br = block_row_[static_cast<std::size_t>(it.row())];
      if (br >= 0) triplets.emplace_back(br, static_cast<int>(c), it.value());
    }
  }
  SpMat b(static_cast<int>(k), static_cast<int>(k));
  b.setFromTriplets(triplets.begin(), triplets.end());
  b.makeCompressed();
  lu_.analyzePattern(b);
  lu_.factorize(b);
  factored_ = lu_.info() == Eigen::Success;
  if (factored_) {
    // Reject numerically singular factors by a residual probe.
    Eigen::VectorXd probe = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k));
    Eigen::VectorXd sol = lu_.solve(probe);
    const double res = (b * sol - probe).lpNorm<Eigen::Infinity>();
    if (!std::isfinite(res) || res > 1e-6 * std::max(1.0, sol.lpNorm<Eigen::Infinity>())) {
      factored_ = false;
    }
  }
  return factored_;
}

// Solves B0 v = b for the factored basis (before eta updates). v is indexed
// by basis position, b by row.
void DualSimplex::base_solve(Eigen::VectorXd& v) const {
  const std::size_t k = block_pos_.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(m_));
  if (k > 0) {
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(k));
    for (std::size_t c = 0; c < k; ++c) {
      rhs[static_cast<Eigen::Index>(c)] = v[block_rows_[c]];
    }
    rhs = lu_.solve(rhs);
    // Rows with a basic logical absorb the structural part.
    for (std::size_t c = 0; c < k; ++c) {
      const double xs = rhs[static_cast<Eigen::Index>(c)];
      const auto r = static_cast<std::size_t>(block_pos_[c]);
      out[static_cast<Eigen::Index>(r)] = xs;
      if (xs == 0.0) continue;
      for (SpMat::InnerIterator it(a_, block_col_[c]); it; ++it) {
        if (block_row_[static_cast<std::size_t>(it.row())] < 0) v[it.row()] -= it.value() * xs;
      }
    }
  }
  for (std::size_t i = 0; i < m_; ++i) {
    if (logical_pos_[i] >= 0) out[logical_pos_[i]] = v[static_cast<Eigen::Index>(i)];
  }
  v.swap(out);
}

// Solves B0^T y = c. c is indexed by basis position, y by row.
void DualSimplex::base_solve_transposed(Eigen::VectorXd& v) const {
  const std::size_t k = block_pos_.size();
  Eigen::VectorXd y(static_cast<Eigen::Index>(m_));
  for (std::size_t i = 0; i < m_; ++i) {
    if (logical_pos_[i] >= 0) y[static_cast<Eigen::Index>(i)] = v[logical_pos_[i]];
  }
  if (k > 0) {
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(k));
    for (std::size_t c = 0; c < k; ++c) {
      const auto r = static_cast<std::size_t>(block_pos_[c]);
      double acc = v[static_cast<Eigen::Index>(r)];
      for (SpMat::InnerIterator it(a_, block_col_[c]); it; ++it) {
        const auto i = static_cast<std::size_t>(it.row());
        if (block_row_[i] < 0) acc -= it.value() * y[static_cast<Eigen::Index>(i)];
      }
      rhs[static_cast<Eigen::Index>(c)] = acc;
    }
    rhs = lu_.transpose().solve(rhs);
    for (std::size_t c = 0; c < k; ++c) {
      y[block_rows_[c]] = rhs[static_cast<Eigen::Index>(c)];
    }
  }
  v.swap(y);
}

void DualSimplex::ftran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  base_solve(v);
  for (const Eta& e : etas_) {
    const double xr = v[e.row] / e.pivot;
    v[e.row] = xr;
    if (xr == 0.0) continue;
    for (std::size_t k = 0; k < e.index.size(); ++k) v[e.index[k]] -= e.value[k] * xr;
  }
}

void DualSimplex::btran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double acc = v[it->row];
    for (std::size_t k = 0; k < it->index.size(); ++k) acc -= it->value[k] * v[it->index[k]];
    v[it->row] = acc / it->pivot;
  }
  base_solve_transposed(v);
}

void DualSimplex::add_column(Eigen::VectorXd& v, std::size_t j, double scale) const {
  if (j >= n_) {
    v[static_cast<Eigen::Index>(j - n_)] += scale;
    return;
  }
  for (SpMat::InnerIterator it(a_, static_cast<int>(j)); it; ++it) {
    v[it.row()] += scale * it.value();
  }
}

double DualSimplex::column_dot(std::size_t j, const Eigen::VectorXd& y) const {
  if (j >= n_) return y[static_cast<Eigen::Index>(j - n_)];
  double s = 0.0;
  for (SpMat::InnerIterator it(a_, static_cast<int>(j)); it; ++it) s += it.value() * y[it.row()];
  return s;
}

void DualSimplex::place_nonbasic(std::size_t j) {
  if (status_[j] == VarStatus::kBasic) return;
  x_[j] = status_[j] == VarStatus::kLower ? lo_[j] : up_[j];
}

void DualSimplex::recompute_primal() {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (status_[j] == VarStatus::kBasic) continue;
    place_nonbasic(j);
    if (x_[j] != 0.0) add_column(rhs, j, -x_[j]);
  }
  ftran(rhs);
  for (std::size_t r = 0; r < m_; ++r) x_[static_cast<std::size_t>(head_[r])] = rhs[static_cast<Eigen::Index>(r)];
}

void DualSimplex::recompute_dual() {
  Eigen::VectorXd y(static_cast<Eigen::Index>(m_));
  for (std::size_t r = 0; r < m_; ++r) y[static_cast<Eigen::Index>(r)] = cost_[static_cast<std::size_t>(head_[r])];
  btran(y);
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    d_[j] = status_[j] == VarStatus::kBasic ? 0.0 : cost_[j] - column_dot(j, y);
  }
}

// Moves nonbasic variables to the bound matching their reduced-cost sign.
// Returns true when any variable moved (primal values then need refreshing).
bool DualSimplex::make_dual_feasible() {
  bool moved = false;
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (status_[j] == VarStatus::kBasic) continue;
    if (status_[j] == VarStatus::kLower && d_[j] < -options_.dual_tol && lo_[j] < up_[j]) {
      status_[j] = VarStatus::kUpper;
      moved = true;
    } else if (status_[j] == VarStatus::kUpper && d_[j] > options_.dual_tol && lo_[j] < up_[j]) {
      status_[j] = VarStatus::kLower;
      moved = true;
    } else if (lo_[j] == up_[j] && status_[j] == VarStatus::kUpper) {
      status_[j] = VarStatus::kLower;
    }
  }
  return moved;
}

void DualSimplex::perturb_costs() {
  for (std::size_t j = 0; j < n_; ++j) {
    if (lo_[j] == up_[j]) continue;
    const double delta = kPerturbBase * (1.0 + std::fabs(cost_base_[j])) * jitter(j);
    if (status_[j] == VarStatus::kLower) {
      cost_[j] = cost_base_[j] + delta;
    } else if (status_[j] == VarStatus::kUpper) {
      cost_[j] = cost_base_[j] - delta;
    } else {
      cost_[j] = cost_base_[j] + (d_[j] >= 0.0 ? delta : -delta);
    }
  }
  perturbed_ = true;
}

void DualSimplex::remove_perturbation() {
  cost_ = cost_base_;
  perturbed_ = false;
}

int DualSimplex::choose_leaving() const {
  int best = -1;
  double best_score = 0.0;
  for (std::size_t r = 0; r < m_; ++r) {
    const auto j = static_cast<std::size_t>(head_[r]);
    const double tol = options_.primal_tol * std::max(1.0, std::fabs(x_[j]) * 1e-3);
    double infeas = 0.0;
    if (x_[j] < lo_[j] - tol) infeas = lo_[j] - x_[j];
    else if (x_[j] > up_[j] + tol) infeas = x_[j] - up_[j];
    if (infeas <= 0.0) continue;
    const double score = infeas * infeas / weight_[r];
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(r);
    }
  }
  return best;
}

bool DualSimplex::artificial_active() const {
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (status_[j] == VarStatus::kLower && art_lo_[j]) return true;
    if (status_[j] == VarStatus::kUpper && art_up_[j]) return true;
  }
  return false;
}

LpStatus DualSimplex::solve() {
  if (bounds_dirty_) compute_logical_bounds();
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (lo_[j] > up_[j]) return LpStatus::kInfeasible;
  }
  if (!factored_ && !refactor()) {
    slack_basis();
    if (!refactor()) return LpStatus::kNumericalFailure;
  }
  remove_perturbation();
  recompute_dual();
  if (options_.perturb) {
    perturb_costs();
    recompute_dual();
  }
  make_dual_feasible();
  recompute_primal();
  return iterate();
}

LpStatus DualSimplex::iterate() {
  int recoveries = 0;
  int final_checks = 0;
  std::vector<std::pair<double, int>> candidates;
  std::vector<int> flipped;

  auto full_refresh = [&]() -> bool {
    if (!refactor()) {
      slack_basis();
      if (!refactor()) return false;
    }
    recompute_dual();
    make_dual_feasible();
    recompute_primal();
    return true;
  };

  while (true) {
    if (iterations_ >= options_.iteration_limit) return LpStatus::kIterationLimit;
    if (etas_.size() >= kRefactorInterval) {
      if (!full_refresh()) return LpStatus::kNumericalFailure;
    }

    const int r = choose_leaving();
    if (r < 0) {
      if (perturbed_) {
        remove_perturbation();
        recompute_dual();
        if (make_dual_feasible()) recompute_primal();
        continue;
      }
      // Confirm optimality on fresh factors before reporting it.
      if (final_checks++ < 3 && !etas_.empty()) {
        if (!full_refresh()) return LpStatus::kNumericalFailure;
        continue;
      }
      return artificial_active() ? LpStatus::kUnbounded : LpStatus::kOptimal;
    }

    const auto leaving = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
    const bool to_upper = x_[leaving] > up_[leaving];
    const double sigma = to_upper ? 1.0 : -1.0;
    const double bound = to_upper ? up_[leaving] : lo_[leaving];
    const double infeasibility = std::fabs(x_[leaving] - bound);

    // Row r of B^{-1}.
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
    rho[r] = 1.0;
    btran(rho);

    // Pivot row alpha_j = rho^T a_j over nonbasic j.
    touched_.clear();
    for (std::size_t i = 0; i < m_; ++i) {
      const double ri = rho[static_cast<Eigen::Index>(i)];
      if (ri == 0.0) continue;
      for (SpMatRow::InnerIterator it(ar_, static_cast<int>(i)); it; ++it) {
        const auto j = static_cast<std::size_t>(it.col());
        if (alpha_row_[j] == 0.0) touched_.push_back(static_cast<int>(j));
        alpha_row_[j] += ri * it.value();
        if (alpha_row_[j] == 0.0) alpha_row_[j] = 1e-300;  // keep touched marker
      }
      const std::size_t k = n_ + i;
      if (alpha_row_[k] == 0.0) touched_.push_back(static_cast<int>(k));
      alpha_row_[k] += ri;
      if (alpha_row_[k] == 0.0) alpha_row_[k] = 1e-300;
    }

    // Ratio test candidates.
    candidates.clear();
    for (int jj : touched_) {
      const auto j = static_cast<std::size_t>(jj);
      if (status_[j] == VarStatus::kBasic || lo_[j] == up_[j]) continue;
      const double a = sigma * alpha_row_[j];
      if (std::fabs(a) < kPivotTol) continue;
      if (status_[j] == VarStatus::kLower && a > 0.0) {
        candidates.emplace_back(std::max(d_[j], 0.0) / a, jj);
      } else if (status_[j] == VarStatus::kUpper && a < 0.0) {
        candidates.emplace_back(std::min(d_[j], 0.0) / a, jj);
      }
    }

    if (candidates.empty()) {
      for (int jj : touched_) alpha_row_[static_cast<std::size_t>(jj)] = 0.0;
      if (recoveries++ < 2 && !etas_.empty()) {
        if (!full_refresh()) return LpStatus::kNumericalFailure;
        continue;
      }
      return LpStatus::kInfeasible;
    }
    std::sort(candidates.begin(), candidates.end());

    // Bound flipping: pass breakpoints while the dual slope stays positive.
    flipped.clear();
    double slope = infeasibility;
    std::size_t k = 0;
    for (; k + 1 < candidates.size(); ++k) {
      const auto j = static_cast<std::size_t>(candidates[k].second);
      const double range = up_[j] - lo_[j];
      const double next = slope - std::fabs(alpha_row_[j]) * range;
      if (next <= 0.0 || art_lo_[j] || art_up_[j]) break;
      slope = next;
      flipped.push_back(candidates[k].second);
    }
    // Harris pass over the remaining breakpoints for a stable pivot.
    double harris = milp::kInfinity;
    for (std::size_t t = k; t < candidates.size(); ++t) {
      const auto j = static_cast<std::size_t>(candidates[t].second);
      const double a = std::fabs(alpha_row_[j]);
      harris = std::min(harris, (std::fabs(d_[j]) + options_.dual_tol) / a);
    }
    int q = candidates[k].second;
    double best_abs = std::fabs(alpha_row_[static_cast<std::size_t>(q)]);
    for (std::size_t t = k; t < candidates.size() && candidates[t].first <= harris; ++t) {
      const double a = std::fabs(alpha_row_[static_cast<std::size_t>(candidates[t].second)]);
      if (a > best_abs) {
        best_abs = a;
        q = candidates[t].second;
      }
    }
    const auto qe = static_cast<std::size_t>(q);
    const double alpha_rq = alpha_row_[qe];
    double step = d_[qe] / (sigma * alpha_rq);
    if (step < 0.0) step = 0.0;

    // Entering column.
    Eigen::VectorXd col = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
    add_column(col, qe, 1.0);
    ftran(col);
    const double alpha_check = col[r];
    if (std::fabs(alpha_check - alpha_rq) > 1e-7 * std::max(1.0, std::fabs(alpha_rq)) ||
        std::fabs(alpha_check) < kPivotTol) {
      for (int jj : touched_) alpha_row_[static_cast<std::size_t>(jj)] = 0.0;
      if (recoveries++ > 50) return LpStatus::kNumericalFailure;
      if (!full_refresh()) return LpStatus::kNumericalFailure;
      continue;
    }

    // Steepest-edge auxiliary vector.
    const double rho_norm2 = rho.squaredNorm();
    Eigen::VectorXd tau = rho;
    ftran(tau);

    // Bound flips.
    if (!flipped.empty()) {
      Eigen::VectorXd delta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
      for (int jj : flipped) {
        const auto j = static_cast<std::size_t>(jj);
        const double old = x_[j];
        status_[j] = status_[j] == VarStatus::kLower ? VarStatus::kUpper : VarStatus::kLower;
        place_nonbasic(j);
        add_column(delta, j, x_[j] - old);
      }
      ftran(delta);
      for (std::size_t i = 0; i < m_; ++i) {
        x_[static_cast<std::size_t>(head_[i])] -= delta[static_cast<Eigen::Index>(i)];
      }
    }

    // Primal step.
    const double theta = (x_[leaving] - bound) / alpha_check;
    for (std::size_t i = 0; i < m_; ++i) {
      const double a = col[static_cast<Eigen::Index>(i)];
      if (a != 0.0) x_[static_cast<std::size_t>(head_[i])] -= theta * a;
    }
    x_[qe] += theta;

    // Dual step.
    for (int jj : touched_) {
      const auto j = static_cast<std::size_t>(jj);
      if (status_[j] != VarStatus::kBasic) d_[j] -= step * sigma * alpha_row_[j];
      alpha_row_[j] = 0.0;
    }
    d_[qe] = 0.0;
    d_[leaving] = -sigma * step;

    // Dual steepest-edge weights.
    const double wr = std::max(rho_norm2, 1e-12);
    for (std::size_t i = 0; i < m_; ++i) {
      if (static_cast<int>(i) == r) continue;
      const double ratio = col[static_cast<Eigen::Index>(i)] / alpha_check;
      if (ratio == 0.0) continue;
      const double w = weight_[i] - 2.0 * ratio * tau[static_cast<Eigen::Index>(i)] +
                       ratio * ratio * wr;
      weight_[i] = std::max(w, 1e-4);
    }
    weight_[static_cast<std::size_t>(r)] = std::max(wr / (alpha_check * alpha_check), 1e-4);

    // Basis change.
    status_[leaving] = to_upper ? VarStatus::kUpper : VarStatus::kLower;
    x_[leaving] = bound;
    pos_[leaving] = -1;
    status_[qe] = VarStatus::kBasic;
    head_[static_cast<std::size_t>(r)] = q;
    pos_[qe] = r;

    Eta eta;
    eta.row = r;
    eta.pivot = alpha_check;
    for (std::size_t i = 0; i < m_; ++i) {
      const double a = col[static_cast<Eigen::Index>(i)];
      if (static_cast<int>(i) != r && a != 0.0) {
        eta.index.push_back(static_cast<int>(i));
        eta.value.push_back(a);
      }
    }
    etas_.push_back(std::move(eta));
    ++iterations_;
  }
}

double DualSimplex::objective() const {
  double v = 0.0;
  for (std::size_t j = 0; j < n_; ++j) v += cost_base_[j] * x_[j];
  return v * cost_scale_ + objective_constant_;
}

std::vector<double> DualSimplex::primal() const {
  std::vector<double> out(n_);
  for (std::size_t j = 0; j < n_; ++j) {
    double v = x_[j] * col_scale_[j];
    // Snap onto the model bounds to absorb scaling round-off.
    if (v < user_lower_[j]) v = user_lower_[j];
    if (v > user_upper_[j]) v = user_upper_[j];
    out[j] = v;
  }
  return out;
}

}  // namespace ecopark::solver::detail
