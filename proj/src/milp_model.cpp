#include <algorithm>
#include <cmath>

#include "ecopark/milp_core.hpp"

namespace ecopark::milp {

namespace {

std::vector<Term> merge_terms(std::vector<Term> terms) {
  std::stable_sort(terms.begin(), terms.end(),
                   [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> out;
  out.reserve(terms.size());
  for (const Term& t : terms) {
    if (!out.empty() && out.back().var == t.var) {
      out.back().coef += t.coef;
    } else {
      out.push_back(t);
    }
  }
  std::erase_if(out, [](const Term& t) { return t.coef == 0.0; });
  return out;
}

}  // namespace

std::size_t MilpModel::check(VarId v) const {
  if (!v.valid() || static_cast<std::size_t>(v.index) >= variables_.size()) {
    throw ModelError("reference to unknown variable id " + std::to_string(v.index));
  }
  return static_cast<std::size_t>(v.index);
}

VarId MilpModel::add_variable(std::string name, VarKind kind, double lower, double upper,
                              int branch_priority) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw ModelError("variable '" + name + "': lower bound exceeds upper bound");
  }
  if (kind == VarKind::kBinary && (lower < 0.0 || upper > 1.0)) {
    throw ModelError("binary variable '" + name + "': bounds must lie within [0,1]");
  }
  if (by_name_.contains(name)) throw ModelError("duplicate variable name '" + name + "'");
  VarId id{static_cast<std::int32_t>(variables_.size())};
  by_name_.emplace(name, id);
  variables_.push_back(Variable{id, std::move(name), kind, lower, upper, branch_priority});
  return id;
}

std::size_t MilpModel::add_constraint(std::vector<Term> terms, Sense sense, double rhs,
                                      std::string tag, std::string name) {
  for (const Term& t : terms) {
    check(t.var);
    if (!std::isfinite(t.coef)) throw ModelError("non-finite coefficient in '" + tag + "'");
  }
  if (!std::isfinite(rhs)) throw ModelError("non-finite right-hand side in '" + tag + "'");
  const std::size_t index = constraints_.size();
  if (name.empty()) name = tag + "#" + std::to_string(index);
  constraints_.push_back(LinearConstraint{std::move(terms), sense, rhs, std::move(tag),
                                          std::move(name)});
  return index;
}

void MilpModel::add_objective_term(VarId v, double coef) {
  check(v);
  if (!std::isfinite(coef)) throw ModelError("non-finite objective coefficient");
  if (coef != 0.0) objective_.terms.push_back(Term{v, coef});
}

void MilpModel::set_bounds(VarId v, double lower, double upper) {
  Variable& var = variables_.at(check(v));
  if (lower > upper) throw ModelError("variable '" + var.name + "': empty bound interval");
  if (var.kind == VarKind::kBinary && (lower < 0.0 || upper > 1.0)) {
    throw ModelError("binary variable '" + var.name + "': bounds must lie within [0,1]");
  }
  var.lower = lower;
  var.upper = upper;
}

std::size_t MilpModel::num_binaries() const {
  return static_cast<std::size_t>(std::count_if(
      variables_.begin(), variables_.end(),
      [](const Variable& v) { return v.kind == VarKind::kBinary; }));
}

std::optional<VarId> MilpModel::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

void MilpModel::canonicalize() {
  for (auto& c : constraints_) c.terms = merge_terms(std::move(c.terms));
  objective_.terms = merge_terms(std::move(objective_.terms));
}

double MilpModel::objective_value(std::span<const double> x) const {
  double v = objective_.constant;
  for (const Term& t : objective_.terms) v += t.coef * x[static_cast<std::size_t>(t.var.index)];
  return v;
}

double MilpModel::activity(std::size_t row, std::span<const double> x) const {
  double v = 0.0;
  for (const Term& t : constraints_.at(row).terms) {
    v += t.coef * x[static_cast<std::size_t>(t.var.index)];
  }
  return v;
}

std::vector<RowViolation> MilpModel::violations(std::span<const double> x, double tol) const {
  if (x.size() != variables_.size()) {
    throw ModelError("assignment size does not match the variable count");
  }
  std::vector<RowViolation> out;
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    const Variable& v = variables_[i];
    const double lo_excess = v.lower - x[i];
    const double up_excess = x[i] - v.upper;
    if (lo_excess > tol * std::max(1.0, std::fabs(v.lower))) {
      out.push_back({i, v.name, "lower_bound", lo_excess});
    } else if (up_excess > tol * std::max(1.0, std::fabs(v.upper))) {
      out.push_back({i, v.name, "upper_bound", up_excess});
    }
    if (v.kind == VarKind::kBinary && std::fabs(x[i] - std::round(x[i])) > tol) {
      out.push_back({i, v.name, "integrality", std::fabs(x[i] - std::round(x[i]))});
    }
  }
  for (std::size_t r = 0; r < constraints_.size(); ++r) {
    const LinearConstraint& c = constraints_[r];
    double act = 0.0;
    double scale = std::max(1.0, std::fabs(c.rhs));
    for (const Term& t : c.terms) {
      const double term = t.coef * x[static_cast<std::size_t>(t.var.index)];
      act += term;
      scale = std::max(scale, std::fabs(term));
    }
    double excess = 0.0;
    switch (c.sense) {
      case Sense::kLessEqual: excess = act - c.rhs; break;
      case Sense::kGreaterEqual: excess = c.rhs - act; break;
      case Sense::kEqual: excess = std::fabs(act - c.rhs); break;
    }
    if (excess > tol * scale) out.push_back({r, c.name, c.tag, excess});
  }
  return out;
}

VarId add_product_bin_cont(MilpModel& model, VarId b, VarId f, double f_upper, std::string name) {
  const Variable& fv = model.variable(f);
  if (model.variable(b).kind != VarKind::kBinary) {
    throw ModelError("product '" + name + "': first factor must be binary");
  }
  if (!std::isfinite(f_upper) || f_upper < 0.0 || fv.lower != 0.0 || fv.upper > f_upper) {
    throw ModelError("product '" + name + "': continuous factor needs bounds within [0, " +
                     format_number(f_upper) + "]");
  }
  const VarId w = model.add_continuous(std::move(name), 0.0, f_upper);
  model.add_constraint({{w, 1.0}, {b, -f_upper}}, Sense::kLessEqual, 0.0, "prod_bc");
  model.add_constraint({{w, 1.0}, {f, -1.0}}, Sense::kLessEqual, 0.0, "prod_bc");
  model.add_constraint({{w, 1.0}, {f, -1.0}, {b, -f_upper}}, Sense::kGreaterEqual, -f_upper,
                       "prod_bc");
  return w;
}

VarId add_product_bin_bin(MilpModel& model, VarId b1, VarId b2, std::string name) {
  const VarId w = model.add_binary(std::move(name));
  model.add_constraint({{w, 1.0}, {b1, -1.0}}, Sense::kLessEqual, 0.0, "prod_bb");
  model.add_constraint({{w, 1.0}, {b2, -1.0}}, Sense::kLessEqual, 0.0, "prod_bb");
  model.add_constraint({{w, 1.0}, {b1, -1.0}, {b2, -1.0}}, Sense::kGreaterEqual, -1.0, "prod_bb");
  return w;
}

VarId add_product_bin_complement(MilpModel& model, VarId b, VarId c, std::string name) {
  const VarId w = model.add_binary(std::move(name));
  model.add_constraint({{w, 1.0}, {b, -1.0}}, Sense::kLessEqual, 0.0, "prod_bnc");
  model.add_constraint({{w, 1.0}, {c, 1.0}}, Sense::kLessEqual, 1.0, "prod_bnc");
  model.add_constraint({{w, 1.0}, {b, -1.0}, {c, 1.0}}, Sense::kGreaterEqual, 0.0, "prod_bnc");
  return w;
}

void add_indicator_link(MilpModel& model, VarId y, std::span<const VarId> xs, LinkForm form,
                        std::string_view tag) {
  if (xs.empty()) throw ModelError("indicator link needs at least one binary");
  std::vector<Term> sum;
  sum.reserve(xs.size() + 1);
  for (VarId x : xs) sum.push_back({x, 1.0});
  sum.push_back({y, -1.0});
  model.add_constraint(sum, Sense::kGreaterEqual, 0.0, std::string(tag));
  if (form == LinkForm::kAggregated) {
    sum.back().coef = -static_cast<double>(xs.size());
    model.add_constraint(std::move(sum), Sense::kLessEqual, 0.0, std::string(tag));
  } else {
    for (VarId x : xs) {
      model.add_constraint({{x, 1.0}, {y, -1.0}}, Sense::kLessEqual, 0.0, std::string(tag));
    }
  }
}

}  // namespace ecopark::milp
