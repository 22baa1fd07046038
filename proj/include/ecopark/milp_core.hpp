#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ecopark::milp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VarId {
  std::int32_t index = -1;

  bool valid() const { return index >= 0; }
  auto operator<=>(const VarId&) const = default;
};

enum class VarKind { kBinary, kContinuous };
enum class Sense { kLessEqual, kEqual, kGreaterEqual };

struct Variable {
  VarId id;
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lower = 0.0;
  double upper = kInfinity;
  // Branch-and-bound explores fractional binaries of the highest priority
  // first; binaries implied by others carry priority 0.
  int branch_priority = 0;

  bool operator==(const Variable&) const = default;
};

struct Term {
  VarId var;
  double coef = 0.0;

  bool operator==(const Term&) const = default;
};

struct LinearConstraint {
  std::vector<Term> terms;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
  std::string tag;  // equation family
  std::string name;

  bool operator==(const LinearConstraint&) const = default;
};

struct Objective {
  std::vector<Term> terms;
  double constant = 0.0;

  bool operator==(const Objective&) const = default;
};

struct RowViolation {
  std::size_t row = 0;
  std::string name;
  std::string tag;
  double magnitude = 0.0;
};

/// Minimisation MILP with a name registry. Variables and constraints are
/// append-only; canonicalize() merges duplicate terms and orders them by
/// variable id.
class MilpModel {
 public:
  VarId add_variable(std::string name, VarKind kind, double lower, double upper,
                     int branch_priority = 0);
  VarId add_binary(std::string name, int branch_priority = 0) {
    return add_variable(std::move(name), VarKind::kBinary, 0.0, 1.0, branch_priority);
  }
  VarId add_continuous(std::string name, double lower, double upper) {
    return add_variable(std::move(name), VarKind::kContinuous, lower, upper);
  }

  std::size_t add_constraint(std::vector<Term> terms, Sense sense, double rhs, std::string tag,
                             std::string name = {});

  void add_objective_term(VarId v, double coef);
  void add_objective_constant(double c) { objective_.constant += c; }
  void set_bounds(VarId v, double lower, double upper);

  const Variable& variable(VarId v) const { return variables_.at(check(v)); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<LinearConstraint>& constraints() const { return constraints_; }
  const Objective& objective() const { return objective_; }
  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_constraints() const { return constraints_.size(); }
  std::size_t num_binaries() const;

  std::optional<VarId> find(std::string_view name) const;

  void canonicalize();

  double objective_value(std::span<const double> x) const;
  double activity(std::size_t row, std::span<const double> x) const;
  /// Rows and bounds violated by more than tol (relative to the row scale).
  std::vector<RowViolation> violations(std::span<const double> x, double tol) const;

  bool operator==(const MilpModel& other) const {
    return variables_ == other.variables_ && constraints_ == other.constraints_ &&
           objective_ == other.objective_;
  }

 private:
  std::size_t check(VarId v) const;

  std::vector<Variable> variables_;
  std::vector<LinearConstraint> constraints_;
  Objective objective_;
  std::unordered_map<std::string, VarId> by_name_;
};

/// w = b * f for binary b and continuous f in [0, f_upper].
VarId add_product_bin_cont(MilpModel& model, VarId b, VarId f, double f_upper, std::string name);
/// w = b1 * b2 for binaries.
VarId add_product_bin_bin(MilpModel& model, VarId b1, VarId b2, std::string name);
/// w = b * (1 - c) for binaries.
VarId add_product_bin_complement(MilpModel& model, VarId b, VarId c, std::string name);

enum class LinkForm {
  kAggregated,     // sum(xs) >= y, sum(xs) <= |xs| * y
  kDisaggregated,  // sum(xs) >= y, y >= x_i for every i
};

/// y = OR(xs) over binaries, without strict inequalities.
void add_indicator_link(MilpModel& model, VarId y, std::span<const VarId> xs,
                        LinkForm form = LinkForm::kAggregated, std::string_view tag = "or_link");

// MPS interchange -----------------------------------------------------------

/// Mangled <-> original names. Fixed-format MPS limits names to 8 characters.
struct NameTable {
  std::vector<std::string> column_names;  // mangled, by variable id
  std::vector<std::string> row_names;     // mangled, by constraint index
  std::unordered_map<std::string, std::string> to_original;
  std::unordered_map<std::string, std::string> to_mangled;

  std::string to_tsv(const MilpModel& model) const;
  static NameTable from_tsv(std::string_view text);
};

struct MpsExport {
  std::string mps;
  NameTable names;
};

MpsExport export_model(const MilpModel& model);

/// Parses MPS text (fixed or whitespace separated). When a name table is
/// given, mangled names are translated back to the original ones.
MilpModel read_mps(std::string_view text, const NameTable* names = nullptr);

struct ImportedSolution {
  std::vector<double> values;  // by variable id
  std::size_t missing = 0;
  std::vector<std::string> warnings;
};

/// Reads a two-column "name value" solution. Names may be original or
/// mangled (resolved through the table when given). Missing variables are 0.
ImportedSolution import_solution(const MilpModel& model, std::string_view text,
                                 const NameTable* names = nullptr);

std::string format_solution(const MilpModel& model, std::span<const double> values);

std::string format_number(double v);

}  // namespace ecopark::milp
