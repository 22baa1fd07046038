#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ecopark/design.hpp"
#include "ecopark/milp_core.hpp"
#include "ecopark/park_model.hpp"

namespace ecopark::formulation {

class FormulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Variable families. Greek names follow the symbols of the model; the rest
// are auxiliaries introduced by the linearisation.
enum class Family {
  kAlpha,         // (j,x,m) technology m treats/relays stream j in cell x
  kUpsilon,       // (j,x)   some treatment plant handles j in x
  kOmega,         // (x,m)   technology m installed in x
  kDelta,         // (l)     pipe type l selected
  kEpsilon,       // (j)     stream j uses a connector somewhere
  kFlow,          // (j,x,x',t) m3/day
  kInflow,        // (j,x,t) total inflow of j into x
  kTreated,       // (j,x,m,t) alpha * inflow
  kKappa,         // (j,x,x') connector in x and plant in x' for j
  kZeta,          // (j,x)   upsilon * (1 - epsilon)
  kPhi,           // (x,x')  generation cell to connector cell
  kPi,            // (x,x')  connector cell to plant cell
  kGamma,         // (x,x')  generation cell straight to plant cell
  kPathway,       // (x,x')  any pathway
  kPipePathway,   // (l,x,x') delta * pathway
  kDischarge,     // (j,p,t) kg/day
  kRecovered,     // (r,t)   resource units/day
};

inline constexpr std::size_t kFamilyCount = 17;

std::string family_name(Family f);

struct SemanticKey {
  Family family = Family::kAlpha;
  std::array<int, 4> index{-1, -1, -1, -1};

  auto operator<=>(const SemanticKey&) const = default;
};

/// Bijection between semantic keys and model variable ids.
class VariableIndex {
 public:
  struct Dims {
    std::size_t streams = 0, cells = 0, techs = 0, pipes = 0, steps = 0, components = 0,
                resources = 0;
  };

  VariableIndex() = default;
  explicit VariableIndex(const Dims& dims);

  const Dims& dims() const { return dims_; }

  void put(const SemanticKey& key, milp::VarId id);
  std::optional<milp::VarId> find(const SemanticKey& key) const;
  milp::VarId at(const SemanticKey& key) const;
  const SemanticKey& key_of(milp::VarId id) const;
  std::size_t size() const { return by_key_.size(); }
  std::size_t count(Family f) const;

  std::optional<milp::VarId> alpha(std::size_t j, std::size_t x, std::size_t m) const;
  std::optional<milp::VarId> upsilon(std::size_t j, std::size_t x) const;
  std::optional<milp::VarId> omega(std::size_t x, std::size_t m) const;
  std::optional<milp::VarId> delta(std::size_t l) const;
  std::optional<milp::VarId> epsilon(std::size_t j) const;
  std::optional<milp::VarId> flow(std::size_t j, std::size_t x, std::size_t x2, std::size_t t) const;
  std::optional<milp::VarId> inflow(std::size_t j, std::size_t x, std::size_t t) const;
  std::optional<milp::VarId> treated(std::size_t j, std::size_t x, std::size_t m, std::size_t t) const;
  std::optional<milp::VarId> pathway(std::size_t x, std::size_t x2) const;
  std::optional<milp::VarId> discharge(std::size_t j, std::size_t p, std::size_t t) const;
  std::optional<milp::VarId> recovered(std::size_t r, std::size_t t) const;

  struct Audit {
    std::map<std::string, std::size_t> registered;  // per family
    std::map<std::string, std::size_t> expected;    // closed form per family
    std::size_t model_variables = 0;
    bool bijective = false;
    bool matches() const { return bijective && registered == expected; }
  };
  /// Checks registry against the model and against closed-form counts.
  Audit audit(const park::Scenario& s, const milp::MilpModel& model) const;

 private:
  Dims dims_;
  std::map<SemanticKey, milp::VarId> by_key_;
  std::vector<SemanticKey> by_id_;
  std::array<std::size_t, kFamilyCount> counts_{};
};

/// Closed-form variable counts per family for a scenario.
std::map<std::string, std::size_t> expected_variable_counts(const park::Scenario& s);

struct BuiltModel {
  milp::MilpModel model;
  VariableIndex index;
};

/// Declares the base decision variables (everything that is not created by a
/// linearisation gadget) with their data-derived bounds.
VariableIndex declare_variables(const park::Scenario& s, milp::MilpModel& model);
void build_treatment_block(const park::Scenario& s, milp::MilpModel& model, VariableIndex& idx);
void build_transport_block(const park::Scenario& s, milp::MilpModel& model, VariableIndex& idx);
void build_objective(const park::Scenario& s, milp::MilpModel& model, VariableIndex& idx);

/// Full model. Throws FormulationError when the scenario fails validation.
BuiltModel build_model(const park::Scenario& s);

/// Pipe cost between two cells for a pipe type (installation plus pumping),
/// as charged by the objective.
double pipe_cost_coefficient(const park::Scenario& s, std::size_t from, std::size_t to,
                             std::size_t pipe);

/// Decodes an integral assignment into a Design and re-checks it with the
/// evaluator. Throws FormulationError on fractional binaries or violations.
Design extract_design(const park::Scenario& s, const VariableIndex& idx,
                      std::span<const double> assignment, double tol = 1e-6);

}  // namespace ecopark::formulation
