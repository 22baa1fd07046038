#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ecopark/design.hpp"
#include "ecopark/park_model.hpp"

namespace ecopark::evaluator {

using formulation::Design;

/// Raised for designs that reference unknown streams, cells, technologies or
/// pipe types, and for brute-force requests that are too large.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultFeasibilityTol = 1e-7;

struct Violation {
  std::string family;    // e.g. "capacity", "pipe_limit", "single_pipe_type"
  std::string location;  // e.g. "cell x11, technology B, step 0"
  double magnitude = 0.0;
  std::string units;  // m3/d, kg/d, count

  bool operator==(const Violation&) const = default;
};

std::string describe(const Violation& v);

using StreamComponent = std::pair<std::string, std::string>;

struct DesignReport {
  double cost_transport = 0.0;
  double cost_capex = 0.0;
  double cost_opex = 0.0;
  double cost_penalty = 0.0;
  double revenue = 0.0;
  double total = 0.0;

  // Horizon totals: kg for components, resource units for resources.
  std::map<StreamComponent, double> generated;
  std::map<StreamComponent, double> removed;
  std::map<StreamComponent, double> discharged;
  std::map<std::string, double> recovered;

  // Per time step park totals, per day.
  std::vector<std::map<std::string, double>> discharged_per_day;
  std::vector<std::map<std::string, double>> recovered_per_day;

  std::vector<std::pair<std::string, std::string>> pathways;
  std::vector<Violation> violations;

  bool feasible() const { return violations.empty(); }
  double total_discharged(const std::string& component) const;
  double total_removed(const std::string& component) const;
};

/// Direct arithmetic evaluation of a fixed design; no optimisation. Tolerances
/// are relative to the natural scale of each checked quantity.
DesignReport evaluate_design(const park::Scenario& s, const Design& d,
                             double feasibility_tol = kDefaultFeasibilityTol);

std::vector<Violation> check_feasibility(const park::Scenario& s, const Design& d,
                                         double feasibility_tol = kDefaultFeasibilityTol);

/// Trench cost of a pipe between two cells computed from the catalog
/// schedule, or nothing when the elevation change is deeper than every class.
std::optional<double> route_cost(const park::Scenario& s, const std::string& from,
                                 const std::string& to, const std::string& pipe);

/// Pathways implied by the placements: source to connector, connector to
/// plant, and source straight to plant for streams that use no connector.
std::vector<std::pair<std::string, std::string>> derived_pathways(const park::Scenario& s,
                                                                  const Design& d);

struct BruteForceOptions {
  // Refuse instances whose evaluation count estimate exceeds this.
  double max_evaluations = 1e7;
  // When set, flows are enumerated on a grid of this many equal parts per
  // stream instead of solved by LP; patterns with connectors are skipped.
  std::optional<std::size_t> flow_grid;
};

struct BruteForceResult {
  Design design;
  double objective = 0.0;
  std::size_t patterns = 0;   // binary patterns enumerated
  std::size_t evaluated = 0;  // LPs solved or grid points evaluated
  bool feasible = false;
};

/// Exhaustive minimum over pipe type and per-(stream, cell) technology
/// choices. Throws EvaluationError when the instance is too large.
BruteForceResult brute_force_optimum(const park::Scenario& s, const BruteForceOptions& opts = {});

/// Number of evaluations brute_force_optimum would perform (before pruning).
double brute_force_evaluations(const park::Scenario& s, const BruteForceOptions& opts = {});

}  // namespace ecopark::evaluator
