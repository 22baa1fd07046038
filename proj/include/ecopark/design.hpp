#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ecopark/park_model.hpp"

namespace ecopark::formulation {

class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Placement {
  std::string stream;
  std::string cell;
  std::string technology;

  auto operator<=>(const Placement&) const = default;
};

struct FlowEntry {
  std::string stream;
  std::string from;
  std::string to;
  std::size_t step = 0;
  double value = 0.0;  // m3/day

  bool operator==(const FlowEntry&) const = default;
};

/// A concrete design: which technology treats which stream where, the pipe
/// type used park-wide and the daily flows on every arc (self-arcs included).
struct Design {
  std::vector<Placement> placements;
  std::vector<std::string> pipe_types;  // exactly one in a complete design
  std::vector<FlowEntry> flows;
  // Transport pathways (from, to). Derived from the placements when absent.
  std::optional<std::vector<std::pair<std::string, std::string>>> pathways;

  bool empty() const { return placements.empty() && flows.empty(); }
  bool operator==(const Design&) const = default;
};

/// Sorted placements, flows and pathways; zero flows dropped.
Design normalized(Design d);

std::string design_to_json(const Design& d, const std::string& scenario_name = {});
Design design_from_json(std::string_view text);
Design load_design(const std::string& path);

}  // namespace ecopark::formulation
