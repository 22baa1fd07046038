#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ecopark::park {

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr double kSecondsPerDay = 86400.0;

/// Raised for malformed scenario files and for references to entities that do
/// not exist. The message carries the offending field path (and line number
/// for JSON syntax errors).
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Cell {
  std::string id;
  double east = 0.0;   // centroid, m
  double north = 0.0;  // centroid, m
  double elevation = 0.0;

  bool operator==(const Cell&) const = default;
};

struct ElevationClass {
  std::size_t index = 0;
  double depth = 0.0;
};

struct ParkTopology {
  std::vector<Cell> cells;
  // Trench depth buckets in metres, strictly increasing.
  std::vector<double> elevation_classes;

  std::size_t index_of(std::string_view cell_id) const;
  bool contains(std::string_view cell_id) const;

  bool operator==(const ParkTopology&) const = default;
};

struct WasteStream {
  std::string id;
  std::string source_cell;
  std::vector<double> flow_profile;          // m3/day per time step
  std::map<std::string, double> composition;  // kg/m3

  double flow(std::size_t t) const { return flow_profile.at(t); }
  double concentration(const std::string& component) const;

  bool operator==(const WasteStream&) const = default;
};

enum class TechnologyKind { kPlant, kConnector };

struct Technology {
  std::string id;
  TechnologyKind kind = TechnologyKind::kPlant;
  // Unbounded when empty (the default for connectors).
  std::optional<double> capacity;  // m3/day
  std::map<std::string, double> removal_eff;
  // (resource, component) -> resource units per kg of component removed.
  std::map<std::pair<std::string, std::string>, double> recovery_map;
  double capex = 0.0;  // currency per installation
  double opex = 0.0;   // currency per m3 treated

  bool is_connector() const { return kind == TechnologyKind::kConnector; }
  double removal(const std::string& component) const;
  double recovery(const std::string& resource, const std::string& component) const;

  bool operator==(const Technology&) const = default;
};

struct PipeOption {
  std::string id;
  double diameter = 0.0;         // m
  double design_velocity = 0.0;  // m/s
  double capacity_factor = 1.0;  // usable fraction of full-bore flow
  // Indexed like ParkTopology::elevation_classes; currency per 100 m.
  std::vector<double> install_cost_per_100m;
  std::vector<double> pump_cost_per_100m;

  /// Maximum flow in m3/day: velocity x bore area x capacity factor.
  double max_flow() const;

  bool operator==(const PipeOption&) const = default;
};

struct Economics {
  std::map<std::string, double> discharge_penalty;  // currency per kg
  std::map<std::string, double> resource_price;     // currency per unit
  double price_factor = 1.0;
  std::map<std::string, double> discharge_limit;  // kg/day, park total

  double penalty(const std::string& component) const;
  double price(const std::string& resource) const;

  bool operator==(const Economics&) const = default;
};

struct Scenario {
  std::string name;
  std::string currency = "GBP";
  std::vector<std::string> components;
  std::vector<std::string> resources;
  ParkTopology topology;
  std::vector<WasteStream> streams;
  std::vector<Technology> technologies;
  std::vector<PipeOption> pipes;
  Economics economics;
  std::size_t time_steps = 1;
  double step_duration = 3650.0;  // days
  bool transport_enabled = true;
  // Unit conversions and other load-time remarks.
  std::vector<std::string> notes;

  double generation(std::size_t stream, std::size_t component, std::size_t t) const;
  double horizon_days() const { return static_cast<double>(time_steps) * step_duration; }
  std::size_t stream_index(std::string_view id) const;
  std::size_t technology_index(std::string_view id) const;
  std::size_t pipe_index(std::string_view id) const;
  std::size_t component_index(std::string_view id) const;
  std::size_t resource_index(std::string_view id) const;

  bool operator==(const Scenario&) const = default;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;

  bool ok() const { return errors.empty(); }
};

/// Loads a scenario file, optionally applying one of its named variant
/// overlays. Concentrations are normalised to kg/m3 and concentration-style
/// discharge limits to kg/day.
Scenario load_scenario(const std::string& path, std::string_view variant = {});
Scenario parse_scenario(std::string_view text, std::string_view variant = {});
std::vector<std::string> list_variants(const std::string& path);

std::string save_scenario(const Scenario& s);

ValidationReport validate_scenario(const Scenario& s);

double cell_distance(const ParkTopology& t, std::string_view from, std::string_view to);
double cell_distance(const ParkTopology& t, std::size_t from, std::size_t to);

/// Smallest trench class whose depth covers the elevation change between two
/// cells. Throws when the change exceeds the deepest class.
ElevationClass elevation_class(const ParkTopology& t, std::string_view from, std::string_view to);
ElevationClass elevation_class(const ParkTopology& t, std::size_t from, std::size_t to);
std::optional<ElevationClass> try_elevation_class(const ParkTopology& t, std::size_t from,
                                                  std::size_t to);

/// Installed-plus-pumping cost of a pipe of the given type between two cells,
/// or nothing when the elevation change has no costed trench class.
std::optional<double> pipe_cost(const Scenario& s, std::size_t from, std::size_t to,
                                std::size_t pipe);

}  // namespace ecopark::park
