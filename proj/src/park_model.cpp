#include "ecopark/park_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace ecopark::park {

namespace {

constexpr double kClassTolerance = 1e-9;

template <typename Range>
std::size_t find_by_id(const Range& items, std::string_view id, const char* what) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].id == id) return i;
  }
  throw ScenarioError(std::string("unknown ") + what + " '" + std::string(id) + "'");
}

std::size_t find_name(const std::vector<std::string>& names, std::string_view id,
                      const char* what) {
  auto it = std::find(names.begin(), names.end(), id);
  if (it == names.end()) {
    throw ScenarioError(std::string("unknown ") + what + " '" + std::string(id) + "'");
  }
  return static_cast<std::size_t>(it - names.begin());
}

template <typename Map>
double lookup_or_zero(const Map& map, const typename Map::key_type& key) {
  auto it = map.find(key);
  return it == map.end() ? 0.0 : it->second;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::size_t ParkTopology::index_of(std::string_view cell_id) const {
  return find_by_id(cells, cell_id, "cell");
}

bool ParkTopology::contains(std::string_view cell_id) const {
  return std::any_of(cells.begin(), cells.end(),
                     [&](const Cell& c) { return c.id == cell_id; });
}

double WasteStream::concentration(const std::string& component) const {
  return lookup_or_zero(composition, component);
}

double Technology::removal(const std::string& component) const {
  return lookup_or_zero(removal_eff, component);
}

double Technology::recovery(const std::string& resource, const std::string& component) const {
  return lookup_or_zero(recovery_map, std::make_pair(resource, component));
}

double PipeOption::max_flow() const {
  const double radius = diameter / 2.0;
  return design_velocity * std::numbers::pi * radius * radius * capacity_factor * kSecondsPerDay;
}

double Economics::penalty(const std::string& component) const {
  return lookup_or_zero(discharge_penalty, component);
}

double Economics::price(const std::string& resource) const {
  return lookup_or_zero(resource_price, resource);
}

double Scenario::generation(std::size_t stream, std::size_t component, std::size_t t) const {
  const auto& s = streams.at(stream);
  return s.flow(t) * s.concentration(components.at(component));
}

std::size_t Scenario::stream_index(std::string_view id) const {
  return find_by_id(streams, id, "stream");
}
std::size_t Scenario::technology_index(std::string_view id) const {
  return find_by_id(technologies, id, "technology");
}
std::size_t Scenario::pipe_index(std::string_view id) const {
  return find_by_id(pipes, id, "pipe");
}
std::size_t Scenario::component_index(std::string_view id) const {
  return find_name(components, id, "component");
}
std::size_t Scenario::resource_index(std::string_view id) const {
  return find_name(resources, id, "resource");
}

double cell_distance(const ParkTopology& t, std::size_t from, std::size_t to) {
  const Cell& a = t.cells.at(from);
  const Cell& b = t.cells.at(to);
  return std::hypot(a.east - b.east, a.north - b.north);
}

double cell_distance(const ParkTopology& t, std::string_view from, std::string_view to) {
  return cell_distance(t, t.index_of(from), t.index_of(to));
}

std::optional<ElevationClass> try_elevation_class(const ParkTopology& t, std::size_t from,
                                                  std::size_t to) {
  const double delta = std::fabs(t.cells.at(from).elevation - t.cells.at(to).elevation);
  for (std::size_t k = 0; k < t.elevation_classes.size(); ++k) {
    if (t.elevation_classes[k] + kClassTolerance >= delta) {
      return ElevationClass{k, t.elevation_classes[k]};
    }
  }
  return std::nullopt;
}

ElevationClass elevation_class(const ParkTopology& t, std::size_t from, std::size_t to) {
  auto cls = try_elevation_class(t, from, to);
  if (!cls) {
    const double delta = std::fabs(t.cells.at(from).elevation - t.cells.at(to).elevation);
    throw ScenarioError("elevation change " + fmt_double(delta) + " m between '" +
                        t.cells[from].id + "' and '" + t.cells[to].id +
                        "' exceeds the deepest trench class");
  }
  return *cls;
}

ElevationClass elevation_class(const ParkTopology& t, std::string_view from,
                               std::string_view to) {
  return elevation_class(t, t.index_of(from), t.index_of(to));
}

std::optional<double> pipe_cost(const Scenario& s, std::size_t from, std::size_t to,
                                std::size_t pipe) {
  if (from == to) return 0.0;
  auto cls = try_elevation_class(s.topology, from, to);
  if (!cls) return std::nullopt;
  const PipeOption& p = s.pipes.at(pipe);
  const double per_100m =
      p.install_cost_per_100m.at(cls->index) + p.pump_cost_per_100m.at(cls->index);
  return per_100m * cell_distance(s.topology, from, to) / 100.0;
}

ValidationReport validate_scenario(const Scenario& s) {
  ValidationReport report;
  auto error = [&](std::string msg) { report.errors.push_back(std::move(msg)); };
  auto warn = [&](std::string msg) { report.warnings.push_back(std::move(msg)); };

  const auto& topo = s.topology;
  if (topo.cells.empty()) error("topology: at least one cell is required");
  std::set<std::string> ids;
  for (const auto& c : topo.cells) {
    if (!ids.insert(c.id).second) error("topology: duplicate cell id '" + c.id + "'");
    if (!std::isfinite(c.east) || !std::isfinite(c.north) || !std::isfinite(c.elevation)) {
      error("topology: cell '" + c.id + "' has non-finite coordinates");
    }
  }
  if (topo.elevation_classes.empty()) error("topology: no elevation classes");
  for (std::size_t k = 0; k < topo.elevation_classes.size(); ++k) {
    if (topo.elevation_classes[k] < 0.0) error("topology: negative elevation class");
    if (k > 0 && topo.elevation_classes[k] <= topo.elevation_classes[k - 1]) {
      error("topology: elevation classes must be strictly increasing");
    }
  }

  if (s.time_steps < 1) error("horizon: time_steps must be at least 1");
  if (!(s.step_duration > 0.0)) error("horizon: step duration must be positive");

  std::set<std::string> stream_ids;
  for (const auto& st : s.streams) {
    if (!stream_ids.insert(st.id).second) error("streams: duplicate id '" + st.id + "'");
    if (!topo.contains(st.source_cell)) {
      error("stream '" + st.id + "': source cell '" + st.source_cell + "' not in topology");
    }
    if (st.flow_profile.size() != s.time_steps) {
      error("stream '" + st.id + "': flow profile length does not match time_steps");
    }
    for (double f : st.flow_profile) {
      if (!(f >= 0.0) || !std::isfinite(f)) error("stream '" + st.id + "': negative flowrate");
    }
    for (const auto& [p, c] : st.composition) {
      if (!(c >= 0.0)) error("stream '" + st.id + "': negative concentration of " + p);
    }
  }

  std::set<std::string> tech_ids;
  for (const auto& m : s.technologies) {
    if (!tech_ids.insert(m.id).second) error("technologies: duplicate id '" + m.id + "'");
    if (!m.is_connector() && !(m.capacity && *m.capacity > 0.0)) {
      error("technology '" + m.id + "': plant capacity must be positive");
    }
    if (m.capacity && !(*m.capacity > 0.0)) {
      error("technology '" + m.id + "': capacity must be positive when given");
    }
    for (const auto& [p, y] : m.removal_eff) {
      if (!(y >= 0.0 && y <= 1.0)) {
        error("technology '" + m.id + "': removal of " + p + " outside [0,1]");
      }
      if (m.is_connector() && y != 0.0) {
        error("technology '" + m.id + "': connectors cannot remove " + p);
      }
    }
    for (const auto& [key, z] : m.recovery_map) {
      if (!(z >= 0.0)) error("technology '" + m.id + "': negative recovery yield");
      if (m.is_connector() && z != 0.0) {
        error("technology '" + m.id + "': connectors cannot recover " + key.first);
      }
    }
    if (m.capex < 0.0 || m.opex < 0.0) error("technology '" + m.id + "': negative cost");
  }

  if (s.pipes.empty()) error("pipes: at least one pipe option is required");
  std::set<std::string> pipe_ids;
  for (const auto& p : s.pipes) {
    if (!pipe_ids.insert(p.id).second) error("pipes: duplicate id '" + p.id + "'");
    if (!(p.diameter > 0.0)) error("pipe '" + p.id + "': diameter must be positive");
    if (!(p.design_velocity > 0.0)) error("pipe '" + p.id + "': velocity must be positive");
    if (!(p.capacity_factor > 0.0 && p.capacity_factor <= 1.0)) {
      error("pipe '" + p.id + "': capacity_factor must lie in (0,1]");
    }
    if (p.install_cost_per_100m.size() != topo.elevation_classes.size() ||
        p.pump_cost_per_100m.size() != topo.elevation_classes.size()) {
      error("pipe '" + p.id + "': cost schedule must cover every elevation class");
    }
    for (double c : p.install_cost_per_100m) {
      if (c < 0.0) error("pipe '" + p.id + "': negative installation cost");
    }
    for (double c : p.pump_cost_per_100m) {
      if (c < 0.0) error("pipe '" + p.id + "': negative pumping cost");
    }
  }

  const auto& econ = s.economics;
  for (const auto& [p, v] : econ.discharge_penalty) {
    if (v < 0.0) error("economics: negative penalty for " + p);
  }
  for (const auto& [r, v] : econ.resource_price) {
    if (v < 0.0) error("economics: negative price for " + r);
  }
  for (const auto& [p, v] : econ.discharge_limit) {
    if (v < 0.0) error("economics: negative discharge limit for " + p);
  }
  if (!(econ.price_factor >= 0.0 && econ.price_factor <= 1.0)) {
    error("economics: price_factor must lie in [0,1]");
  }

  if (!report.ok()) return report;

  // Centralisation check: can every stream share one pipe out of a cell?
  double best_pipe = 0.0;
  for (const auto& p : s.pipes) best_pipe = std::max(best_pipe, p.max_flow());
  for (std::size_t t = 0; t < s.time_steps; ++t) {
    double total = 0.0;
    for (const auto& st : s.streams) total += st.flow(t);
    if (total > best_pipe) {
      warn("total generated flow " + fmt_double(total) + " m3/d at step " + std::to_string(t) +
           " exceeds the largest pipe capacity " + fmt_double(best_pipe) +
           " m3/d; full centralisation is infeasible");
    }
  }

  for (const auto& [p, limit] : econ.discharge_limit) {
    double best_y = 0.0;
    for (const auto& m : s.technologies) best_y = std::max(best_y, m.removal(p));
    for (std::size_t t = 0; t < s.time_steps; ++t) {
      double floor = 0.0;
      for (const auto& st : s.streams) floor += st.flow(t) * st.concentration(p) * (1.0 - best_y);
      if (floor > limit) {
        warn("discharge limit for " + p + " (" + fmt_double(limit) +
             " kg/d) is below the best achievable discharge " + fmt_double(floor) + " kg/d");
      }
    }
  }

  report.notes = s.notes;
  return report;
}

}  // namespace ecopark::park
