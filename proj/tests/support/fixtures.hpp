#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "ecopark/park_model.hpp"

namespace ecopark::testing {

inline std::string scenario_file() { return std::string(ECOPARK_SCENARIO_DIR) + "/park_east_china.json"; }
inline std::string design_file(const std::string& name) {
  return std::string(ECOPARK_SCENARIO_DIR) + "/designs/" + name;
}

// Trench schedule per diameter 0.3..0.6 m: cost per 100 m by elevation class.
inline const std::vector<std::vector<double>>& trench_schedule() {
  static const std::vector<std::vector<double>> t{
      {275, 3765, 4944, 5478, 29248, 46111, 114498, 116165},
      {465, 4145, 5324, 5857, 29626, 46487, 114873, 116541},
      {809, 4830, 6009, 6541, 30308, 47166, 115550, 117218},
      {1111, 5434, 6612, 7144, 30910, 47764, 116147, 117814},
  };
  return t;
}

inline park::PipeOption hdpe(std::size_t k) {
  park::PipeOption p;
  p.id = "HDPE" + std::to_string(300 + 100 * k);
  p.diameter = 0.3 + 0.1 * static_cast<double>(k);
  p.design_velocity = 2.0;
  p.capacity_factor = 0.8;
  p.install_cost_per_100m = trench_schedule()[k];
  p.pump_cost_per_100m.assign(8, 0.0);
  return p;
}

inline park::Technology plant(const std::string& id, double capex, double opex, double cap, double n_rem,
                              double p_rem) {
  park::Technology t;
  t.id = id;
  t.capex = capex;
  t.opex = opex;
  t.capacity = cap;
  t.removal_eff = {{"COD", 0.7}, {"N", n_rem}, {"P", p_rem}};
  t.recovery_map[{"CH4", "COD"}] = 0.5;
  return t;
}

inline park::Technology connector(const std::string& id = "J") {
  park::Technology t;
  t.id = id;
  t.kind = park::TechnologyKind::kConnector;
  return t;
}

inline park::WasteStream stream(const std::string& id, const std::string& cell, double flow, double n,
                                double p) {
  park::WasteStream w;
  w.id = id;
  w.source_cell = cell;
  w.flow_profile = {flow};
  w.composition = {{"COD", 0.5}, {"N", n}, {"P", p}};
  return w;
}

/// Grid of rows x cols cells 500 m apart with the given elevations (row-major).
inline park::ParkTopology grid(std::size_t rows, std::size_t cols, const std::vector<double>& elevations) {
  park::ParkTopology t;
  t.elevation_classes = {0, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      park::Cell cell;
      cell.id = "x" + std::to_string(r) + std::to_string(c);
      cell.east = 250.0 + 500.0 * static_cast<double>(c);
      cell.north = 250.0 + 500.0 * static_cast<double>(r);
      cell.elevation = elevations.at(r * cols + c);
      t.cells.push_back(cell);
    }
  }
  return t;
}

inline park::Scenario base_scenario() {
  park::Scenario s;
  s.name = "tiny";
  s.components = {"COD", "N", "P"};
  s.resources = {"CH4"};
  s.economics.discharge_penalty = {{"N", 0.8}, {"P", 0.8}};
  s.economics.price_factor = 0.5;
  return s;
}

/// Random instance within the oracle's reach: at most a 2x2 grid, two
/// streams, three technologies (possibly one connector) and two pipe types.
inline park::Scenario random_tiny(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };

  park::Scenario s = base_scenario();
  s.name = "tiny-" + std::to_string(seed);
  const std::size_t rows = static_cast<std::size_t>(pick(1, 2));
  const std::size_t cols = rows == 1 ? 2 : static_cast<std::size_t>(pick(1, 2));
  // Steep terrain leaves some direct routes without a costed trench class,
  // so relaying through a middle cell becomes the only way across.
  const bool steep = pick(0, 3) == 0;
  std::vector<double> elev;
  for (std::size_t i = 0; i < rows * cols; ++i) elev.push_back(steep ? 4.0 * pick(0, 2) : 0.5 * pick(0, 6));
  s.topology = grid(rows, cols, elev);
  const int ncells = static_cast<int>(rows * cols);

  const int nstreams = pick(1, 2);
  for (int j = 0; j < nstreams; ++j) {
    const auto& cell = s.topology.cells[static_cast<std::size_t>(pick(0, ncells - 1))].id;
    s.streams.push_back(stream(std::string(1, static_cast<char>('A' + j)), cell, uni(2000, 20000),
                               uni(0.01, 0.1), uni(0.001, 0.02)));
  }

  const bool with_connector = pick(0, 1) == 1;
  const int nplants = with_connector ? pick(1, 2) : pick(1, 3);
  for (int m = 0; m < nplants; ++m) {
    const double cap = pick(0, 2) == 0 ? uni(3000, 15000) : 40000.0;
    s.technologies.push_back(plant(std::string(1, static_cast<char>('P' + m)), uni(2e4, 8e5),
                                   uni(0.002, 0.03), cap, uni(0.2, 1.0), uni(0.2, 1.0)));
  }
  if (with_connector) s.technologies.push_back(connector());

  const int npipes = pick(1, 2);
  const std::size_t first = static_cast<std::size_t>(pick(0, 4 - npipes));
  for (int l = 0; l < npipes; ++l) s.pipes.push_back(hdpe(first + static_cast<std::size_t>(l)));

  switch (pick(0, 3)) {
    case 0:  // penalties only
      break;
    case 1:
      s.economics.resource_price = {{"CH4", uni(0.05, 0.3)}};
      break;
    case 2: {  // loose hard limit on N instead of a penalty
      double gen = 0.0;
      for (const auto& w : s.streams) gen += w.flow(0) * w.composition.at("N");
      s.economics.discharge_penalty.erase("N");
      s.economics.discharge_limit = {{"N", gen * uni(0.3, 0.9)}};
      break;
    }
    default:
      s.transport_enabled = pick(0, 1) == 1;
      break;
  }
  return s;
}

}  // namespace ecopark::testing
