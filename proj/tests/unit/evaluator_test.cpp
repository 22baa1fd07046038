#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "ecopark/evaluator.hpp"
#include "ecopark/formulation.hpp"
#include "support/fixtures.hpp"

using namespace ecopark;
using evaluator::Design;

namespace {

bool has_violation(const evaluator::DesignReport& r, const std::string& family) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const evaluator::Violation& v) { return v.family == family; });
}

park::Scenario single_plant_cell(double flow, double cap) {
  park::Scenario s = testing::base_scenario();
  s.topology = testing::grid(1, 1, {0.0});
  s.streams = {testing::stream("W", "x00", flow, 0.05, 0.01)};
  s.technologies = {testing::plant("P", 1e5, 0.01, cap, 0.5, 0.5)};
  s.pipes = {testing::hdpe(0)};
  return s;
}

Design local_design(double flow) {
  Design d;
  d.placements = {{"W", "x00", "P"}};
  d.flows = {{"W", "x00", "x00", 0, flow}};
  return d;
}

}  // namespace

TEST_CASE("methane recovered by the centralised design") {
  const auto s = park::load_scenario(testing::scenario_file(), "recovery+penalty");
  const auto rep = evaluator::evaluate_design(s, formulation::load_design(testing::design_file("centralised_b.json")));
  CHECK(rep.feasible());
  // 76 250 kg/d COD, 70% removed, 0.596 m3 CH4 per kg removed, 3 650 days.
  const double oracle = 76250.0 * 0.70 * 0.596 * 3650.0;
  CHECK(rep.recovered.at("CH4") == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(rep.recovered.at("CH4") == doctest::Approx(116.1e6).epsilon(0.005));
}

TEST_CASE("empty design discharges all nutrients") {
  const auto s = park::load_scenario(testing::scenario_file());
  const auto rep = evaluator::evaluate_design(s, formulation::load_design(testing::design_file("empty.json")));
  CHECK(rep.feasible());
  CHECK(rep.total_discharged("N") / 1000.0 == doctest::Approx(13973.0).epsilon(1e-4));
  CHECK(rep.total_discharged("P") / 1000.0 == doctest::Approx(5314.0).epsilon(1e-4));
  CHECK(rep.cost_capex == 0.0);
  CHECK(rep.cost_transport == 0.0);
  CHECK(rep.total == doctest::Approx(0.8 * (3828.2 + 1455.96) * 3650.0));
}

TEST_CASE("capacity overrun is reported with its size") {
  const auto s = single_plant_cell(40001.0, 40000.0);
  const auto rep = evaluator::evaluate_design(s, local_design(40001.0));
  REQUIRE(has_violation(rep, "capacity"));
  for (const auto& v : rep.violations)
    if (v.family == "capacity") {
      CHECK(v.magnitude == doctest::Approx(1.0));
      CHECK(v.units == "m3/d");
    }
  CHECK(evaluator::evaluate_design(single_plant_cell(40000.0, 40000.0), local_design(40000.0)).feasible());
}

TEST_CASE("more than one pipe type is a violation") {
  const auto s = park::load_scenario(testing::scenario_file());
  auto d = formulation::load_design(testing::design_file("centralised_b.json"));
  d.pipe_types = {"HDPE300", "HDPE600"};
  CHECK(has_violation(evaluator::evaluate_design(s, d), "single_pipe_type"));
}

TEST_CASE("hard limits flag an untreated park") {
  const auto s = park::load_scenario(testing::scenario_file(), "hard-limits");
  const auto rep = evaluator::evaluate_design(s, formulation::load_design(testing::design_file("empty.json")));
  CHECK(has_violation(rep, "discharge_limit"));
  CHECK_FALSE(rep.feasible());
}

TEST_CASE("unknown references are errors, not violations") {
  const auto s = park::load_scenario(testing::scenario_file());
  Design d;
  d.placements = {{"Z", "x00", "B"}};
  CHECK_THROWS_AS(evaluator::evaluate_design(s, d), evaluator::EvaluationError);
  d.placements = {{"A", "x00", "nope"}};
  CHECK_THROWS_AS(evaluator::evaluate_design(s, d), evaluator::EvaluationError);
}

TEST_CASE("mass is conserved per stream and component") {
  for (const char* variant : {"penalty-only", "recovery+penalty"}) {
    const auto s = park::load_scenario(testing::scenario_file(), variant);
    const auto rep = evaluator::evaluate_design(s, formulation::load_design(testing::design_file("centralised_b.json")));
    for (const auto& [key, gen] : rep.generated) {
      CHECK(rep.removed.at(key) + rep.discharged.at(key) == doctest::Approx(gen).epsilon(1e-12));
    }
    const double parts = rep.cost_transport + rep.cost_capex + rep.cost_opex + rep.cost_penalty - rep.revenue;
    CHECK(rep.total == doctest::Approx(parts).epsilon(1e-12));
  }
}

TEST_CASE("route cost agrees with the objective coefficient") {
  const auto s = park::load_scenario(testing::scenario_file());
  const auto& cells = s.topology.cells;
  for (std::size_t a = 0; a < cells.size(); ++a)
    for (std::size_t b = 0; b < cells.size(); ++b)
      for (std::size_t l = 0; l < s.pipes.size(); ++l) {
        if (a == b) continue;
        const auto r = evaluator::route_cost(s, cells[a].id, cells[b].id, s.pipes[l].id);
        REQUIRE(r.has_value());
        CHECK(*r == doctest::Approx(formulation::pipe_cost_coefficient(s, a, b, l)).epsilon(1e-12));
      }
  CHECK_THROWS_AS(evaluator::route_cost(s, "x00", "x01", "HDPE999"), evaluator::EvaluationError);
}

TEST_CASE("brute force on hand-checkable instances") {
  SUBCASE("one cell: plant iff it pays for itself") {
    // Penalty avoided per day: 0.8 * 0.5 * 1000 * 0.06 = 24, opex 10 per day,
    // so the plant saves 14 * 3650 = 51 100 against its capital cost.
    for (double capex : {40000.0, 60000.0}) {
      auto s = single_plant_cell(1000.0, 5000.0);
      s.technologies[0].capex = capex;
      const auto bf = evaluator::brute_force_optimum(s);
      REQUIRE(bf.feasible);
      CHECK(bf.design.placements.size() == (capex < 51100.0 ? 1u : 0u));
      const double penalty = 24.0 * 2.0 * 3650.0;
      CHECK(bf.objective == doctest::Approx(capex < 51100.0 ? penalty - 51100.0 + capex : penalty));
    }
  }
  SUBCASE("two cells: treating at the source beats piping") {
    park::Scenario s = testing::base_scenario();
    s.topology = testing::grid(2, 1, {0.0, 0.0});
    s.streams = {testing::stream("W", "x00", 1000.0, 0.05, 0.01)};
    s.technologies = {testing::plant("P", 1000.0, 0.01, 5000.0, 1.0, 1.0)};
    s.pipes = {testing::hdpe(0)};
    const auto bf = evaluator::brute_force_optimum(s);
    REQUIRE(bf.design.placements.size() == 1);
    CHECK(bf.design.placements[0].cell == "x00");
    CHECK(evaluator::derived_pathways(s, bf.design).empty());
  }
  SUBCASE("too large instances are refused") {
    const auto s = park::load_scenario(testing::scenario_file());
    CHECK(evaluator::brute_force_evaluations(s) > 1e7);
    CHECK_THROWS_AS(evaluator::brute_force_optimum(s), evaluator::EvaluationError);
  }
}
