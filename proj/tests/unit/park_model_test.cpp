#include "doctest.h"

#include <cmath>
#include <numbers>

#include "ecopark/park_model.hpp"
#include "support/fixtures.hpp"

using namespace ecopark;

namespace {

bool has_error(const park::ValidationReport& r, const std::string& fragment) {
  for (const auto& e : r.errors)
    if (e.find(fragment) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("cell distance is a Euclidean metric") {
  const auto t = testing::grid(2, 3, {0, 0, 0, 0, 0, 0});
  for (std::size_t a = 0; a < t.cells.size(); ++a)
    for (std::size_t b = 0; b < t.cells.size(); ++b) {
      CHECK(park::cell_distance(t, a, b) == park::cell_distance(t, b, a));
      CHECK((park::cell_distance(t, a, b) == 0.0) == (a == b));
      for (std::size_t c = 0; c < t.cells.size(); ++c) {
        CHECK(park::cell_distance(t, a, c) <= park::cell_distance(t, a, b) + park::cell_distance(t, b, c) + 1e-9);
      }
    }
  CHECK(park::cell_distance(t, "x00", "x12") == doctest::Approx(std::hypot(1000.0, 500.0)));
  CHECK_THROWS_AS(park::cell_distance(t, "x00", "x99"), park::ScenarioError);
}

TEST_CASE("elevation classes pick the shallowest covering trench") {
  const auto t = testing::grid(1, 5, {0.0, 1.5, 1.6, 7.5, 9.0});
  CHECK(park::elevation_class(t, 0, 0).index == 0);
  CHECK(park::elevation_class(t, 0, 1).index == 1);  // exactly on a class boundary
  CHECK(park::elevation_class(t, 0, 2).index == 2);
  CHECK(park::elevation_class(t, 3, 0).index == 7);
  CHECK_FALSE(park::try_elevation_class(t, 0, 4).has_value());
  CHECK_THROWS_AS(park::elevation_class(t, 0, 4), park::ScenarioError);
}

TEST_CASE("pipe cost scales the trench schedule by length") {
  park::Scenario s = testing::base_scenario();
  s.topology = testing::grid(1, 2, {0.0, 4.5});
  s.pipes = {testing::hdpe(0), testing::hdpe(3)};
  // 500 m at class 0 with the 300 mm pipe: 275 per 100 m.
  CHECK(*park::pipe_cost(s, 0, 0, 0) == doctest::Approx(0.0));
  s.topology.cells[1].elevation = 0.0;
  CHECK(*park::pipe_cost(s, 0, 1, 0) == doctest::Approx(1375.0));
  // 500 m at class 4.5 with the 600 mm pipe: 30 910 per 100 m.
  s.topology.cells[1].elevation = 4.5;
  CHECK(*park::pipe_cost(s, 0, 1, 1) == doctest::Approx(154550.0));
  s.pipes[1].pump_cost_per_100m[4] = 100.0;
  CHECK(*park::pipe_cost(s, 0, 1, 1) == doctest::Approx(155050.0));
  s.topology.cells[1].elevation = 8.0;
  CHECK_FALSE(park::pipe_cost(s, 0, 1, 0).has_value());
}

TEST_CASE("pipe capacity from diameter, velocity and usable fraction") {
  for (std::size_t k = 0; k < 4; ++k) {
    const auto p = testing::hdpe(k);
    const double expect = std::numbers::pi * std::pow(p.diameter / 2.0, 2) * 2.0 * 0.8 * 86400.0;
    CHECK(p.max_flow() == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(testing::hdpe(0).max_flow() == doctest::Approx(9771.6).epsilon(1e-4));
  CHECK(testing::hdpe(3).max_flow() == doctest::Approx(39086.4).epsilon(1e-4));
}

TEST_CASE("bundled scenario loads with unit conversions") {
  const auto s = park::load_scenario(testing::scenario_file());
  CHECK(s.topology.cells.size() == 16);
  CHECK(s.streams.size() == 5);
  CHECK(s.pipes.size() == 4);
  CHECK(park::validate_scenario(s).ok());
  // 86.3 mg/L is 0.0863 kg/m3.
  CHECK(s.streams[s.stream_index("A")].concentration("N") == doctest::Approx(0.0863));
  CHECK(s.generation(s.stream_index("E"), s.component_index("COD"), 0) == doctest::Approx(45000.0));
  CHECK(s.economics.penalty("N") == 0.8);
  CHECK(s.economics.price("CH4") == 0.0);
}

TEST_CASE("variants overlay the base scenario") {
  const auto path = testing::scenario_file();
  const auto variants = park::list_variants(path);
  for (const char* v : {"penalty-only", "hard-limits", "recovery-only", "recovery+penalty", "no-transport"}) {
    CHECK(std::find(variants.begin(), variants.end(), v) != variants.end());
  }
  CHECK_FALSE(park::load_scenario(path, "no-transport").transport_enabled);
  CHECK(park::load_scenario(path, "penalty-only") == park::load_scenario(path));

  SUBCASE("hard limits in kg per litre become kg per day over the total flow") {
    const auto s1 = park::load_scenario(path, "hard-limits");
    CHECK(s1.economics.discharge_limit.at("N") == doctest::Approx(525.0));
    CHECK(s1.economics.discharge_limit.at("P") == doctest::Approx(35.0));
    CHECK(s1.economics.penalty("N") == 0.0);
    const auto s2 = park::load_scenario(path, "hard-limits-strict");
    CHECK(s2.economics.discharge_limit.at("N") == doctest::Approx(52.5));
    CHECK(s2.economics.discharge_limit.at("P") == doctest::Approx(3.5));
  }
  SUBCASE("recovery variants set prices") {
    const auto r = park::load_scenario(path, "recovery-only");
    CHECK(r.economics.price("CH4") == doctest::Approx(0.16));
    CHECK(r.economics.price("N") == doctest::Approx(0.67));
    CHECK(r.economics.price("P") == doctest::Approx(0.27));
    CHECK(r.economics.penalty("N") == 0.0);
    CHECK(park::load_scenario(path, "recovery+penalty").economics.penalty("P") == 0.8);
  }
  CHECK_THROWS_AS(park::load_scenario(path, "nope"), park::ScenarioError);
}

TEST_CASE("scenario round trip through JSON") {
  for (const char* v : {"", "hard-limits", "recovery+penalty", "no-transport"}) {
    const auto s = park::load_scenario(testing::scenario_file(), v);
    const auto back = park::parse_scenario(park::save_scenario(s));
    CHECK(back.topology == s.topology);
    CHECK(back.streams == s.streams);
    CHECK(back.technologies == s.technologies);
    CHECK(back.pipes == s.pipes);
    CHECK(back.economics == s.economics);
    CHECK(back.transport_enabled == s.transport_enabled);
    CHECK(park::save_scenario(back) == park::save_scenario(s));
  }
  const auto tiny = testing::random_tiny(3);
  CHECK(park::save_scenario(park::parse_scenario(park::save_scenario(tiny))) == park::save_scenario(tiny));
}

TEST_CASE("validation reports every problem") {
  park::Scenario s = testing::base_scenario();
  s.topology = testing::grid(1, 2, {0, 0});
  s.topology.cells[1].id = "x00";
  s.streams = {testing::stream("A", "x77", 100, 0.01, 0.01)};
  s.streams[0].composition["N"] = -1.0;
  s.technologies = {testing::plant("P", 1, 1, 100, 1.5, 0.5), testing::connector()};
  s.technologies[1].removal_eff["N"] = 0.5;
  s.economics.price_factor = 2.0;
  const auto r = park::validate_scenario(s);
  CHECK_FALSE(r.ok());
  CHECK(has_error(r, "duplicate cell id"));
  CHECK(has_error(r, "not in topology"));
  CHECK(has_error(r, "negative concentration"));
  CHECK(has_error(r, "outside [0,1]"));
  CHECK(has_error(r, "connectors cannot remove"));
  CHECK(has_error(r, "at least one pipe"));
  CHECK(has_error(r, "price_factor"));
}

TEST_CASE("parse errors carry the field path") {
  try {
    park::parse_scenario(R"({"schema_version": 1, "name": "x"})");
    FAIL("expected an error");
  } catch (const park::ScenarioError& e) {
    CHECK(std::string(e.what()).find("required field missing") != std::string::npos);
  }
  CHECK_THROWS_AS(park::parse_scenario("{not json"), park::ScenarioError);
  CHECK_THROWS_AS(park::load_scenario("/nonexistent/scenario.json"), park::ScenarioError);
}
