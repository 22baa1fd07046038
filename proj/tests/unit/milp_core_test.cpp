#include "doctest.h"

#include "ecopark/formulation.hpp"
#include "ecopark/milp_core.hpp"
#include "support/fixtures.hpp"
#include "support/truth_tables.hpp"

using namespace ecopark;

namespace {

milp::MilpModel small_model() {
  milp::MilpModel m;
  const auto x = m.add_continuous("flow[A,x00,x01,0]", 0.0, 12.5);
  const auto y = m.add_binary("alpha[A,x01,B]", 2);
  const auto z = m.add_continuous("free", -milp::kInfinity, milp::kInfinity);
  const auto u = m.add_continuous("lower_only", 1.5, milp::kInfinity);
  m.add_constraint({{x, 1.0}, {y, -12.5}}, milp::Sense::kLessEqual, 0.0, "link", "link[A]");
  m.add_constraint({{x, 2.0}, {z, 1.0}, {u, -1.0}}, milp::Sense::kGreaterEqual, -3.25, "mix");
  m.add_constraint({{z, 1.0}, {u, 1.0}}, milp::Sense::kEqual, 4.0, "eq");
  m.add_objective_term(x, 0.125);
  m.add_objective_term(y, 1000.0);
  m.add_objective_term(z, -1.0);
  return m;
}

}  // namespace

TEST_CASE("product gadgets have exact truth tables") {
  CHECK(testing::check_bin_bin().empty());
  CHECK(testing::check_bin_complement().empty());
  CHECK(testing::check_bin_cont().empty());
}

TEST_CASE("indicator links encode OR in both forms") {
  CHECK(testing::check_indicator(milp::LinkForm::kAggregated, 5).empty());
  CHECK(testing::check_indicator(milp::LinkForm::kDisaggregated, 5).empty());
}

TEST_CASE("gadgets reject bad inputs") {
  milp::MilpModel m;
  const auto b = m.add_binary("b");
  const auto f = m.add_continuous("f", 0.0, 10.0);
  const auto g = m.add_continuous("g", 0.0, milp::kInfinity);
  CHECK_THROWS_AS(milp::add_product_bin_cont(m, f, b, 1.0, "w1"), milp::ModelError);
  CHECK_THROWS_AS(milp::add_product_bin_cont(m, b, f, 5.0, "w2"), milp::ModelError);
  CHECK_THROWS_AS(milp::add_product_bin_cont(m, b, g, milp::kInfinity, "w3"), milp::ModelError);
  CHECK_THROWS_AS(milp::add_indicator_link(m, b, std::span<const milp::VarId>{}), milp::ModelError);
}

TEST_CASE("model registry") {
  milp::MilpModel m;
  const auto a = m.add_binary("a");
  CHECK_THROWS_AS(m.add_binary("a"), milp::ModelError);
  CHECK(m.find("a") == a);
  CHECK_FALSE(m.find("nope").has_value());
  CHECK_THROWS_AS(m.set_bounds(a, 1.0, 0.0), milp::ModelError);

  SUBCASE("canonicalize merges duplicate terms") {
    const auto b = m.add_binary("b");
    m.add_constraint({{b, 1.0}, {a, 2.0}, {b, 3.0}}, milp::Sense::kLessEqual, 4.0, "t");
    m.canonicalize();
    const auto& terms = m.constraints().back().terms;
    REQUIRE(terms.size() == 2);
    CHECK(terms[0].var == a);
    CHECK(terms[1].coef == doctest::Approx(4.0));
  }
}

TEST_CASE("violations are relative to the row scale") {
  milp::MilpModel m;
  const auto x = m.add_continuous("x", 0.0, 1e6);
  m.add_constraint({{x, 1.0}}, milp::Sense::kLessEqual, 1e5, "cap");
  CHECK(m.violations(std::vector<double>{1e5 + 1e-4}, 1e-7).empty());
  CHECK(m.violations(std::vector<double>{1e5 + 1.0}, 1e-7).size() == 1);
}

TEST_CASE("MPS round trip preserves the model") {
  auto m = small_model();
  m.canonicalize();
  const auto exported = milp::export_model(m);
  for (const auto& name : exported.names.column_names) CHECK(name.size() <= 8);

  const auto back = milp::read_mps(exported.mps, &exported.names);
  REQUIRE(back.num_variables() == m.num_variables());
  REQUIRE(back.num_constraints() == m.num_constraints());
  for (std::size_t i = 0; i < m.num_variables(); ++i) {
    const auto& a = m.variables()[i];
    const auto& b = back.variables()[i];
    CHECK(a.name == b.name);
    CHECK(a.kind == b.kind);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
  }
  for (std::size_t r = 0; r < m.num_constraints(); ++r) {
    CHECK(m.constraints()[r].sense == back.constraints()[r].sense);
    CHECK(m.constraints()[r].rhs == back.constraints()[r].rhs);
    CHECK(m.constraints()[r].terms == back.constraints()[r].terms);
  }
  CHECK(m.objective().terms == back.objective().terms);

  SUBCASE("name table survives TSV") {
    const auto table = milp::NameTable::from_tsv(exported.names.to_tsv(m));
    CHECK(table.column_names == exported.names.column_names);
    CHECK(table.row_names == exported.names.row_names);
  }
}

TEST_CASE("MPS round trip of the bundled model") {
  const auto s = park::load_scenario(testing::scenario_file(), "hard-limits");
  const auto built = formulation::build_model(s);
  const auto exported = milp::export_model(built.model);
  const auto back = milp::read_mps(exported.mps, &exported.names);
  CHECK(back.num_variables() == built.model.num_variables());
  CHECK(back.num_constraints() == built.model.num_constraints());
  CHECK(back.num_binaries() == built.model.num_binaries());
  std::vector<double> x(built.model.num_variables(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.001 * static_cast<double>(i % 97);
  CHECK(back.objective_value(x) == doctest::Approx(built.model.objective_value(x)).epsilon(1e-12));
}

TEST_CASE("MPS import errors name the line") {
  auto expect_error = [](const std::string& text, const std::string& fragment) {
    try {
      milp::read_mps(text);
      FAIL("no error for: " << fragment);
    } catch (const milp::ModelError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, std::string(e.what()));
    }
  };
  expect_error("NAME T\nROWS\n N OBJ\n Q R1\nENDATA\n", "unknown row type");
  expect_error("NAME T\nROWS\n N OBJ\n L R1\n L R1\nENDATA\n", "duplicate row");
  expect_error("NAME T\nROWS\n N OBJ\nCOLUMNS\n    X OBJ abc\nENDATA\n", "bad number");
  expect_error("NAME T\nROWS\n N OBJ\nCOLUMNS\n    X OBJ 1\n", "ENDATA");
  expect_error("NAME T\nOBJSENSE\n    MAX\nROWS\n N OBJ\nENDATA\n", "minimisation");
  expect_error("NAME T\nROWS\n N OBJ\nCOLUMNS\n    M1 'MARKER' 'INTORG'\n    X OBJ 1\n    M2 'MARKER' 'INTEND'\n"
               "BOUNDS\n UP BND X 5\nENDATA\n",
               "general integers");
}

TEST_CASE("solution import") {
  const auto m = small_model();
  const auto exported = milp::export_model(m);

  SUBCASE("original and mangled names resolve") {
    const std::string text = "flow[A,x00,x01,0] 2.5\n" + exported.names.column_names[1] + " 1\n";
    const auto sol = milp::import_solution(m, text, &exported.names);
    CHECK(sol.values[0] == 2.5);
    CHECK(sol.values[1] == 1.0);
    CHECK(sol.missing == 2);
    CHECK(sol.warnings.size() == 2);
  }
  SUBCASE("formatted solutions read back exactly") {
    const std::vector<double> x{1.0 / 3.0, 1.0, -2.75, 6.75};
    const auto sol = milp::import_solution(m, milp::format_solution(m, x));
    CHECK(sol.values == x);
    CHECK(sol.missing == 0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(milp::import_solution(m, "nosuch 1\n"), milp::ModelError);
    CHECK_THROWS_AS(milp::import_solution(m, "free abc\n"), milp::ModelError);
    CHECK_THROWS_AS(milp::import_solution(m, "free\n"), milp::ModelError);
  }
}
