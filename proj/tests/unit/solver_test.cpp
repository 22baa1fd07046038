#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "ecopark/formulation.hpp"
#include "ecopark/solver.hpp"
#include "support/fixtures.hpp"

using namespace ecopark;
using milp::Sense;

namespace {

// max 3x + 2y  s.t.  x + y <= 4, x + 3y <= 6, x <= 3  -> x = 3, y = 1, value 11
milp::MilpModel textbook_lp() {
  milp::MilpModel m;
  const auto x = m.add_continuous("x", 0.0, 3.0);
  const auto y = m.add_continuous("y", 0.0, milp::kInfinity);
  m.add_constraint({{x, 1.0}, {y, 1.0}}, Sense::kLessEqual, 4.0, "a");
  m.add_constraint({{x, 1.0}, {y, 3.0}}, Sense::kLessEqual, 6.0, "b");
  m.add_objective_term(x, -3.0);
  m.add_objective_term(y, -2.0);
  return m;
}

// 0/1 knapsack: values 10, 13, 7, 8; weights 5, 7, 4, 3; capacity 12
// -> best is items {0, 2, 3} (weight 12, value 25)
milp::MilpModel knapsack() {
  milp::MilpModel m;
  const double value[] = {10, 13, 7, 8};
  const double weight[] = {5, 7, 4, 3};
  std::vector<milp::Term> cap;
  for (int i = 0; i < 4; ++i) {
    const auto v = m.add_binary("item" + std::to_string(i));
    m.add_objective_term(v, -value[i]);
    cap.push_back({v, weight[i]});
  }
  m.add_constraint(cap, Sense::kLessEqual, 12.0, "cap");
  return m;
}

milp::MilpModel random_milp(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coef(-5, 5), rhs(5, 30), cost(-10, 10);
  milp::MilpModel m;
  std::vector<milp::VarId> v;
  for (int j = 0; j < 10; ++j) {
    v.push_back(j % 2 ? m.add_binary("b" + std::to_string(j)) : m.add_continuous("c" + std::to_string(j), 0.0, 8.0));
    m.add_objective_term(v.back(), cost(rng));
  }
  for (int i = 0; i < 8; ++i) {
    std::vector<milp::Term> row;
    for (auto x : v)
      if (rng() % 2) row.push_back({x, static_cast<double>(coef(rng))});
    m.add_constraint(row, Sense::kLessEqual, rhs(rng), "r");
  }
  return m;
}

}  // namespace

TEST_CASE("LP optimum of a textbook problem") {
  const auto r = solver::solve_lp(textbook_lp());
  REQUIRE(r.status == solver::LpStatus::kOptimal);
  CHECK(r.objective == doctest::Approx(-11.0));
  CHECK(r.x[0] == doctest::Approx(3.0));
  CHECK(r.x[1] == doctest::Approx(1.0));
}

TEST_CASE("LP infeasible and unbounded") {
  SUBCASE("infeasible") {
    milp::MilpModel m;
    const auto x = m.add_continuous("x", 0.0, 1.0);
    m.add_constraint({{x, 1.0}}, Sense::kGreaterEqual, 2.0, "r");
    CHECK(solver::solve_lp(m).status == solver::LpStatus::kInfeasible);
  }
  SUBCASE("unbounded") {
    milp::MilpModel m;
    const auto x = m.add_continuous("x", 0.0, milp::kInfinity);
    const auto y = m.add_continuous("y", 0.0, milp::kInfinity);
    m.add_constraint({{x, 1.0}, {y, -1.0}}, Sense::kLessEqual, 1.0, "r");
    m.add_objective_term(y, -1.0);
    CHECK(solver::solve_lp(m).status == solver::LpStatus::kUnbounded);
  }
  SUBCASE("equality rows and free variables") {
    milp::MilpModel m;
    const auto x = m.add_continuous("x", -milp::kInfinity, milp::kInfinity);
    const auto y = m.add_continuous("y", 0.0, 10.0);
    m.add_constraint({{x, 1.0}, {y, 1.0}}, Sense::kEqual, 3.0, "e");
    m.add_objective_term(x, 1.0);
    const auto r = solver::solve_lp(m);
    REQUIRE(r.status == solver::LpStatus::kOptimal);
    CHECK(r.objective == doctest::Approx(-7.0));
  }
}

TEST_CASE("LP fixings") {
  const auto m = textbook_lp();
  const auto r = solver::solve_lp(m, {{milp::VarId{0}, 1.0}});
  REQUIRE(r.status == solver::LpStatus::kOptimal);
  CHECK(r.objective == doctest::Approx(-1.0 * 3 - 2.0 * 5.0 / 3.0));
}

TEST_CASE("MILP knapsack") {
  const auto r = solver::solve_milp(knapsack());
  REQUIRE(r.status == solver::SolveStatus::kOptimal);
  CHECK(r.objective == doctest::Approx(-25.0));
  CHECK(r.best_bound <= r.objective + 1e-9);
  const auto& x = *r.incumbent;
  CHECK(x == std::vector<double>{1, 0, 1, 1});
}

TEST_CASE("MILP infeasible") {
  milp::MilpModel m;
  const auto a = m.add_binary("a");
  const auto b = m.add_binary("b");
  m.add_constraint({{a, 1.0}, {b, 1.0}}, Sense::kEqual, 1.0, "one");
  m.add_constraint({{a, 2.0}, {b, 2.0}}, Sense::kEqual, 1.0, "half");
  const auto r = solver::solve_milp(m);
  CHECK(r.status == solver::SolveStatus::kInfeasible);
  CHECK_FALSE(r.has_incumbent());
}

TEST_CASE("solve options are validated") {
  solver::SolveOptions o;
  o.rel_gap = -1.0;
  CHECK_THROWS_AS(solver::solve_milp(knapsack(), o), solver::SolverError);
  o = {};
  o.worker_count = 0;
  CHECK_THROWS_AS(solver::solve_milp(knapsack(), o), solver::SolverError);
}

TEST_CASE("solver is deterministic with one worker") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = random_milp(seed);
    const auto a = solver::solve_milp(m);
    const auto b = solver::solve_milp(m);
    CHECK(a.status == b.status);
    CHECK(a.nodes_explored == b.nodes_explored);
    CHECK(a.incumbent == b.incumbent);
    CHECK(a.bound_trace == b.bound_trace);
  }
}

TEST_CASE("parallel workers reach the same optimum") {
  const auto s = testing::random_tiny(7);
  const auto built = formulation::build_model(s);
  solver::SolveOptions one, four;
  one.rel_gap = four.rel_gap = 1e-9;
  four.worker_count = 4;
  const auto a = solver::solve_milp(built.model, one);
  const auto b = solver::solve_milp(built.model, four);
  REQUIRE(a.status == solver::SolveStatus::kOptimal);
  REQUIRE(b.status == solver::SolveStatus::kOptimal);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-8));
}

TEST_CASE("time limit yields a limit status with a valid bound") {
  const auto s = park::load_scenario(testing::scenario_file(), "hard-limits");
  const auto built = formulation::build_model(s);
  solver::SolveOptions o;
  o.time_limit = 2.0;
  o.rel_gap = 1e-9;
  const auto r = solver::solve_milp(built.model, o);
  CHECK(r.status != solver::SolveStatus::kOptimal);
  CHECK(r.wall_time < 30.0);
  if (r.has_incumbent()) CHECK(r.best_bound <= r.objective + 1e-6 * std::fabs(r.objective));
}

TEST_CASE("external solver round trip through the MPS tool") {
  const auto m = knapsack();
  solver::ExternalOptions o;
  o.command = ECOPARK_MPS_SOLVE " --quiet";
  o.work_dir = (std::filesystem::temp_directory_path() / "ecopark_ext_test").string();
  o.reference_bound = solver::solve_milp(m).best_bound;
  const auto r = solver::solve_external(m, o);
  REQUIRE(r.has_incumbent());
  CHECK(r.objective == doctest::Approx(-25.0));
  CHECK(r.status == solver::SolveStatus::kOptimal);

  SUBCASE("failing command") {
    o.command = "false";
    CHECK_THROWS_AS(solver::solve_external(m, o), solver::SolverError);
  }
  SUBCASE("verifier rejections are reported") {
    o.verifier = [](const std::vector<double>&) { return std::vector<std::string>{"rejected"}; };
    CHECK_THROWS_AS(solver::solve_external(m, o), solver::SolverError);
  }
}
