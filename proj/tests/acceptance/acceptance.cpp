// Acceptance suite: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ecopark/evaluator.hpp"
#include "ecopark/formulation.hpp"
#include "ecopark/park_model.hpp"
#include "ecopark/solver.hpp"
#include "support/fixtures.hpp"
#include "support/truth_tables.hpp"

using namespace ecopark;

namespace {

// Pinned tolerances and budgets.
constexpr double kCh4Tol = 0.01;              // relative, against 116e6 m3
constexpr double kCh4OracleTol = 1e-9;        // relative, against the closed form
constexpr double kPipeTol = 1e-9;             // relative, table lookups are exact
constexpr double kHydraulicTol = 1e-3;        // relative
constexpr double kDominanceTol = 1e-4;        // relative, matches the solve gap
constexpr double kOracleAbsTol = 1e-6;        // plus kOracleRelTol * |objective|
constexpr double kOracleRelTol = 1e-9;
constexpr double kLimitTol = 1e-7;            // relative feasibility tolerance
constexpr double kAgreementTol = 1e-6;        // model objective vs evaluator total
constexpr double kConservationTol = 1e-9;     // relative mass balance
constexpr double kFastBudget = 1.0;           // seconds, criteria 1 and 2
constexpr double kOracleBudget = 300.0;       // seconds, criterion 5
constexpr int kOracleInstances = 60;

constexpr double kSolveGap = 1e-4;
constexpr double kHardLimitTime = 400.0;
constexpr double kDominanceTime = 600.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool close(double a, double b, double rel) { return std::fabs(a - b) <= rel * std::max(1.0, std::fabs(b)); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const park::Scenario& variant(const std::string& name) {
  static std::map<std::string, park::Scenario> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, park::load_scenario(testing::scenario_file(), name)).first;
  return it->second;
}

struct Solved {
  park::Scenario scenario;
  formulation::BuiltModel built;
  solver::SolveResult result;
};

Solved solve(const park::Scenario& s, double time_limit, const std::string& label) {
  std::fprintf(stderr, "  solving %s ...\n", label.c_str());
  Solved out{s, formulation::build_model(s), {}};
  solver::SolveOptions o;
  o.rel_gap = kSolveGap;
  o.time_limit = time_limit;
  out.result = solver::solve_milp(out.built.model, o);
  std::fprintf(stderr, "    objective %.6g bound %.6g nodes %lld in %.1f s\n", out.result.objective,
               out.result.best_bound, static_cast<long long>(out.result.nodes_explored), out.result.wall_time);
  return out;
}

// Bundled variant solves are shared between criteria.
const Solved& solved_variant(const std::string& name, double time_limit = 3600.0) {
  static std::map<std::string, Solved> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, solve(variant(name), time_limit, name)).first;
  return it->second;
}

std::vector<const Solved*>& all_incumbents() {
  static std::vector<const Solved*> v;
  return v;
}

const Solved& track(const Solved& s) {
  all_incumbents().push_back(&s);
  return s;
}

double total_np(const evaluator::DesignReport& r) { return r.total_discharged("N") + r.total_discharged("P"); }

// Criterion 1 ----------------------------------------------------------------

Outcome ch4_balance() {
  const auto t0 = Clock::now();
  const auto& s = variant("recovery+penalty");
  const auto d = formulation::load_design(testing::design_file("centralised_b.json"));
  const auto rep = evaluator::evaluate_design(s, d);
  const double elapsed = seconds_since(t0);
  const double ch4 = rep.recovered.at("CH4");
  const double oracle = 76250.0 * 0.70 * 0.596 * 3650.0;
  const bool ok = rep.feasible() && close(ch4, 116e6, kCh4Tol) && close(ch4, oracle, kCh4OracleTol) &&
                  elapsed < kFastBudget;
  return {ok, fmt("CH4 %.6g m3 (target 116e6 +/-%.0f%%, closed form %.6g), %.3f s", ch4, kCh4Tol * 100, oracle,
                  elapsed)};
}

// Criterion 2 ----------------------------------------------------------------

Outcome pipe_economics() {
  const auto t0 = Clock::now();
  // Cost per 100 m by elevation class (rows) and diameter 0.3..0.6 m (columns).
  static const double expect[8][4] = {
      {275, 465, 809, 1111},         {3765, 4145, 4830, 5434},       {4944, 5324, 6009, 6612},
      {5478, 5857, 6541, 7144},      {29248, 29626, 30308, 30910},   {46111, 46487, 47166, 47764},
      {114498, 114873, 115550, 116147}, {116165, 116541, 117218, 117814}};
  // Cell 0 sits at 0 m; cell k+1 sits exactly on class k, 500 (k+1) m away.
  park::Scenario s = testing::base_scenario();
  s.topology = testing::grid(1, 9, {0.0, 0.0, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5});
  for (std::size_t k = 0; k < 4; ++k) s.pipes.push_back(testing::hdpe(k));

  int matched = 0, routes = 0;
  for (std::size_t c = 0; c < 8; ++c)
    for (std::size_t k = 0; k < 4; ++k) {
      const double length = 500.0 * static_cast<double>(c + 1);
      const double want = expect[c][k] * length / 100.0;
      const double model = formulation::pipe_cost_coefficient(s, 0, c + 1, k);
      const auto eval = evaluator::route_cost(s, s.topology.cells[0].id, s.topology.cells[c + 1].id, s.pipes[k].id);
      matched += close(model, want, kPipeTol) && eval && close(*eval, want, kPipeTol);
      ++routes;
    }
  // Spot values per 100 m at the extremes, through a 100 m route.
  park::Scenario spot = s;
  spot.topology.cells[1].east = spot.topology.cells[0].east + 100.0;
  spot.topology.cells[1].elevation = 0.0;
  spot.topology.cells[2].east = spot.topology.cells[0].east;
  spot.topology.cells[2].north = spot.topology.cells[0].north + 100.0;
  spot.topology.cells[2].elevation = 7.5;
  const double lo = formulation::pipe_cost_coefficient(spot, 0, 1, 0);
  const double hi = formulation::pipe_cost_coefficient(spot, 0, 2, 3);
  const double elapsed = seconds_since(t0);
  const bool ok = matched == 32 && routes == 32 && close(lo, 275.0, kPipeTol) && close(hi, 117814.0, kPipeTol) &&
                  elapsed < kFastBudget;
  return {ok, fmt("%d/32 pairs on both routes, spot %.0f and %.0f per 100 m, %.3f s", matched, lo, hi, elapsed)};
}

// Criterion 3 ----------------------------------------------------------------

Outcome pipe_hydraulics() {
  int ok_count = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto p = testing::hdpe(k);
    const double phi = 0.3 + 0.1 * static_cast<double>(k);
    const double want = std::numbers::pi * (phi / 2) * (phi / 2) * 2.0 * 0.8 * 86400.0;
    ok_count += close(p.max_flow(), want, kHydraulicTol);
  }
  const auto& s = variant("penalty-only");
  const double f300 = s.pipes[s.pipe_index("HDPE300")].max_flow();
  const double f600 = s.pipes[s.pipe_index("HDPE600")].max_flow();
  const bool ok = ok_count == 4 && close(f300, 9771.0, kHydraulicTol) && close(f600, 39086.0, kHydraulicTol);
  return {ok, fmt("4 diameters: %d within 0.1%%; 0.3 m %.1f, 0.6 m %.1f m3/d", ok_count, f300, f600)};
}

// Criterion 4 ----------------------------------------------------------------

park::Scenario perturbed(const park::Scenario& base, std::uint64_t seed, bool transport) {
  park::Scenario s = base;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> factor(0.5, 2.0);
  for (auto& t : s.technologies) {
    if (t.is_connector()) continue;
    t.capex *= factor(rng);
    t.opex *= factor(rng);
  }
  s.transport_enabled = transport;
  return s;
}

Outcome transport_dominance() {
  std::vector<std::pair<std::string, std::pair<const Solved*, const Solved*>>> cases;
  static std::vector<Solved> owned;
  owned.reserve(4);
  cases.push_back({"bundled", {&track(solved_variant("penalty-only")), &track(solved_variant("no-transport"))}});
  for (std::uint64_t seed : {11, 12}) {
    const auto& base = variant("penalty-only");
    owned.push_back(solve(perturbed(base, seed, true), kDominanceTime, fmt("costs-%d with transport", int(seed))));
    owned.push_back(solve(perturbed(base, seed, false), kDominanceTime, fmt("costs-%d without", int(seed))));
    cases.push_back({fmt("costs-%d", int(seed)), {&track(owned[owned.size() - 2]), &track(owned.back())}});
  }
  bool ok = true;
  std::string detail;
  for (const auto& [name, pair] : cases) {
    const auto& on = pair.first->result;
    const auto& off = pair.second->result;
    const bool holds = on.has_incumbent() && std::isfinite(off.best_bound) &&
                       on.objective <= off.best_bound + kDominanceTol * std::fabs(off.best_bound);
    ok = ok && holds;
    detail += fmt("%s %.6g <= %.6g%s; ", name.c_str(), on.objective, off.best_bound, holds ? "" : " (violated)");
  }
  return {ok, detail + "transport incumbent vs no-transport bound"};
}

// Criterion 5 ----------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  int agree = 0, feasible = 0;
  std::string first_miss;
  for (int seed = 1; seed <= kOracleInstances; ++seed) {
    const auto s = testing::random_tiny(static_cast<std::uint64_t>(seed));
    const auto built = formulation::build_model(s);
    solver::SolveOptions o;
    o.rel_gap = 1e-12;
    o.abs_gap = kOracleAbsTol;
    const auto milp = solver::solve_milp(built.model, o);
    const auto bf = evaluator::brute_force_optimum(s);
    bool same = false;
    if (!bf.feasible) {
      same = milp.status == solver::SolveStatus::kInfeasible;
    } else {
      ++feasible;
      same = milp.has_incumbent() &&
             std::fabs(milp.objective - bf.objective) <= kOracleAbsTol + kOracleRelTol * std::fabs(bf.objective);
    }
    agree += same;
    if (!same && first_miss.empty()) first_miss = fmt(" first mismatch seed %d (%.9g vs %.9g)", seed, milp.objective, bf.objective);
  }
  const double elapsed = seconds_since(t0);
  const bool ok = agree == kOracleInstances && elapsed < kOracleBudget;
  return {ok, fmt("%d/%d agree (%d feasible), %.1f s%s", agree, kOracleInstances, feasible, elapsed, first_miss.c_str())};
}

// Criterion 6 ----------------------------------------------------------------

bool within_limits(const park::Scenario& s, const evaluator::DesignReport& r) {
  for (const auto& day : r.discharged_per_day)
    for (const auto& [comp, limit] : s.economics.discharge_limit) {
      const auto it = day.find(comp);
      const double v = it == day.end() ? 0.0 : it->second;
      if (v > limit + kLimitTol * std::max(1.0, limit)) return false;
    }
  return true;
}

Outcome hard_limits() {
  const auto& s1 = track(solved_variant("hard-limits", kHardLimitTime));
  const auto& s2 = track(solved_variant("hard-limits-strict"));
  bool limits_ok = true;
  std::string detail;
  for (const auto& [label, run] : {std::pair{"loose", &s1}, std::pair{"strict", &s2}}) {
    if (!run->result.has_incumbent()) {
      limits_ok = false;
      continue;
    }
    const auto d = formulation::extract_design(run->scenario, run->built.index, *run->result.incumbent);
    const auto rep = evaluator::evaluate_design(run->scenario, d);
    limits_ok = limits_ok && within_limits(run->scenario, rep);
    const auto& day = rep.discharged_per_day.at(0);
    detail += fmt("%s N %.4g/%.4g P %.4g/%.4g kg/d; ", label,
                  day.count("N") ? day.at("N") : 0.0, run->scenario.economics.discharge_limit.at("N"),
                  day.count("P") ? day.at("P") : 0.0, run->scenario.economics.discharge_limit.at("P"));
  }
  // strict optimum >= strict bound >= loose incumbent >= loose optimum.
  const bool ordered = s1.result.has_incumbent() &&
                       s2.result.best_bound >= s1.result.objective - kDominanceTol * std::fabs(s1.result.objective);
  return {limits_ok && ordered,
          detail + fmt("strict bound %.6g >= loose incumbent %.6g (strict incumbent %.6g)", s2.result.best_bound,
                       s1.result.objective, s2.result.objective)};
}

// Criterion 7 ----------------------------------------------------------------

Outcome circularity() {
  auto discharged = [](const std::string& v) {
    const auto& run = track(solved_variant(v));
    if (!run.result.has_incumbent()) return std::nan("");
    const auto d = formulation::extract_design(run.scenario, run.built.index, *run.result.incumbent);
    return total_np(evaluator::evaluate_design(run.scenario, d));
  };
  const double pen = discharged("penalty-only");
  const double rec = discharged("recovery-only");
  const double both = discharged("recovery+penalty");
  const bool ok = rec > pen && both < rec;
  return {ok, fmt("N+P discharged: recovery-only %.1f t > penalty-only %.1f t, recovery+penalty %.3f t", rec / 1000,
                  pen / 1000, both / 1000)};
}

// Criterion 8 ----------------------------------------------------------------

Outcome invariants() {
  std::vector<std::string> fails;

  for (const auto& f : testing::check_all_gadgets()) fails.push_back("gadget " + f);

  int incumbents = 0;
  for (const Solved* run : all_incumbents()) {
    if (!run->result.has_incumbent()) continue;
    ++incumbents;
    const auto& x = *run->result.incumbent;
    const auto& name = run->scenario.name;
    if (!run->built.model.violations(x, 1e-6).empty()) fails.push_back(name + ": model rows violated");
    try {
      const auto d = formulation::extract_design(run->scenario, run->built.index, x);
      const auto rep = evaluator::evaluate_design(run->scenario, d);
      if (!rep.feasible()) fails.push_back(name + ": evaluator rejects incumbent");
      if (!close(rep.total, run->result.objective, kAgreementTol)) fails.push_back(name + ": objective disagrees");
      for (const auto& [key, gen] : rep.generated) {
        if (std::fabs(rep.removed.at(key) + rep.discharged.at(key) - gen) > kConservationTol * std::max(1.0, gen))
          fails.push_back(name + ": mass not conserved for " + key.first + "/" + key.second);
      }
    } catch (const std::exception& e) {
      fails.push_back(name + ": " + e.what());
    }
  }

  // Determinism at one worker: tiny instances and a node-limited bundled run.
  auto same_twice = [&](const milp::MilpModel& m, const solver::SolveOptions& o, const std::string& what) {
    const auto a = solver::solve_milp(m, o);
    const auto b = solver::solve_milp(m, o);
    if (a.incumbent != b.incumbent || a.nodes_explored != b.nodes_explored || a.bound_trace != b.bound_trace ||
        a.lp_iterations != b.lp_iterations)
      fails.push_back("nondeterministic " + what);
  };
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    same_twice(formulation::build_model(testing::random_tiny(seed)).model, {}, fmt("tiny-%d", int(seed)));
  }
  solver::SolveOptions limited;
  limited.node_limit = 300;
  same_twice(formulation::build_model(variant("hard-limits-strict")).model, limited, "hard-limits-strict");

  for (const auto& v : park::list_variants(testing::scenario_file())) {
    const auto& s = variant(v);
    const auto text = park::save_scenario(s);
    const auto back = park::parse_scenario(text);
    if (park::save_scenario(back) != text || !(back.topology == s.topology) || !(back.streams == s.streams) ||
        !(back.technologies == s.technologies) || !(back.pipes == s.pipes) || !(back.economics == s.economics))
      fails.push_back("round trip " + v);
  }

  std::string detail = fmt("gadgets, %d incumbents, 11 determinism pairs, variant round trips", incumbents);
  if (!fails.empty()) detail += ": " + fails.front() + (fails.size() > 1 ? fmt(" (+%d more)", int(fails.size() - 1)) : "");
  return {fails.empty() && incumbents > 0, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // Criterion 8 runs last so it can audit every incumbent produced above.
  const std::vector<Criterion> criteria = {
      {1, "ch4-mass-balance", ch4_balance},      {2, "pipe-economics", pipe_economics},
      {3, "pipe-hydraulics", pipe_hydraulics},   {5, "oracle-equivalence", oracle_equivalence},
      {4, "transport-dominance", transport_dominance}, {6, "hard-limits", hard_limits},
      {7, "circularity-direction", circularity}, {8, "invariant-suites", invariants},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    std::fprintf(stderr, "[%d] %s\n", c.id, c.name);
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %d %-22s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
