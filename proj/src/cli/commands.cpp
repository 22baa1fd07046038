#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ecopark/cli.hpp"
#include "ecopark/formulation.hpp"
#include "json.hpp"

namespace ecopark::cli {

namespace fs = std::filesystem;

namespace {

using nlohmann::json;

// Objective and independent re-evaluation of the same design must agree to
// this relative tolerance.
constexpr double kAgreementTol = 1e-6;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

SolverSummary summarize(const solver::SolveResult& r) {
  SolverSummary s;
  s.status = r.status;
  s.objective = r.has_incumbent() ? r.objective : 0.0;
  s.best_bound = std::isfinite(r.best_bound) ? r.best_bound : 0.0;
  s.gap = std::isfinite(r.gap) ? r.gap : 0.0;
  s.nodes = r.nodes_explored;
  s.lp_iterations = r.lp_iterations;
  s.diagnostics = r.diagnostics;
  return s;
}

}  // namespace

std::string RunManifest::label() const {
  if (!name.empty()) return name;
  return variant.empty() ? std::string("base") : variant;
}

RunManifest manifest_from_json(std::string_view text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("manifest: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw UsageError("manifest: expected a JSON object");
  RunManifest m;
  try {
    m.name = doc.value("name", std::string());
    m.scenario_path = resolve(doc.at("scenario").get<std::string>(), base_dir);
    m.variant = doc.value("variant", std::string());
    m.out_dir = resolve(doc.value("out", std::string()), base_dir);
    m.seed = doc.value("seed", std::uint64_t{0});
    if (auto it = doc.find("solver"); it != doc.end()) {
      m.rel_gap = it->value("gap", m.rel_gap);
      m.time_limit = it->value("time_limit", m.time_limit);
      m.workers = it->value("workers", m.workers);
      m.solver_cmd = it->value("command", m.solver_cmd);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("manifest: ") + e.what());
  }
  if (m.rel_gap < 0.0 || m.time_limit <= 0.0 || m.workers < 1) {
    throw UsageError("manifest: gap must be >= 0, time_limit > 0 and workers >= 1");
  }
  return m;
}

RunManifest load_manifest(const std::string& path) {
  return manifest_from_json(read_file(path), fs::path(path).parent_path().string());
}

park::Scenario load_manifest_scenario(const RunManifest& m) {
  if (m.scenario_path.empty()) throw UsageError("no scenario given");
  if (!fs::exists(m.scenario_path)) throw UsageError("scenario '" + m.scenario_path + "' not found");
  if (!m.variant.empty()) {
    const auto known = park::list_variants(m.scenario_path);
    if (std::find(known.begin(), known.end(), m.variant) == known.end()) {
      std::string list;
      for (const auto& v : known) list += (list.empty() ? "" : ", ") + v;
      throw UsageError("unknown variant '" + m.variant + "' (available: " + list + ")");
    }
  }
  return park::load_scenario(m.scenario_path, m.variant);
}

void write_artifacts(const std::string& dir, const park::Scenario& s, const std::string& variant,
                     const formulation::Design& d, const evaluator::DesignReport& r,
                     const SolverSummary* solver) {
  const fs::path root(dir);
  fs::create_directories(root);
  write_file(root / "design.json", formulation::design_to_json(d, s.name));
  write_file(root / "report.json", report_to_json(s, variant, r, solver));
  write_file(root / "costs.csv", costs_csv(s, r));
  write_file(root / "series.csv", series_csv(s, r));
  write_file(root / "layout.txt", layout_text(s, d));
  write_file(root / "layout.csv", layout_csv(s, d));
}

RunOutcome run_solve(const RunManifest& m, std::ostream& log) {
  RunOutcome out;
  out.scenario = load_manifest_scenario(m);
  const park::Scenario& s = out.scenario;
  const auto built = formulation::build_model(s);
  log << fmt::format("[{}] model: {} variables ({} binary), {} constraints\n", m.label(),
                     built.model.num_variables(), built.model.num_binaries(), built.model.num_constraints());

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  solver::SolveResult res;
  if (m.solver_cmd.empty()) {
    solver::SolveOptions opts;
    // A zero gap asks for proven optimality; the solver needs it positive.
    opts.rel_gap = std::max(m.rel_gap, 1e-12);
    opts.time_limit = m.time_limit;
    opts.worker_count = m.workers;
    opts.on_incumbent = [&](double v, std::int64_t nodes) {
      log << fmt::format("[{}] incumbent {:.8g} after {} nodes, {:.1f} s\n", m.label(), v, nodes, elapsed());
    };
    res = solver::solve_milp(built.model, opts);
  } else {
    solver::ExternalOptions opts;
    opts.command = m.solver_cmd;
    opts.rel_gap = m.rel_gap;
    // The root relaxation is a valid lower bound on any reported optimum.
    const auto root = solver::solve_lp(built.model);
    if (root.status == solver::LpStatus::kOptimal) opts.reference_bound = root.objective;
    opts.verifier = [&](const std::vector<double>& x) {
      try {
        formulation::extract_design(s, built.index, x);
        return std::vector<std::string>{};
      } catch (const formulation::FormulationError& e) {
        return std::vector<std::string>{e.what()};
      }
    };
    res = solver::solve_external(built.model, opts);
  }
  out.solver = summarize(res);
  log << fmt::format("[{}] {}: objective {}, bound {}, gap {:.3g}, {} nodes, {:.1f} s\n", m.label(),
                     solver::to_string(res.status), res.has_incumbent() ? fmt::format("{:.8g}", res.objective) : "-",
                     fmt::format("{:.8g}", res.best_bound), res.gap, res.nodes_explored, elapsed());
  for (const auto& d : res.diagnostics) log << "  " << d << "\n";

  if (!res.incumbent) {
    out.error = "no feasible design found (" + solver::to_string(res.status) + ")";
    return out;
  }
  out.design = formulation::extract_design(s, built.index, *res.incumbent);
  out.report = evaluator::evaluate_design(s, *out.design);
  // An external answer that passed verification and sits above the root
  // bound is accepted even when the bound is too weak to certify it.
  bool certified = res.status == solver::SolveStatus::kOptimal;
  if (!m.solver_cmd.empty() && res.status == solver::SolveStatus::kFeasible) {
    certified = std::none_of(res.diagnostics.begin(), res.diagnostics.end(),
                             [](const std::string& d) { return d.starts_with("inconsistent"); });
  }
  bool ok = certified && out.report->feasible();
  if (std::fabs(out.report->total - res.objective) > kAgreementTol * std::max(1.0, std::fabs(res.objective))) {
    const std::string msg = fmt::format("evaluated total {:.10g} disagrees with objective {:.10g}",
                                        out.report->total, res.objective);
    out.solver->diagnostics.push_back(msg);
    log << "  " << msg << "\n";
    ok = false;
  }
  if (!out.report->feasible()) log << violation_table(out.report->violations);
  if (!m.out_dir.empty()) {
    write_artifacts(m.out_dir, s, m.variant, *out.design, *out.report, &*out.solver);
    log << fmt::format("[{}] artifacts written to {}\n", m.label(), m.out_dir);
  }
  out.exit_code = ok ? kExitOk : kExitFailure;
  return out;
}

RunOutcome run_evaluate(const RunManifest& m, const std::string& design_path, std::ostream& log) {
  RunOutcome out;
  out.scenario = load_manifest_scenario(m);
  if (!fs::exists(design_path)) throw UsageError("design '" + design_path + "' not found");
  out.design = formulation::load_design(design_path);
  out.report = evaluator::evaluate_design(out.scenario, *out.design);
  if (!m.out_dir.empty()) write_artifacts(m.out_dir, out.scenario, m.variant, *out.design, *out.report, nullptr);
  log << violation_table(out.report->violations);
  out.exit_code = out.report->feasible() ? kExitOk : kExitFailure;
  return out;
}

}  // namespace ecopark::cli
