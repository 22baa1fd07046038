#include <CLI11.hpp>
#include <fmt/format.h>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "ecopark/cli.hpp"
#include "ecopark/formulation.hpp"

namespace ecopark::cli {

namespace fs = std::filesystem;

namespace {

// Flags shared by the commands; each is applied only when given so that
// manifests keep their own values otherwise.
struct Flags {
  std::string scenario;
  std::vector<std::string> variants;
  double gap = 0.0;
  double time_limit = 0.0;
  int workers = 0;
  std::string out;
  std::string solver_cmd;
  std::uint64_t seed = 0;
  CLI::Option* gap_opt = nullptr;
  CLI::Option* time_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* solver_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

void add_scenario_flags(CLI::App* cmd, Flags& f, bool many_variants) {
  cmd->add_option("--scenario", f.scenario, "scenario JSON file");
  if (many_variants) {
    cmd->add_option("--variant", f.variants, "scenario variant (repeatable)");
  } else {
    cmd->add_option("--variant", f.variants, "scenario variant")->expected(1);
  }
  cmd->add_option("--out", f.out, "output directory");
}

void add_solver_flags(CLI::App* cmd, Flags& f) {
  f.gap_opt = cmd->add_option("--gap", f.gap, "relative optimality gap")->check(CLI::NonNegativeNumber);
  f.time_opt = cmd->add_option("--time-limit", f.time_limit, "seconds per solve")->check(CLI::PositiveNumber);
  f.workers_opt = cmd->add_option("--workers", f.workers, "branch-and-bound threads")->check(CLI::PositiveNumber);
  f.solver_opt = cmd->add_option("--solver-cmd", f.solver_cmd, "external solver: `cmd model.mps` writes model.mps.sol");
  f.seed_opt = cmd->add_option("--seed", f.seed, "recorded in the run manifest");
}

void apply(const Flags& f, RunManifest& m) {
  if (!f.scenario.empty()) m.scenario_path = f.scenario;
  if (!f.out.empty()) m.out_dir = f.out;
  if (f.gap_opt && f.gap_opt->count()) m.rel_gap = f.gap;
  if (f.time_opt && f.time_opt->count()) m.time_limit = f.time_limit;
  if (f.workers_opt && f.workers_opt->count()) m.workers = f.workers;
  if (f.solver_opt && f.solver_opt->count()) m.solver_cmd = f.solver_cmd;
  if (f.seed_opt && f.seed_opt->count()) m.seed = f.seed;
}

std::string safe_dir_name(const std::string& label) {
  std::string out;
  for (char c : label) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out.empty() ? "run" : out;
}

int cmd_solve(const std::string& manifest_path, const Flags& f, std::ostream& out) {
  RunManifest m;
  if (!manifest_path.empty()) m = load_manifest(manifest_path);
  apply(f, m);
  if (!f.variants.empty()) m.variant = f.variants.front();
  const auto res = run_solve(m, out);
  if (!res.error.empty()) out << "error: " << res.error << "\n";
  if (res.report) {
    out << fmt::format("total cost {:.8g} {}\n", res.report->total, res.scenario.currency);
  }
  return res.exit_code;
}

int cmd_evaluate(const std::string& design_path, const Flags& f, std::ostream& out) {
  RunManifest m;
  apply(f, m);
  if (!f.variants.empty()) m.variant = f.variants.front();
  const auto res = run_evaluate(m, design_path, out);
  const auto& r = *res.report;
  out << costs_csv(res.scenario, r);
  for (const auto& [res_id, v] : r.recovered) out << fmt::format("recovered {} {:.6g}\n", res_id, v);
  for (const auto& c : res.scenario.components) {
    out << fmt::format("discharged {} {:.6g} kg\n", c, r.total_discharged(c));
  }
  out << (r.feasible() ? "feasible\n" : "infeasible\n");
  return res.exit_code;
}

int cmd_compare(const std::vector<std::string>& manifest_paths, const Flags& f, std::ostream& out) {
  std::vector<RunManifest> runs;
  for (const auto& p : manifest_paths) runs.push_back(load_manifest(p));
  for (const auto& v : f.variants) {
    RunManifest m;
    m.variant = v;
    runs.push_back(m);
  }
  if (runs.size() < 2) throw UsageError("compare needs at least two runs");
  for (auto& m : runs) {
    const std::string own_out = m.out_dir;
    apply(f, m);
    m.out_dir = f.out.empty() ? own_out : (fs::path(f.out) / safe_dir_name(m.label())).string();
  }
  // Unknown variants are usage errors before any solve starts.
  for (const auto& m : runs) load_manifest_scenario(m);

  std::vector<std::string> components, resources;
  std::vector<ComparisonRow> rows;
  bool all_ok = true;
  for (const auto& m : runs) {
    ComparisonRow row;
    row.label = m.label();
    try {
      const auto res = run_solve(m, out);
      if (components.empty()) {
        components = res.scenario.components;
        resources = res.scenario.resources;
      }
      row.ok = res.exit_code == kExitOk;
      row.status = res.solver ? solver::to_string(res.solver->status) : "error";
      if (res.report && !res.report->feasible()) row.status = "violations";
      if (row.ok) {
        row.total = res.report->total;
        for (const auto& c : components) row.discharged_t.push_back(res.report->total_discharged(c) / 1000.0);
        for (const auto& r : resources) {
          auto it = res.report->recovered.find(r);
          row.recovered.push_back(it == res.report->recovered.end() ? 0.0 : it->second);
        }
      }
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      out << "[" << row.label << "] error: " << e.what() << "\n";
      row.status = "error";
    }
    all_ok = all_ok && row.ok;
    rows.push_back(std::move(row));
  }
  const std::string table = comparison_table(components, resources, rows);
  out << "\n" << table;
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    std::ofstream(fs::path(f.out) / "comparison.csv", std::ios::binary) << comparison_csv(components, resources, rows);
    std::ofstream(fs::path(f.out) / "comparison.txt", std::ios::binary) << table;
  }
  return all_ok ? kExitOk : kExitFailure;
}

int cmd_export_mps(const Flags& f, std::ostream& out) {
  RunManifest m;
  apply(f, m);
  if (!f.variants.empty()) m.variant = f.variants.front();
  if (m.out_dir.empty()) throw UsageError("export-mps needs --out");
  const auto s = load_manifest_scenario(m);
  const auto built = formulation::build_model(s);
  const auto exported = milp::export_model(built.model);
  fs::create_directories(m.out_dir);
  const fs::path root(m.out_dir);
  std::ofstream(root / "model.mps", std::ios::binary) << exported.mps;
  std::ofstream(root / "model.names.tsv", std::ios::binary) << exported.names.to_tsv(built.model);
  out << fmt::format("wrote {} ({} variables, {} constraints)\n", (root / "model.mps").string(),
                     built.model.num_variables(), built.model.num_constraints());
  return kExitOk;
}

int cmd_validate(const Flags& f, std::ostream& out) {
  RunManifest m;
  apply(f, m);
  if (!f.variants.empty()) m.variant = f.variants.front();
  const auto s = load_manifest_scenario(m);
  const auto report = park::validate_scenario(s);
  for (const auto& e : report.errors) out << "error: " << e << "\n";
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  for (const auto& n : report.notes) out << "note: " << n << "\n";
  const auto variants = park::list_variants(m.scenario_path);
  out << fmt::format("scenario {}: {} cells, {} streams, {} technologies, {} pipe types\n", s.name,
                     s.topology.cells.size(), s.streams.size(), s.technologies.size(), s.pipes.size());
  std::string list;
  for (const auto& v : variants) list += (list.empty() ? "" : ", ") + v;
  out << "variants: " << (list.empty() ? "none" : list) << "\n";
  out << (report.ok() ? "valid\n" : "invalid\n");
  return report.ok() ? kExitOk : kExitFailure;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Eco-industrial park wastewater network design"};
  app.require_subcommand(1);
  Flags f;
  std::string manifest;
  std::vector<std::string> manifests;
  std::string design;

  auto* solve = app.add_subcommand("solve", "optimise a scenario and write the design and reports");
  solve->add_option("manifest", manifest, "run manifest JSON")->check(CLI::ExistingFile);
  add_scenario_flags(solve, f, false);
  add_solver_flags(solve, f);

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a fixed design");
  evaluate->add_option("design", design, "design JSON")->required();
  add_scenario_flags(evaluate, f, false);

  auto* compare = app.add_subcommand("compare", "solve several runs and tabulate them");
  compare->add_option("manifests", manifests, "run manifest JSON files")->check(CLI::ExistingFile);
  add_scenario_flags(compare, f, true);
  add_solver_flags(compare, f);

  auto* export_mps = app.add_subcommand("export-mps", "write the model as MPS with its name table");
  add_scenario_flags(export_mps, f, false);

  auto* validate = app.add_subcommand("validate", "check a scenario file");
  add_scenario_flags(validate, f, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(manifest, f, out);
    if (*evaluate) return cmd_evaluate(design, f, out);
    if (*compare) return cmd_compare(manifests, f, out);
    if (*export_mps) return cmd_export_mps(f, out);
    if (*validate) return cmd_validate(f, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ecopark::cli
