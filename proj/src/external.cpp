#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ecopark/solver.hpp"

namespace ecopark::solver {

namespace {

namespace fs = std::filesystem;

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw SolverError("cannot read '" + p.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw SolverError("cannot write '" + p.string() + "'");
  out << text;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

fs::path fresh_dir() {
  static std::atomic<int> counter{0};
  const fs::path dir = fs::temp_directory_path() /
                       ("ecopark-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

SolveResult solve_external(const milp::MilpModel& model, const ExternalOptions& options) {
  if (options.command.empty()) throw SolverError("external solver command is empty");
  const auto start = std::chrono::steady_clock::now();

  const fs::path dir = options.work_dir.empty() ? fresh_dir() : fs::path(options.work_dir);
  fs::create_directories(dir);
  const fs::path mps_path = dir / "model.mps";
  const fs::path names_path = dir / "model.names.tsv";
  fs::path sol_path = mps_path;
  sol_path += ".sol";

  const milp::MpsExport exported = milp::export_model(model);
  write_text(mps_path, exported.mps);
  write_text(names_path, exported.names.to_tsv(model));
  std::error_code ec;
  fs::remove(sol_path, ec);

  const std::string cmd = options.command + " " + shell_quote(mps_path.string());
  const int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc) || WEXITSTATUS(rc) != 0) {
    throw SolverError("external solver command failed (status " + std::to_string(rc) +
                      "): " + cmd);
  }
  if (!fs::exists(sol_path)) {
    throw SolverError("external solver wrote no solution file '" + sol_path.string() + "'");
  }

  const milp::ImportedSolution imported =
      milp::import_solution(model, read_text(sol_path), &exported.names);

  SolveResult result;
  result.diagnostics = imported.warnings;
  std::vector<double> x = imported.values;
  for (const auto& v : model.variables()) {
    if (v.kind == milp::VarKind::kBinary) {
      auto& xv = x[static_cast<std::size_t>(v.id.index)];
      if (std::fabs(xv - std::round(xv)) <= 1e-6) xv = std::round(xv);
    }
  }

  std::vector<std::string> problems;
  for (const auto& viol : model.violations(x, options.feasibility_tol)) {
    problems.push_back(viol.tag + " '" + viol.name + "' off by " + milp::format_number(viol.magnitude));
  }
  if (problems.empty() && options.verifier) problems = options.verifier(x);
  if (!problems.empty()) {
    std::string msg = "external solution rejected:";
    const std::size_t shown = std::min<std::size_t>(problems.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) msg += "\n  " + problems[i];
    if (problems.size() > shown) {
      msg += "\n  ... " + std::to_string(problems.size() - shown) + " more";
    }
    throw SolverError(msg);
  }

  result.objective = model.objective_value(x);
  result.incumbent = std::move(x);
  result.status = SolveStatus::kFeasible;
  result.nodes_explored = 0;
  if (options.reference_bound) {
    const double bound = *options.reference_bound;
    const double scale = std::max(std::fabs(result.objective), 1.0);
    if (result.objective < bound - options.rel_gap * scale) {
      result.diagnostics.push_back("inconsistent: external objective " +
                                   milp::format_number(result.objective) +
                                   " lies below the internal bound " + milp::format_number(bound));
    } else if (result.objective - bound > options.rel_gap * scale) {
      result.diagnostics.push_back("suspicious: external objective " +
                                   milp::format_number(result.objective) +
                                   " is worse than the internal bound " +
                                   milp::format_number(bound));
    } else {
      result.status = SolveStatus::kOptimal;
    }
    result.best_bound = std::min(bound, result.objective);
    result.gap = relative_gap(result.objective, result.best_bound);
  }
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace ecopark::solver
