// Stand-alone MILP solver over MPS files. Follows the external-solver
// contract: `ecopark-mps-solve model.mps` writes `model.mps.sol`.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ecopark/milp_core.hpp"
#include "ecopark/solver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Solve an MPS model with the built-in branch-and-bound"};
  std::string path;
  std::string names_path;
  double gap = 1e-6;
  double time_limit = 1e9;
  bool relax = false;
  bool quiet = false;
  app.add_option("mps", path, "MPS file")->required()->check(CLI::ExistingFile);
  app.add_option("--names", names_path, "name table (tab separated) for readable output");
  app.add_option("--gap", gap, "relative optimality gap");
  app.add_option("--time-limit", time_limit, "seconds");
  app.add_flag("--relax", relax, "solve the LP relaxation only");
  app.add_flag("--quiet", quiet, "no summary on stdout");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    std::optional<ecopark::milp::NameTable> names;
    if (!names_path.empty()) {
      std::ifstream nin(names_path, std::ios::binary);
      std::ostringstream ntext;
      ntext << nin.rdbuf();
      names = ecopark::milp::NameTable::from_tsv(ntext.str());
    }
    // Output keeps the names found in the file so the caller's table applies.
    const auto model = ecopark::milp::read_mps(text.str());

    std::vector<double> x;
    std::string status;
    double objective = 0.0;
    if (relax) {
      const auto lp = ecopark::solver::solve_lp(model);
      status = ecopark::solver::to_string(lp.status);
      if (lp.status != ecopark::solver::LpStatus::kOptimal) {
        std::cerr << "LP " << status << "\n";
        return 1;
      }
      x = lp.x;
      objective = lp.objective;
    } else {
      ecopark::solver::SolveOptions opts;
      opts.rel_gap = gap;
      opts.time_limit = time_limit;
      const auto res = ecopark::solver::solve_milp(model, opts);
      status = ecopark::solver::to_string(res.status);
      if (!res.incumbent) {
        std::cerr << "no solution: " << status << "\n";
        return 1;
      }
      x = *res.incumbent;
      objective = res.objective;
    }
    std::ofstream out(path + ".sol", std::ios::binary);
    out << ecopark::milp::format_solution(model, x);
    if (!quiet) {
      std::cout << "status " << status << "\nobjective " << ecopark::milp::format_number(objective)
                << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
