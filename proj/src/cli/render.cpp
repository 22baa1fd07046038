#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ecopark/cli.hpp"
#include "json.hpp"

namespace ecopark::cli {

namespace {

using nlohmann::json;

constexpr int kReportSchemaVersion = 1;

// Fixed formatting so reports compare byte for byte across runs.
std::string num(double v) {
  if (v == 0.0) return "0";
  return fmt::format("{:.10g}", v);
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string status_name(solver::SolveStatus s) { return solver::to_string(s); }

}  // namespace

std::string report_to_json(const park::Scenario& s, const std::string& variant,
                           const evaluator::DesignReport& r, const SolverSummary* solver) {
  json out;
  out["schema_version"] = kReportSchemaVersion;
  out["scenario"] = s.name;
  out["variant"] = variant;
  out["currency"] = s.currency;
  out["horizon_days"] = s.horizon_days();
  out["feasible"] = r.feasible();
  out["costs"] = {{"transport", r.cost_transport}, {"capex", r.cost_capex},   {"opex", r.cost_opex},
                  {"penalty", r.cost_penalty},     {"revenue", r.revenue},    {"total", r.total}};

  json mass = json::array();
  for (const auto& [key, gen] : r.generated) {
    mass.push_back({{"stream", key.first},
                    {"component", key.second},
                    {"generated_kg", gen},
                    {"removed_kg", r.removed.at(key)},
                    {"discharged_kg", r.discharged.at(key)}});
  }
  out["mass_balance"] = std::move(mass);
  json totals = json::object();
  for (const auto& c : s.components) {
    totals[c] = {{"removed_kg", r.total_removed(c)}, {"discharged_kg", r.total_discharged(c)}};
  }
  out["component_totals"] = std::move(totals);
  out["recovered"] = r.recovered;

  json paths = json::array();
  for (const auto& [a, b] : r.pathways) paths.push_back({a, b});
  out["pathways"] = std::move(paths);

  json viol = json::array();
  for (const auto& v : r.violations) {
    viol.push_back({{"family", v.family}, {"location", v.location}, {"magnitude", v.magnitude}, {"units", v.units}});
  }
  out["violations"] = std::move(viol);

  if (solver != nullptr) {
    out["solver"] = {{"status", status_name(solver->status)},
                     {"objective", solver->objective},
                     {"best_bound", solver->best_bound},
                     {"gap", solver->gap},
                     {"nodes", solver->nodes},
                     {"lp_iterations", solver->lp_iterations},
                     {"diagnostics", solver->diagnostics}};
  }
  return out.dump(2) + "\n";
}

std::string costs_csv(const park::Scenario& s, const evaluator::DesignReport& r) {
  std::string out = "item,amount_" + s.currency + "\n";
  out += "transport," + num(r.cost_transport) + "\n";
  out += "capex," + num(r.cost_capex) + "\n";
  out += "opex," + num(r.cost_opex) + "\n";
  out += "discharge_penalty," + num(r.cost_penalty) + "\n";
  out += "revenue," + num(-r.revenue) + "\n";
  out += "total," + num(r.total) + "\n";
  return out;
}

std::string series_csv(const park::Scenario& s, const evaluator::DesignReport& r) {
  std::string out = "step,start_day,end_day";
  for (const auto& c : s.components) out += ",discharged_" + c + "_kg_per_day";
  for (const auto& res : s.resources) out += ",recovered_" + res + "_per_day";
  out += "\n";
  for (std::size_t t = 0; t < s.time_steps; ++t) {
    out += fmt::format("{},{},{}", t, num(static_cast<double>(t) * s.step_duration),
                       num(static_cast<double>(t + 1) * s.step_duration));
    for (const auto& c : s.components) {
      const auto& row = r.discharged_per_day.at(t);
      auto it = row.find(c);
      out += "," + num(it == row.end() ? 0.0 : it->second);
    }
    for (const auto& res : s.resources) {
      const auto& row = r.recovered_per_day.at(t);
      auto it = row.find(res);
      out += "," + num(it == row.end() ? 0.0 : it->second);
    }
    out += "\n";
  }
  return out;
}

// Cells are laid out by centroid: distinct east values are columns and
// distinct north values rows, north at the top.
std::string layout_text(const park::Scenario& s, const formulation::Design& d) {
  const auto& cells = s.topology.cells;
  std::set<double> easts, norths;
  for (const auto& c : cells) {
    easts.insert(c.east);
    norths.insert(c.north);
  }
  const std::vector<double> cols(easts.begin(), easts.end());
  const std::vector<double> rows(norths.rbegin(), norths.rend());

  std::map<std::string, std::vector<std::string>> lines;  // by cell id
  for (const auto& c : cells) lines[c.id].push_back(fmt::format("{} ({} m)", c.id, num(c.elevation)));
  for (const auto& w : s.streams) lines[w.source_cell].push_back("src " + w.id);
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> served;
  for (const auto& p : d.placements) served[{p.cell, p.technology}].push_back(p.stream);
  for (const auto& [key, streams] : served) {
    const bool connector = s.technologies[s.technology_index(key.second)].is_connector();
    lines[key.first].push_back((connector ? "relay " : "plant ") + key.second + ": " + join(streams, ","));
  }

  std::size_t width = 8, height = 1;
  for (const auto& [id, ls] : lines) {
    height = std::max(height, ls.size());
    for (const auto& l : ls) width = std::max(width, l.size());
  }
  const std::string rule = [&] {
    std::string r = "+";
    for (std::size_t i = 0; i < cols.size(); ++i) r += std::string(width + 2, '-') + "+";
    return r + "\n";
  }();

  std::string out = rule;
  for (double north : rows) {
    for (std::size_t k = 0; k < height; ++k) {
      out += "|";
      for (double east : cols) {
        std::string text;
        for (const auto& c : cells) {
          if (c.east == east && c.north == north && k < lines[c.id].size()) text = lines[c.id][k];
        }
        out += " " + text + std::string(width - text.size(), ' ') + " |";
      }
      out += "\n";
    }
    out += rule;
  }

  out += "pipe type: " + (d.pipe_types.empty() ? std::string("none") : join(d.pipe_types, ",")) + "\n";
  const auto paths = d.pathways ? *d.pathways : evaluator::derived_pathways(s, d);
  if (paths.empty()) {
    out += "pathways: none\n";
  } else {
    out += "pathways:\n";
    for (const auto& [a, b] : paths) {
      std::string cost;
      if (d.pipe_types.size() == 1) {
        if (auto c = evaluator::route_cost(s, a, b, d.pipe_types.front())) cost = ", cost " + num(*c);
      }
      out += fmt::format("  {} -> {} ({} m{})\n", a, b, num(park::cell_distance(s.topology, a, b)), cost);
    }
  }
  return out;
}

std::string layout_csv(const park::Scenario& s, const formulation::Design& d) {
  std::string out = "kind,stream,technology,from,to,from_east,from_north,to_east,to_north\n";
  auto cell = [&](const std::string& id) -> const park::Cell& {
    return s.topology.cells[s.topology.index_of(id)];
  };
  for (const auto& w : s.streams) {
    const auto& c = cell(w.source_cell);
    out += fmt::format("source,{},,{},{},{},{},{},{}\n", w.id, c.id, c.id, num(c.east), num(c.north),
                       num(c.east), num(c.north));
  }
  for (const auto& p : d.placements) {
    const auto& c = cell(p.cell);
    out += fmt::format("placement,{},{},{},{},{},{},{},{}\n", p.stream, p.technology, c.id, c.id,
                       num(c.east), num(c.north), num(c.east), num(c.north));
  }
  const auto paths = d.pathways ? *d.pathways : evaluator::derived_pathways(s, d);
  const std::string pipe = d.pipe_types.size() == 1 ? d.pipe_types.front() : "";
  for (const auto& [a, b] : paths) {
    const auto& ca = cell(a);
    const auto& cb = cell(b);
    out += fmt::format("pathway,,{},{},{},{},{},{},{}\n", pipe, a, b, num(ca.east), num(ca.north),
                       num(cb.east), num(cb.north));
  }
  return out;
}

std::string violation_table(const std::vector<evaluator::Violation>& v) {
  if (v.empty()) return "no violations\n";
  std::size_t wf = 6, wl = 8;
  for (const auto& x : v) {
    wf = std::max(wf, x.family.size());
    wl = std::max(wl, x.location.size());
  }
  std::string out = fmt::format("{:<{}}  {:<{}}  {:>14}  {}\n", "family", wf, "location", wl, "magnitude", "units");
  for (const auto& x : v) {
    out += fmt::format("{:<{}}  {:<{}}  {:>14.6g}  {}\n", x.family, wf, x.location, wl, x.magnitude, x.units);
  }
  return out;
}

namespace {

std::string relative(double value, double base) {
  if (base == 0.0) return value == 0.0 ? "0%" : "n/a";
  return fmt::format("{:+.1f}%", 100.0 * (value - base) / std::fabs(base));
}

const ComparisonRow* first_ok(const std::vector<ComparisonRow>& rows) {
  for (const auto& r : rows)
    if (r.ok) return &r;
  return nullptr;
}

}  // namespace

std::string comparison_table(const std::vector<std::string>& components,
                             const std::vector<std::string>& resources,
                             const std::vector<ComparisonRow>& rows) {
  std::vector<std::string> head{"run", "status", "total_cost", "d_cost"};
  for (const auto& c : components) {
    head.push_back(c + "_dis_t");
    head.push_back("d_" + c);
  }
  for (const auto& r : resources) head.push_back(r + "_rec");

  const ComparisonRow* base = first_ok(rows);
  std::vector<std::vector<std::string>> body;
  for (const auto& row : rows) {
    std::vector<std::string> cells{row.label, row.status};
    if (!row.ok) {
      cells.resize(head.size(), "-");
    } else {
      cells.push_back(fmt::format("{:.6g}", row.total));
      cells.push_back(relative(row.total, base->total));
      for (std::size_t c = 0; c < components.size(); ++c) {
        cells.push_back(fmt::format("{:.6g}", row.discharged_t[c]));
        cells.push_back(relative(row.discharged_t[c], base->discharged_t[c]));
      }
      for (std::size_t r = 0; r < resources.size(); ++r) cells.push_back(fmt::format("{:.6g}", row.recovered[r]));
    }
    body.push_back(std::move(cells));
  }

  std::vector<std::size_t> width(head.size());
  for (std::size_t i = 0; i < head.size(); ++i) {
    width[i] = head[i].size();
    for (const auto& b : body) width[i] = std::max(width[i], b[i].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out += i < 2 ? fmt::format("{:<{}}", cells[i], width[i]) : fmt::format("{:>{}}", cells[i], width[i]);
      out += i + 1 < cells.size() ? "  " : "\n";
    }
    return out;
  };
  std::string out = line(head);
  for (const auto& b : body) out += line(b);
  return out;
}

std::string comparison_csv(const std::vector<std::string>& components,
                           const std::vector<std::string>& resources,
                           const std::vector<ComparisonRow>& rows) {
  std::string out = "run,status,total_cost,rel_cost";
  for (const auto& c : components) out += "," + c + "_discharged_t,rel_" + c;
  for (const auto& r : resources) out += "," + r + "_recovered";
  out += "\n";
  const ComparisonRow* base = first_ok(rows);
  auto rel = [](double v, double b) { return b == 0.0 ? std::string() : num((v - b) / std::fabs(b)); };
  for (const auto& row : rows) {
    out += row.label + "," + row.status;
    if (!row.ok) {
      out += std::string(2 + 2 * components.size() + resources.size(), ',');
      out += "\n";
      continue;
    }
    out += "," + num(row.total) + "," + rel(row.total, base->total);
    for (std::size_t c = 0; c < components.size(); ++c) {
      out += "," + num(row.discharged_t[c]) + "," + rel(row.discharged_t[c], base->discharged_t[c]);
    }
    for (std::size_t r = 0; r < resources.size(); ++r) out += "," + num(row.recovered[r]);
    out += "\n";
  }
  return out;
}

}  // namespace ecopark::cli
