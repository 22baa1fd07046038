// Design evaluation straight from the model equations. Deliberately shares no
// code with the formulation: distances, trench classes, pipe capacities and
// costs are recomputed here so the two can be checked against each other.

#include "ecopark/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "dense_lp.hpp"

namespace ecopark::evaluator {

namespace {

using park::Scenario;
using Pair = std::pair<std::size_t, std::size_t>;

template <typename T>
std::size_t lookup(const std::vector<T>& items, const std::string& id, const char* what) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].id == id) return i;
  }
  throw EvaluationError(std::string("design references unknown ") + what + " '" + id + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double pipe_capacity(const park::PipeOption& p) {
  return std::numbers::pi * 0.25 * p.diameter * p.diameter * p.design_velocity *
         p.capacity_factor * 86400.0;
}

std::optional<std::size_t> trench_class(const Scenario& s, std::size_t a, std::size_t b) {
  const double rise = std::fabs(s.topology.cells[a].elevation - s.topology.cells[b].elevation);
  const auto& classes = s.topology.elevation_classes;
  std::size_t k = 0;
  while (k < classes.size() && classes[k] < rise - 1e-9) ++k;
  if (k == classes.size()) return std::nullopt;
  return k;
}

std::optional<double> route_cost_idx(const Scenario& s, std::size_t a, std::size_t b,
                                     std::size_t l) {
  if (a == b) return 0.0;
  const auto cls = trench_class(s, a, b);
  if (!cls) return std::nullopt;
  const std::size_t k = *cls;
  const auto& ca = s.topology.cells[a];
  const auto& cb = s.topology.cells[b];
  const auto& p = s.pipes[l];
  const double length = std::hypot(ca.east - cb.east, ca.north - cb.north);
  return (p.install_cost_per_100m[k] + p.pump_cost_per_100m[k]) * length / 100.0;
}

double slack(double tol, double scale) { return tol * std::max(1.0, std::fabs(scale)); }

// Dense view of a design over scenario indices.
struct Indexed {
  std::size_t J = 0, X = 0, M = 0, T = 0;
  std::vector<char> alpha;  // J*X*M
  std::vector<std::size_t> pipes;
  std::vector<double> flow;  // J*X*X*T
  std::optional<std::set<Pair>> pathways;
  std::vector<std::size_t> source;

  char& a(std::size_t j, std::size_t x, std::size_t m) { return alpha[(j * X + x) * M + m]; }
  char a(std::size_t j, std::size_t x, std::size_t m) const { return alpha[(j * X + x) * M + m]; }
  double& fl(std::size_t j, std::size_t x, std::size_t y, std::size_t t) {
    return flow[((j * X + x) * X + y) * T + t];
  }
  double fl(std::size_t j, std::size_t x, std::size_t y, std::size_t t) const {
    return flow[((j * X + x) * X + y) * T + t];
  }
};

Indexed index_design(const Scenario& s, const Design& d) {
  Indexed ix;
  ix.J = s.streams.size();
  ix.X = s.topology.cells.size();
  ix.M = s.technologies.size();
  ix.T = s.time_steps;
  ix.alpha.assign(ix.J * ix.X * ix.M, 0);
  ix.flow.assign(ix.J * ix.X * ix.X * ix.T, 0.0);
  for (const auto& st : s.streams) ix.source.push_back(lookup(s.topology.cells, st.source_cell, "cell"));
  for (const auto& p : d.placements) {
    ix.a(lookup(s.streams, p.stream, "stream"), lookup(s.topology.cells, p.cell, "cell"),
         lookup(s.technologies, p.technology, "technology")) = 1;
  }
  for (const auto& id : d.pipe_types) {
    const std::size_t l = lookup(s.pipes, id, "pipe type");
    if (std::find(ix.pipes.begin(), ix.pipes.end(), l) == ix.pipes.end()) ix.pipes.push_back(l);
  }
  for (const auto& f : d.flows) {
    if (f.step >= ix.T) {
      throw EvaluationError("design flow references step " + std::to_string(f.step) +
                            " beyond the horizon of " + std::to_string(ix.T) + " steps");
    }
    ix.fl(lookup(s.streams, f.stream, "stream"), lookup(s.topology.cells, f.from, "cell"),
          lookup(s.topology.cells, f.to, "cell"), f.step) += f.value;
  }
  if (d.pathways) {
    ix.pathways.emplace();
    for (const auto& [from, to] : *d.pathways) {
      ix.pathways->emplace(lookup(s.topology.cells, from, "cell"), lookup(s.topology.cells, to, "cell"));
    }
  }
  return ix;
}

std::set<Pair> derive_pathways(const Scenario& s, const Indexed& ix) {
  std::set<Pair> out;
  for (std::size_t j = 0; j < ix.J; ++j) {
    const std::size_t src = ix.source[j];
    bool uses_connector = false;
    std::vector<std::size_t> conn_cells, plant_cells;
    for (std::size_t x = 0; x < ix.X; ++x)
      for (std::size_t m = 0; m < ix.M; ++m) {
        if (!ix.a(j, x, m)) continue;
        if (s.technologies[m].is_connector()) {
          uses_connector = true;
          conn_cells.push_back(x);
        } else {
          plant_cells.push_back(x);
        }
      }
    for (std::size_t c : conn_cells) {
      if (c != src) out.emplace(src, c);
      for (std::size_t p : plant_cells)
        if (p != c) out.emplace(c, p);
    }
    if (!uses_connector) {
      for (std::size_t p : plant_cells)
        if (p != src) out.emplace(src, p);
    }
  }
  return out;
}

std::string where(std::initializer_list<std::pair<const char*, std::string>> parts) {
  std::string out;
  for (const auto& [k, v] : parts) {
    if (!out.empty()) out += ", ";
    out += k;
    out += ' ';
    out += v;
  }
  return out;
}

}  // namespace

std::string describe(const Violation& v) {
  return v.family + " at " + v.location + ": " + fmt(v.magnitude) + " " + v.units;
}

double DesignReport::total_discharged(const std::string& component) const {
  double total = 0.0;
  for (const auto& [key, v] : discharged)
    if (key.second == component) total += v;
  return total;
}

double DesignReport::total_removed(const std::string& component) const {
  double total = 0.0;
  for (const auto& [key, v] : removed)
    if (key.second == component) total += v;
  return total;
}

std::optional<double> route_cost(const Scenario& s, const std::string& from, const std::string& to,
                                 const std::string& pipe) {
  return route_cost_idx(s, lookup(s.topology.cells, from, "cell"), lookup(s.topology.cells, to, "cell"),
                        lookup(s.pipes, pipe, "pipe type"));
}

std::vector<std::pair<std::string, std::string>> derived_pathways(const Scenario& s, const Design& d) {
  const Indexed ix = index_design(s, d);
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [a, b] : derive_pathways(s, ix)) {
    out.emplace_back(s.topology.cells[a].id, s.topology.cells[b].id);
  }
  return out;
}

DesignReport evaluate_design(const Scenario& s, const Design& d, double tol) {
  const Indexed ix = index_design(s, d);
  const std::size_t J = ix.J, X = ix.X, M = ix.M, T = ix.T;
  const auto& cells = s.topology.cells;
  const double days = s.step_duration;
  DesignReport rep;
  auto violate = [&](std::string family, std::string location, double magnitude, std::string units) {
    rep.violations.push_back({std::move(family), std::move(location), magnitude, std::move(units)});
  };
  auto cell = [&](std::size_t x) { return cells[x].id; };

  // Binary structure.
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t x = 0; x < X; ++x) {
      int n = 0;
      for (std::size_t m = 0; m < M; ++m) n += ix.a(j, x, m);
      if (n > 1) {
        violate("one_technology", where({{"stream", s.streams[j].id}, {"cell", cell(x)}}), n - 1,
                "count");
      }
    }

  bool inter_cell = false;
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t x = 0; x < X; ++x)
      for (std::size_t y = 0; y < X; ++y)
        for (std::size_t t = 0; t < T; ++t) {
          const double v = ix.fl(j, x, y, t);
          const std::string loc = where({{"stream", s.streams[j].id},
                                            {"arc", cell(x) + "->" + cell(y)},
                                            {"step", std::to_string(t)}});
          if (v < -slack(tol, s.streams[j].flow(t))) violate("negative_flow", loc, -v, "m3/d");
          if (x == y || v <= slack(tol, s.streams[j].flow(t))) continue;
          inter_cell = true;
          if (!s.transport_enabled) violate("transport_disabled", loc, v, "m3/d");
          if (!trench_class(s, x, y)) violate("uncosted_route", loc, v, "m3/d");
        }

  const std::set<Pair> derived = derive_pathways(s, ix);
  const std::set<Pair>& paths = ix.pathways ? *ix.pathways : derived;
  if (ix.pathways) {
    for (const auto& p : derived)
      if (!paths.count(p)) violate("pathway", "missing " + cell(p.first) + "->" + cell(p.second), 1, "count");
    for (const auto& p : paths)
      if (!derived.count(p)) violate("pathway", "unsupported " + cell(p.first) + "->" + cell(p.second), 1, "count");
  }
  for (const auto& [a, b] : paths) rep.pathways.emplace_back(cell(a), cell(b));

  if (ix.pipes.size() > 1) {
    violate("single_pipe_type", std::to_string(ix.pipes.size()) + " pipe types selected",
            static_cast<double>(ix.pipes.size() - 1), "count");
  } else if (ix.pipes.empty() && (inter_cell || !paths.empty())) {
    violate("single_pipe_type", "no pipe type selected for a design with transport", 1, "count");
  }
  const std::optional<std::size_t> pipe =
      ix.pipes.empty() ? std::nullopt : std::optional<std::size_t>(ix.pipes.front());

  for (const auto& [a, b] : paths) {
    if (a == b) continue;
    if (!pipe) continue;
    const auto c = route_cost_idx(s, a, b, *pipe);
    if (!c) {
      violate("uncosted_route", "pathway " + cell(a) + "->" + cell(b), 1, "count");
      continue;
    }
    rep.cost_transport += *c;
  }

  // Installed technologies and capital cost.
  for (std::size_t x = 0; x < X; ++x)
    for (std::size_t m = 0; m < M; ++m) {
      bool any = false;
      for (std::size_t j = 0; j < J; ++j) any = any || ix.a(j, x, m);
      if (any) rep.cost_capex += s.technologies[m].capex;
    }

  const std::size_t P = s.components.size(), R = s.resources.size();
  rep.discharged_per_day.assign(T, {});
  rep.recovered_per_day.assign(T, {});
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> in(J * X, 0.0), out(J * X, 0.0);
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t x = 0; x < X; ++x)
        for (std::size_t y = 0; y < X; ++y) {
          out[j * X + x] += ix.fl(j, x, y, t);
          in[j * X + y] += ix.fl(j, x, y, t);
        }

    for (std::size_t j = 0; j < J; ++j) {
      const auto& st = s.streams[j];
      const double fj = st.flow(t);
      for (std::size_t x = 0; x < X; ++x) {
        const std::string loc = where({{"stream", st.id}, {"cell", cell(x)}, {"step", std::to_string(t)}});
        const double inflow = in[j * X + x];
        if (inflow > fj + slack(tol, fj)) violate("inflow_bound", loc, inflow - fj, "m3/d");
        double relayed = 0.0;
        bool has_connector = false;
        for (std::size_t m = 0; m < M; ++m) {
          if (ix.a(j, x, m) && s.technologies[m].is_connector()) {
            relayed += inflow;
            has_connector = true;
          }
        }
        const double gen = ix.source[j] == x ? fj : 0.0;
        const double o = out[j * X + x];
        if (o > gen + relayed + slack(tol, std::max(gen + relayed, o))) {
          violate("balance", loc, o - gen - relayed, "m3/d");
        }
        if (has_connector && relayed > o + slack(tol, relayed)) {
          violate("throughflow", loc, relayed - o, "m3/d");
        }
      }
    }

    for (std::size_t x = 0; x < X; ++x) {
      for (std::size_t m = 0; m < M; ++m) {
        const auto& cap = s.technologies[m].capacity;
        if (!cap) continue;
        double load = 0.0;
        for (std::size_t j = 0; j < J; ++j)
          if (ix.a(j, x, m)) load += in[j * X + x];
        if (load > *cap + slack(tol, *cap)) {
          violate("capacity",
                  where({{"cell", cell(x)}, {"technology", s.technologies[m].id}, {"step", std::to_string(t)}}),
                  load - *cap, "m3/d");
        }
      }
      double piped = 0.0;
      for (std::size_t j = 0; j < J; ++j)
        for (std::size_t y = 0; y < X; ++y)
          if (y != x) piped += ix.fl(j, x, y, t);
      const double limit = pipe ? pipe_capacity(s.pipes[*pipe]) : 0.0;
      if (piped > limit + slack(tol, limit)) {
        violate("pipe_limit", where({{"cell", cell(x)}, {"step", std::to_string(t)}}), piped - limit, "m3/d");
      }
    }

    // Removal, discharge and recovery, per day.
    for (std::size_t p = 0; p < P; ++p) {
      const std::string& comp = s.components[p];
      double park_discharge = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        const auto& st = s.streams[j];
        const double conc = st.concentration(comp);
        const double gen = st.flow(t) * conc;
        double removed = 0.0;
        for (std::size_t x = 0; x < X; ++x)
          for (std::size_t m = 0; m < M; ++m)
            if (ix.a(j, x, m)) removed += in[j * X + x] * conc * s.technologies[m].removal(comp);
        const double dis = gen - removed;
        if (dis < -slack(tol, gen)) {
          violate("overtreatment",
                  where({{"stream", st.id}, {"component", comp}, {"step", std::to_string(t)}}), -dis,
                  "kg/d");
        }
        const StreamComponent key{st.id, comp};
        rep.generated[key] += gen * days;
        rep.removed[key] += removed * days;
        park_discharge += dis;
        rep.cost_penalty += s.economics.penalty(comp) * dis * days;
      }
      rep.discharged_per_day[t][comp] = park_discharge;
      auto lim = s.economics.discharge_limit.find(comp);
      if (lim != s.economics.discharge_limit.end() &&
          park_discharge > lim->second + slack(tol, lim->second)) {
        violate("discharge_limit", where({{"component", comp}, {"step", std::to_string(t)}}),
                park_discharge - lim->second, "kg/d");
      }
    }
    for (std::size_t r = 0; r < R; ++r) {
      const std::string& res = s.resources[r];
      double rec = 0.0;
      for (std::size_t j = 0; j < J; ++j)
        for (std::size_t x = 0; x < X; ++x)
          for (std::size_t m = 0; m < M; ++m) {
            if (!ix.a(j, x, m)) continue;
            const auto& tech = s.technologies[m];
            for (const auto& comp : s.components) {
              rec += in[j * X + x] * s.streams[j].concentration(comp) * tech.removal(comp) *
                     tech.recovery(res, comp);
            }
          }
      rep.recovered_per_day[t][res] = rec;
      rep.recovered[res] += rec * days;
      rep.revenue += s.economics.price(res) * s.economics.price_factor * rec * days;
    }
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t x = 0; x < X; ++x)
        for (std::size_t m = 0; m < M; ++m)
          if (ix.a(j, x, m)) rep.cost_opex += s.technologies[m].opex * in[j * X + x] * days;
  }
  for (const auto& [key, gen] : rep.generated) rep.discharged[key] = gen - rep.removed[key];
  for (const auto& r : s.resources) rep.recovered.try_emplace(r, 0.0);

  rep.total = rep.cost_transport + rep.cost_capex + rep.cost_opex + rep.cost_penalty - rep.revenue;
  return rep;
}

std::vector<Violation> check_feasibility(const Scenario& s, const Design& d, double tol) {
  return evaluate_design(s, d, tol).violations;
}

// Brute force --------------------------------------------------------------

namespace {

double binomial(double n, double k) {
  double r = 1.0;
  for (double i = 1.0; i <= k; i += 1.0) r = r * (n - k + i) / i;
  return r;
}

// Per-(stream, technology) daily rates.
struct Rates {
  std::vector<std::vector<std::vector<double>>> removal;   // [j][m][p] kg per m3
  std::vector<std::vector<std::vector<double>>> recovery;  // [j][m][r] units per m3
  std::vector<std::vector<double>> coef;                   // [j][m] currency per m3/d over the step
};

Rates rates_of(const Scenario& s) {
  const std::size_t J = s.streams.size(), M = s.technologies.size();
  const std::size_t P = s.components.size(), R = s.resources.size();
  Rates rt;
  rt.removal.assign(J, std::vector<std::vector<double>>(M, std::vector<double>(P, 0.0)));
  rt.recovery.assign(J, std::vector<std::vector<double>>(M, std::vector<double>(R, 0.0)));
  rt.coef.assign(J, std::vector<double>(M, 0.0));
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t m = 0; m < M; ++m) {
      const auto& tech = s.technologies[m];
      double c = tech.opex;
      for (std::size_t p = 0; p < P; ++p) {
        const auto& comp = s.components[p];
        rt.removal[j][m][p] = tech.removal(comp) * s.streams[j].concentration(comp);
        c -= s.economics.penalty(comp) * rt.removal[j][m][p];
        for (std::size_t r = 0; r < R; ++r) {
          rt.recovery[j][m][r] += rt.removal[j][m][p] * tech.recovery(s.resources[r], comp);
        }
      }
      for (std::size_t r = 0; r < R; ++r) {
        c -= s.economics.price(s.resources[r]) * s.economics.price_factor * rt.recovery[j][m][r];
      }
      rt.coef[j][m] = c * s.step_duration;
    }
  return rt;
}

struct Arc {
  std::size_t j, from, to, t;
  double ub;
};

struct PatternLp {
  std::vector<Arc> arcs;
  detail::DenseResult result;
};

// Flow LP for one binary pattern. choice[j*X+x] is 0 for nothing, m+1 for
// technology m. Returns the optimal variable cost (excluding the constant
// penalty on generation) or nothing when infeasible.
std::optional<double> solve_pattern(const Scenario& s, const Rates& rt, const std::vector<std::size_t>& source,
                                    const std::vector<int>& choice, std::size_t pipe, PatternLp& out) {
  const std::size_t J = s.streams.size(), X = s.topology.cells.size(), T = s.time_steps;
  const std::size_t P = s.components.size(), R = s.resources.size();
  const double cap = pipe_capacity(s.pipes[pipe]);
  auto tech = [&](std::size_t j, std::size_t x) { return choice[j * X + x] - 1; };
  auto is_conn = [&](std::size_t j, std::size_t x) {
    const int m = tech(j, x);
    return m >= 0 && s.technologies[static_cast<std::size_t>(m)].is_connector();
  };

  auto& arcs = out.arcs;
  arcs.clear();
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t t = 0; t < T; ++t) {
      const double fj = s.streams[j].flow(t);
      for (std::size_t x = 0; x < X; ++x) {
        const bool origin_conn = is_conn(j, x);
        if (x != source[j] && !origin_conn) continue;  // balance forces zero outflow
        for (std::size_t y = 0; y < X; ++y) {
          // From the source only cells that act on the stream are worth
          // reaching; a connector may also have to dump its throughput.
          if (!origin_conn && tech(j, y) < 0) continue;
          if (x != y && (!s.transport_enabled || !trench_class(s, x, y))) continue;
          arcs.push_back({j, x, y, t, x == y ? fj : std::min(fj, cap)});
        }
      }
    }
  const std::size_t n = arcs.size();

  std::vector<std::vector<double>> a;
  std::vector<double> b;
  auto add_row = [&](std::vector<double> row, double rhs) {
    a.push_back(std::move(row));
    b.push_back(rhs);
  };
  // in(j,x,t) as coefficient vector over arcs.
  auto inflow = [&](std::size_t j, std::size_t x, std::size_t t, double k, std::vector<double>& row) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      if (arcs[i].j == j && arcs[i].to == x && arcs[i].t == t) {
        row[i] += k;
        any = true;
      }
    return any;
  };
  auto outflow = [&](std::size_t j, std::size_t x, std::size_t t, double k, std::vector<double>& row) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      if (arcs[i].j == j && arcs[i].from == x && arcs[i].t == t) {
        row[i] += k;
        any = true;
      }
    return any;
  };

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(n, 0.0);
    row[i] = 1.0;
    add_row(std::move(row), arcs[i].ub);
  }
  std::vector<double> c(n, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < J; ++j) {
      const double fj = s.streams[j].flow(t);
      for (std::size_t x = 0; x < X; ++x) {
        std::vector<double> row(n, 0.0);
        if (inflow(j, x, t, 1.0, row)) add_row(row, fj);
        const int m = tech(j, x);
        if (m >= 0) inflow(j, x, t, rt.coef[j][static_cast<std::size_t>(m)], c);

        std::vector<double> bal(n, 0.0);
        const bool has_out = outflow(j, x, t, 1.0, bal);
        if (is_conn(j, x)) {
          inflow(j, x, t, -1.0, bal);
          std::vector<double> thru(n, 0.0);
          inflow(j, x, t, 1.0, thru);
          outflow(j, x, t, -1.0, thru);
          add_row(std::move(thru), 0.0);
        }
        if (has_out) add_row(std::move(bal), x == source[j] ? fj : 0.0);
      }
      for (std::size_t p = 0; p < P; ++p) {
        std::vector<double> row(n, 0.0);
        bool any = false;
        for (std::size_t x = 0; x < X; ++x) {
          const int m = tech(j, x);
          if (m < 0) continue;
          const double k = rt.removal[j][static_cast<std::size_t>(m)][p];
          if (k != 0.0) any = inflow(j, x, t, k, row) || any;
        }
        if (any) add_row(std::move(row), s.streams[j].flow(t) * s.streams[j].concentration(s.components[p]));
      }
    }
    for (std::size_t x = 0; x < X; ++x) {
      for (std::size_t m = 0; m < s.technologies.size(); ++m) {
        const auto& capacity = s.technologies[m].capacity;
        if (!capacity) continue;
        std::vector<double> row(n, 0.0);
        bool any = false;
        for (std::size_t j = 0; j < J; ++j)
          if (tech(j, x) == static_cast<int>(m)) any = inflow(j, x, t, 1.0, row) || any;
        if (any) add_row(std::move(row), *capacity);
      }
      std::vector<double> row(n, 0.0);
      bool any = false;
      for (std::size_t i = 0; i < n; ++i)
        if (arcs[i].from == x && arcs[i].to != x && arcs[i].t == t) {
          row[i] = 1.0;
          any = true;
        }
      if (any) add_row(std::move(row), cap);
    }
    for (std::size_t p = 0; p < P; ++p) {
      auto lim = s.economics.discharge_limit.find(s.components[p]);
      if (lim == s.economics.discharge_limit.end()) continue;
      std::vector<double> row(n, 0.0);
      double gen = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        gen += s.streams[j].flow(t) * s.streams[j].concentration(s.components[p]);
        for (std::size_t x = 0; x < X; ++x) {
          const int m = tech(j, x);
          if (m >= 0) inflow(j, x, t, -rt.removal[j][static_cast<std::size_t>(m)][p], row);
        }
      }
      add_row(std::move(row), lim->second - gen);
    }
    for (std::size_t r = 0; r < R; ++r) {
      std::vector<double> row(n, 0.0);
      double ub = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        double best = 0.0;
        for (std::size_t m = 0; m < s.technologies.size(); ++m) best = std::max(best, rt.recovery[j][m][r]);
        ub += best * s.streams[j].flow(t);
        for (std::size_t x = 0; x < X; ++x) {
          const int m = tech(j, x);
          if (m >= 0) inflow(j, x, t, rt.recovery[j][static_cast<std::size_t>(m)][r], row);
        }
      }
      add_row(std::move(row), ub);
    }
  }

  out.result = detail::solve_dense_lp(a, b, c);
  if (out.result.status != detail::DenseStatus::kOptimal) return std::nullopt;
  return out.result.objective;
}

// Capital plus pathway cost of a pattern; nothing when a pathway has no
// costed trench class.
std::optional<double> fixed_cost(const Scenario& s, const std::vector<std::size_t>& source,
                                 const std::vector<int>& choice, std::size_t pipe,
                                 std::set<Pair>& paths) {
  const std::size_t J = s.streams.size(), X = s.topology.cells.size(), M = s.technologies.size();
  Indexed ix;
  ix.J = J;
  ix.X = X;
  ix.M = M;
  ix.source = source;
  ix.alpha.assign(J * X * M, 0);
  double capex = 0.0;
  std::vector<char> installed(X * M, 0);
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t x = 0; x < X; ++x) {
      const int m = choice[j * X + x] - 1;
      if (m < 0) continue;
      ix.a(j, x, static_cast<std::size_t>(m)) = 1;
      char& flag = installed[x * M + static_cast<std::size_t>(m)];
      if (!flag) capex += s.technologies[static_cast<std::size_t>(m)].capex;
      flag = 1;
    }
  paths = derive_pathways(s, ix);
  double cost = capex;
  for (const auto& [a, b] : paths) {
    const auto c = route_cost_idx(s, a, b, pipe);
    if (!c) return std::nullopt;
    cost += *c;
  }
  return cost;
}

Design make_design(const Scenario& s, const std::vector<int>& choice, std::size_t pipe,
                   const std::set<Pair>& paths) {
  const std::size_t X = s.topology.cells.size();
  Design d;
  for (std::size_t j = 0; j < s.streams.size(); ++j)
    for (std::size_t x = 0; x < X; ++x) {
      const int m = choice[j * X + x] - 1;
      if (m >= 0) {
        d.placements.push_back({s.streams[j].id, s.topology.cells[x].id,
                                s.technologies[static_cast<std::size_t>(m)].id});
      }
    }
  d.pipe_types.push_back(s.pipes[pipe].id);
  d.pathways.emplace();
  for (const auto& [a, b] : paths) d.pathways->emplace_back(s.topology.cells[a].id, s.topology.cells[b].id);
  return d;
}

// Calls visit(units) for every way to split `total` units over `slots`
// buckets (the last bucket is implicit and takes the remainder).
template <typename F>
void compositions(std::size_t slots, std::size_t total, std::vector<std::size_t>& units, F&& visit) {
  if (units.size() == slots) {
    visit(units);
    return;
  }
  std::size_t used = 0;
  for (std::size_t u : units) used += u;
  for (std::size_t k = 0; used + k <= total; ++k) {
    units.push_back(k);
    compositions(slots, total, units, visit);
    units.pop_back();
  }
}

}  // namespace

double brute_force_evaluations(const Scenario& s, const BruteForceOptions& opts) {
  const double J = static_cast<double>(s.streams.size());
  const double X = static_cast<double>(s.topology.cells.size());
  const double M = static_cast<double>(s.technologies.size());
  double count = static_cast<double>(s.pipes.size()) * std::pow(M + 1.0, J * X);
  if (opts.flow_grid) {
    const double g = static_cast<double>(*opts.flow_grid);
    count *= std::pow(binomial(g + X, X), J * static_cast<double>(s.time_steps));
  }
  return count;
}

BruteForceResult brute_force_optimum(const Scenario& s, const BruteForceOptions& opts) {
  const double estimate = brute_force_evaluations(s, opts);
  if (estimate > opts.max_evaluations) {
    throw EvaluationError("brute force would need about " + fmt(estimate) +
                          " evaluations, above the limit of " + fmt(opts.max_evaluations));
  }
  const std::size_t J = s.streams.size(), X = s.topology.cells.size(), M = s.technologies.size();
  const std::size_t T = s.time_steps;
  std::vector<std::size_t> source;
  for (const auto& st : s.streams) source.push_back(lookup(s.topology.cells, st.source_cell, "cell"));
  const Rates rt = rates_of(s);

  double base_penalty = 0.0;
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t t = 0; t < T; ++t)
      for (const auto& comp : s.components) {
        base_penalty += s.economics.penalty(comp) * s.streams[j].flow(t) *
                        s.streams[j].concentration(comp) * s.step_duration;
      }
  // Plants of one stream jointly take at most its generation, so the flow
  // cost is bounded below by the cheapest per-m3 coefficient. Connectors can
  // circulate flow; the bound holds only while they cost nothing negative.
  double var_floor = 0.0;
  bool prune = true;
  for (std::size_t j = 0; j < J; ++j) {
    double best = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      if (s.technologies[m].is_connector() && rt.coef[j][m] < 0.0) prune = false;
      best = std::min(best, rt.coef[j][m]);
    }
    for (std::size_t t = 0; t < T; ++t) var_floor += best * s.streams[j].flow(t);
  }

  BruteForceResult res;
  double best = std::numeric_limits<double>::infinity();
  auto better = [&](double v) {
    return !std::isfinite(best) || v < best - 1e-9 * std::max(1.0, std::fabs(best));
  };
  Design best_design;

  std::vector<int> choice(J * X, 0);
  PatternLp lp;
  std::set<Pair> paths;
  for (std::size_t l = 0; l < s.pipes.size(); ++l) {
    std::fill(choice.begin(), choice.end(), 0);
    for (;;) {
      ++res.patterns;
      const auto fixed = fixed_cost(s, source, choice, l, paths);
      if (fixed && !(prune && !better(*fixed + base_penalty + var_floor))) {
        bool has_connector = false;
        for (std::size_t i = 0; i < choice.size(); ++i)
          if (choice[i] > 0 && s.technologies[static_cast<std::size_t>(choice[i] - 1)].is_connector())
            has_connector = true;
        if (!opts.flow_grid) {
          ++res.evaluated;
          if (auto v = solve_pattern(s, rt, source, choice, l, lp)) {
            const double total = *fixed + base_penalty + *v;
            if (better(total)) {
              best = total;
              best_design = make_design(s, choice, l, paths);
              for (std::size_t i = 0; i < lp.arcs.size(); ++i) {
                const double f = lp.result.x[i];
                if (f <= 1e-12) continue;
                const Arc& a = lp.arcs[i];
                best_design.flows.push_back({s.streams[a.j].id, s.topology.cells[a.from].id,
                                             s.topology.cells[a.to].id, a.t, f});
              }
            }
          }
        } else if (!has_connector) {
          // Each (stream, step) splits its generation over the cells holding
          // a plant for it; the remainder is discharged untreated.
          std::vector<std::vector<std::size_t>> dest(J);
          for (std::size_t j = 0; j < J; ++j)
            for (std::size_t x = 0; x < X; ++x)
              if (choice[j * X + x] > 0) dest[j].push_back(x);
          const std::size_t g = *opts.flow_grid;
          Design base = make_design(s, choice, l, paths);
          std::vector<std::vector<std::size_t>> split;
          std::function<void(std::size_t)> rec = [&](std::size_t slot) {
            if (slot == J * T) {
              ++res.evaluated;
              Design d = base;
              for (std::size_t q = 0; q < J * T; ++q) {
                const std::size_t j = q / T, t = q % T;
                for (std::size_t k = 0; k < dest[j].size(); ++k) {
                  if (split[q][k] == 0) continue;
                  const double f = s.streams[j].flow(t) * static_cast<double>(split[q][k]) / static_cast<double>(g);
                  d.flows.push_back({s.streams[j].id, s.topology.cells[source[j]].id,
                                     s.topology.cells[dest[j][k]].id, t, f});
                }
              }
              const DesignReport rep = evaluate_design(s, d);
              if (rep.feasible() && better(rep.total)) {
                best = rep.total;
                best_design = std::move(d);
              }
              return;
            }
            std::vector<std::size_t> units;
            compositions(dest[slot / T].size(), g, units, [&](const std::vector<std::size_t>& u) {
              split.push_back(u);
              rec(slot + 1);
              split.pop_back();
            });
          };
          rec(0);
        }
      }
      // Odometer over technology choices.
      std::size_t i = 0;
      while (i < choice.size() && choice[i] == static_cast<int>(M)) choice[i++] = 0;
      if (i == choice.size()) break;
      ++choice[i];
    }
  }

  if (!std::isfinite(best)) return res;
  best_design = formulation::normalized(std::move(best_design));
  const DesignReport rep = evaluate_design(s, best_design, 1e-6);
  if (!rep.feasible()) {
    throw EvaluationError("brute-force optimum fails evaluation: " + describe(rep.violations.front()));
  }
  res.design = std::move(best_design);
  res.objective = rep.total;
  res.feasible = true;
  return res;
}

}  // namespace ecopark::evaluator
