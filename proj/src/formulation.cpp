#include "ecopark/formulation.hpp"

#include <algorithm>
#include <cmath>

#include "ecopark/evaluator.hpp"

namespace ecopark::formulation {

namespace {

using milp::Sense;
using milp::Term;
using milp::VarId;
using park::Scenario;

constexpr int kPriorityDecision = 2;
constexpr int kPriorityInstall = 1;

struct Sets {
  std::size_t J, X, M, L, T, P, R;
  std::vector<std::size_t> plants;
  std::vector<std::size_t> connectors;
  std::vector<std::size_t> source;  // cell index per stream
};

Sets sets_of(const Scenario& s) {
  Sets z{s.streams.size(), s.topology.cells.size(), s.technologies.size(), s.pipes.size(),
         s.time_steps, s.components.size(), s.resources.size(), {}, {}, {}};
  for (std::size_t m = 0; m < z.M; ++m) {
    (s.technologies[m].is_connector() ? z.connectors : z.plants).push_back(m);
  }
  for (const auto& st : s.streams) z.source.push_back(s.topology.index_of(st.source_cell));
  return z;
}

SemanticKey key(Family f, int a = -1, int b = -1, int c = -1, int d = -1) {
  return SemanticKey{f, {a, b, c, d}};
}

template <typename... I>
SemanticKey k(Family f, I... i) {
  return key(f, static_cast<int>(i)...);
}

bool pair_priced(const Scenario& s, std::size_t x, std::size_t x2) {
  return park::try_elevation_class(s.topology, x, x2).has_value();
}

double best_pipe_flow(const Scenario& s) {
  double best = 0.0;
  for (const auto& p : s.pipes) best = std::max(best, p.max_flow());
  return best;
}

// Resource units recovered per m3 of stream j treated by technology m.
double recovery_per_m3(const Scenario& s, std::size_t j, std::size_t m, std::size_t r) {
  const auto& tech = s.technologies[m];
  double v = 0.0;
  for (const auto& p : s.components) {
    v += tech.recovery(s.resources[r], p) * tech.removal(p) * s.streams[j].concentration(p);
  }
  return v;
}

std::string nm(std::string_view base, std::initializer_list<std::string_view> parts) {
  std::string out(base);
  out += '[';
  bool first = true;
  for (auto p : parts) {
    if (!first) out += ',';
    out += p;
    first = false;
  }
  out += ']';
  return out;
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::kAlpha: return "alpha";
    case Family::kUpsilon: return "upsilon";
    case Family::kOmega: return "omega";
    case Family::kDelta: return "delta";
    case Family::kEpsilon: return "epsilon";
    case Family::kFlow: return "flow";
    case Family::kInflow: return "inflow";
    case Family::kTreated: return "treated";
    case Family::kKappa: return "kappa";
    case Family::kZeta: return "zeta";
    case Family::kPhi: return "phi";
    case Family::kPi: return "pi";
    case Family::kGamma: return "gamma";
    case Family::kPathway: return "pathway";
    case Family::kPipePathway: return "pipe_pathway";
    case Family::kDischarge: return "discharge";
    case Family::kRecovered: return "recovered";
  }
  return "unknown";
}

// VariableIndex -------------------------------------------------------------

VariableIndex::VariableIndex(const Dims& dims) : dims_(dims) {}

void VariableIndex::put(const SemanticKey& key, VarId id) {
  if (!by_key_.emplace(key, id).second) {
    throw FormulationError("semantic key registered twice in family " + family_name(key.family));
  }
  const auto i = static_cast<std::size_t>(id.index);
  if (by_id_.size() <= i) by_id_.resize(i + 1, SemanticKey{Family::kAlpha, {-2, -2, -2, -2}});
  by_id_[i] = key;
  ++counts_[static_cast<std::size_t>(key.family)];
}

std::optional<VarId> VariableIndex::find(const SemanticKey& key) const {
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

VarId VariableIndex::at(const SemanticKey& key) const {
  auto v = find(key);
  if (!v) throw FormulationError("no variable registered for a " + family_name(key.family) + " key");
  return *v;
}

const SemanticKey& VariableIndex::key_of(VarId id) const {
  const auto i = static_cast<std::size_t>(id.index);
  if (i >= by_id_.size() || by_id_[i].index[0] == -2) {
    throw FormulationError("variable id " + std::to_string(id.index) + " has no semantic key");
  }
  return by_id_[i];
}

std::size_t VariableIndex::count(Family f) const { return counts_[static_cast<std::size_t>(f)]; }

std::optional<VarId> VariableIndex::alpha(std::size_t j, std::size_t x, std::size_t m) const {
  return find(k(Family::kAlpha, j, x, m));
}
std::optional<VarId> VariableIndex::upsilon(std::size_t j, std::size_t x) const {
  return find(k(Family::kUpsilon, j, x));
}
std::optional<VarId> VariableIndex::omega(std::size_t x, std::size_t m) const {
  return find(k(Family::kOmega, x, m));
}
std::optional<VarId> VariableIndex::delta(std::size_t l) const { return find(k(Family::kDelta, l)); }
std::optional<VarId> VariableIndex::epsilon(std::size_t j) const {
  return find(k(Family::kEpsilon, j));
}
std::optional<VarId> VariableIndex::flow(std::size_t j, std::size_t x, std::size_t x2,
                                         std::size_t t) const {
  return find(k(Family::kFlow, j, x, x2, t));
}
std::optional<VarId> VariableIndex::inflow(std::size_t j, std::size_t x, std::size_t t) const {
  return find(k(Family::kInflow, j, x, t));
}
std::optional<VarId> VariableIndex::treated(std::size_t j, std::size_t x, std::size_t m,
                                            std::size_t t) const {
  return find(k(Family::kTreated, j, x, m, t));
}
std::optional<VarId> VariableIndex::pathway(std::size_t x, std::size_t x2) const {
  return find(k(Family::kPathway, x, x2));
}
std::optional<VarId> VariableIndex::discharge(std::size_t j, std::size_t p, std::size_t t) const {
  return find(k(Family::kDischarge, j, p, t));
}
std::optional<VarId> VariableIndex::recovered(std::size_t r, std::size_t t) const {
  return find(k(Family::kRecovered, r, t));
}

std::map<std::string, std::size_t> expected_variable_counts(const Scenario& s) {
  const std::size_t J = s.streams.size(), X = s.topology.cells.size(),
                    M = s.technologies.size(), L = s.pipes.size(), T = s.time_steps,
                    P = s.components.size(), R = s.resources.size();
  std::size_t C = 0;
  for (const auto& m : s.technologies) C += m.is_connector() ? 1 : 0;
  const std::size_t pairs = X * (X - 1);
  const bool conn = C > 0;
  return {
      {"alpha", J * X * M},       {"upsilon", J * X},
      {"omega", X * M},           {"delta", L},
      {"epsilon", conn ? J : 0},  {"flow", J * X * X * T},
      {"inflow", J * X * T},      {"treated", J * X * M * T},
      {"kappa", conn ? J * pairs : 0},
      {"zeta", conn ? J * (X - 1) : 0},
      {"phi", conn ? pairs : 0},  {"pi", conn ? pairs : 0},
      {"gamma", pairs},           {"pathway", pairs},
      {"pipe_pathway", L * pairs}, {"discharge", J * P * T},
      {"recovered", R * T},
  };
}

VariableIndex::Audit VariableIndex::audit(const Scenario& s, const milp::MilpModel& model) const {
  Audit a;
  a.model_variables = model.num_variables();
  for (std::size_t f = 0; f < kFamilyCount; ++f) {
    a.registered[family_name(static_cast<Family>(f))] = counts_[f];
  }
  a.expected = expected_variable_counts(s);
  bool ok = by_key_.size() == model.num_variables() && by_id_.size() == model.num_variables();
  if (ok) {
    for (const auto& [key, id] : by_key_) {
      const auto i = static_cast<std::size_t>(id.index);
      if (i >= by_id_.size() || by_id_[i] != key) {
        ok = false;
        break;
      }
    }
  }
  a.bijective = ok;
  return a;
}

// Builders ------------------------------------------------------------------

double pipe_cost_coefficient(const Scenario& s, std::size_t from, std::size_t to, std::size_t pipe) {
  auto c = park::pipe_cost(s, from, to, pipe);
  if (!c) {
    throw FormulationError("no trench class covers the elevation change between '" +
                           s.topology.cells[from].id + "' and '" + s.topology.cells[to].id + "'");
  }
  return *c;
}

VariableIndex declare_variables(const Scenario& s, milp::MilpModel& model) {
  const Sets z = sets_of(s);
  VariableIndex idx({z.J, z.X, z.M, z.L, z.T, z.P, z.R});
  const auto& cells = s.topology.cells;
  const double best_pipe = best_pipe_flow(s);
  const bool conn = !z.connectors.empty();

  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t x = 0; x < z.X; ++x)
      for (std::size_t m = 0; m < z.M; ++m)
        idx.put(k(Family::kAlpha, j, x, m),
                model.add_binary(nm("alpha", {s.streams[j].id, cells[x].id, s.technologies[m].id}),
                                 kPriorityDecision));
  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t x = 0; x < z.X; ++x)
      idx.put(k(Family::kUpsilon, j, x),
              model.add_binary(nm("upsilon", {s.streams[j].id, cells[x].id})));
  for (std::size_t x = 0; x < z.X; ++x)
    for (std::size_t m = 0; m < z.M; ++m)
      idx.put(k(Family::kOmega, x, m),
              model.add_binary(nm("omega", {cells[x].id, s.technologies[m].id}), kPriorityInstall));
  for (std::size_t l = 0; l < z.L; ++l)
    idx.put(k(Family::kDelta, l), model.add_binary(nm("delta", {s.pipes[l].id}), kPriorityDecision));
  if (conn) {
    for (std::size_t j = 0; j < z.J; ++j)
      idx.put(k(Family::kEpsilon, j), model.add_binary(nm("epsilon", {s.streams[j].id})));
  }
  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t x = 0; x < z.X; ++x)
      for (std::size_t x2 = 0; x2 < z.X; ++x2)
        for (std::size_t t = 0; t < z.T; ++t) {
          const double fj = s.streams[j].flow(t);
          double ub = fj;
          if (x != x2) {
            ub = s.transport_enabled && pair_priced(s, x, x2) ? std::min(fj, best_pipe) : 0.0;
          }
          idx.put(k(Family::kFlow, j, x, x2, t),
                  model.add_continuous(nm("fl", {s.streams[j].id, cells[x].id, cells[x2].id,
                                                 std::to_string(t)}),
                                       0.0, ub));
        }
  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t x = 0; x < z.X; ++x)
      for (std::size_t t = 0; t < z.T; ++t)
        idx.put(k(Family::kInflow, j, x, t),
                model.add_continuous(nm("in", {s.streams[j].id, cells[x].id, std::to_string(t)}),
                                     0.0, s.streams[j].flow(t)));

  auto pair_family = [&](Family f, const char* base) {
    for (std::size_t x = 0; x < z.X; ++x)
      for (std::size_t x2 = 0; x2 < z.X; ++x2) {
        if (x == x2) continue;
        idx.put(k(f, x, x2), model.add_binary(nm(base, {cells[x].id, cells[x2].id})));
      }
  };
  if (conn) {
    pair_family(Family::kPhi, "phi");
    pair_family(Family::kPi, "pi");
  }
  pair_family(Family::kGamma, "gamma");
  pair_family(Family::kPathway, "path");
  for (std::size_t x = 0; x < z.X; ++x)
    for (std::size_t x2 = 0; x2 < z.X; ++x2)
      if (x != x2 && !pair_priced(s, x, x2)) {
        model.set_bounds(idx.at(k(Family::kPathway, x, x2)), 0.0, 0.0);
      }

  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t p = 0; p < z.P; ++p)
      for (std::size_t t = 0; t < z.T; ++t)
        idx.put(k(Family::kDischarge, j, p, t),
                model.add_continuous(
                    nm("dis", {s.streams[j].id, s.components[p], std::to_string(t)}), 0.0,
                    s.generation(j, p, t)));
  for (std::size_t r = 0; r < z.R; ++r)
    for (std::size_t t = 0; t < z.T; ++t) {
      double ub = 0.0;
      for (std::size_t j = 0; j < z.J; ++j) {
        double best = 0.0;
        for (std::size_t m = 0; m < z.M; ++m) best = std::max(best, recovery_per_m3(s, j, m, r));
        ub += best * s.streams[j].flow(t);
      }
      idx.put(k(Family::kRecovered, r, t),
              model.add_continuous(nm("rs", {s.resources[r], std::to_string(t)}), 0.0, ub));
    }
  return idx;
}

void build_treatment_block(const Scenario& s, milp::MilpModel& model, VariableIndex& idx) {
  const Sets z = sets_of(s);
  const auto& cells = s.topology.cells;

  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t x = 0; x < z.X; ++x)
      for (std::size_t t = 0; t < z.T; ++t) {
        // Inflow of stream j into cell x, self-arc included.
        std::vector<Term> row{{idx.at(k(Family::kInflow, j, x, t)), 1.0}};
        for (std::size_t x2 = 0; x2 < z.X; ++x2) row.push_back({idx.at(k(Family::kFlow, j, x2, x, t)), -1.0});
        model.add_constraint(std::move(row), Sense::kEqual, 0.0, "inflow");
      }

  // treated = alpha * inflow; its sum over technologies reproduces the
  // per-arc products of the removal expression.
  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t x = 0; x < z.X; ++x)
      for (std::size_t m = 0; m < z.M; ++m)
        for (std::size_t t = 0; t < z.T; ++t) {
          const VarId w = milp::add_product_bin_cont(
              model, idx.at(k(Family::kAlpha, j, x, m)), idx.at(k(Family::kInflow, j, x, t)),
              s.streams[j].flow(t),
              nm("w", {s.streams[j].id, cells[x].id, s.technologies[m].id, std::to_string(t)}));
          idx.put(k(Family::kTreated, j, x, m, t), w);
        }

  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t x = 0; x < z.X; ++x) {
      std::vector<Term> row;
      for (std::size_t m = 0; m < z.M; ++m) row.push_back({idx.at(k(Family::kAlpha, j, x, m)), 1.0});
      model.add_constraint(std::move(row), Sense::kLessEqual, 1.0, "one_technology");
      for (std::size_t t = 0; t < z.T; ++t) {
        std::vector<Term> split{{idx.at(k(Family::kInflow, j, x, t)), -1.0}};
        for (std::size_t m = 0; m < z.M; ++m) split.push_back({idx.at(k(Family::kTreated, j, x, m, t)), 1.0});
        model.add_constraint(std::move(split), Sense::kLessEqual, 0.0, "treated_split");
      }
    }

  for (std::size_t x = 0; x < z.X; ++x)
    for (std::size_t m = 0; m < z.M; ++m) {
      const auto& cap = s.technologies[m].capacity;
      if (!cap) continue;
      for (std::size_t t = 0; t < z.T; ++t) {
        std::vector<Term> row{{idx.at(k(Family::kOmega, x, m)), -*cap}};
        for (std::size_t j = 0; j < z.J; ++j) row.push_back({idx.at(k(Family::kTreated, j, x, m, t)), 1.0});
        model.add_constraint(std::move(row), Sense::kLessEqual, 0.0, "capacity");
      }
    }

  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t x = 0; x < z.X; ++x) {
      const VarId ups = idx.at(k(Family::kUpsilon, j, x));
      if (z.plants.empty()) {
        model.set_bounds(ups, 0.0, 0.0);
        continue;
      }
      std::vector<VarId> xs;
      for (std::size_t m : z.plants) xs.push_back(idx.at(k(Family::kAlpha, j, x, m)));
      milp::add_indicator_link(model, ups, xs, milp::LinkForm::kDisaggregated, "upsilon_link");
    }
  for (std::size_t x = 0; x < z.X; ++x)
    for (std::size_t m = 0; m < z.M; ++m) {
      std::vector<VarId> xs;
      for (std::size_t j = 0; j < z.J; ++j) xs.push_back(idx.at(k(Family::kAlpha, j, x, m)));
      if (xs.empty()) {
        model.set_bounds(idx.at(k(Family::kOmega, x, m)), 0.0, 0.0);
        continue;
      }
      milp::add_indicator_link(model, idx.at(k(Family::kOmega, x, m)), xs,
                               milp::LinkForm::kDisaggregated, "omega_link");
    }

  // Park totals: dis = gen - removed, rs = recovered, both per day.
  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t p = 0; p < z.P; ++p)
      for (std::size_t t = 0; t < z.T; ++t) {
        const double c = s.streams[j].concentration(s.components[p]);
        std::vector<Term> row{{idx.at(k(Family::kDischarge, j, p, t)), 1.0}};
        for (std::size_t x = 0; x < z.X; ++x)
          for (std::size_t m = 0; m < z.M; ++m) {
            const double y = s.technologies[m].removal(s.components[p]);
            if (y * c != 0.0) row.push_back({idx.at(k(Family::kTreated, j, x, m, t)), y * c});
          }
        model.add_constraint(std::move(row), Sense::kEqual, s.generation(j, p, t), "discharge");
      }
  for (std::size_t r = 0; r < z.R; ++r)
    for (std::size_t t = 0; t < z.T; ++t) {
      std::vector<Term> row{{idx.at(k(Family::kRecovered, r, t)), 1.0}};
      for (std::size_t j = 0; j < z.J; ++j)
        for (std::size_t x = 0; x < z.X; ++x)
          for (std::size_t m = 0; m < z.M; ++m) {
            const double v = recovery_per_m3(s, j, m, r);
            if (v != 0.0) row.push_back({idx.at(k(Family::kTreated, j, x, m, t)), -v});
          }
      model.add_constraint(std::move(row), Sense::kEqual, 0.0, "recovery");
    }

  for (std::size_t p = 0; p < z.P; ++p) {
    auto it = s.economics.discharge_limit.find(s.components[p]);
    if (it == s.economics.discharge_limit.end()) continue;
    for (std::size_t t = 0; t < z.T; ++t) {
      std::vector<Term> row;
      for (std::size_t j = 0; j < z.J; ++j) row.push_back({idx.at(k(Family::kDischarge, j, p, t)), 1.0});
      model.add_constraint(std::move(row), Sense::kLessEqual, it->second, "discharge_limit");
    }
  }
}

void build_transport_block(const Scenario& s, milp::MilpModel& model, VariableIndex& idx) {
  const Sets z = sets_of(s);
  const auto& cells = s.topology.cells;
  const bool conn = !z.connectors.empty();

  // Pipe limit on inter-cell outflow; self-arcs carry no pipe.
  for (std::size_t x = 0; x < z.X; ++x)
    for (std::size_t t = 0; t < z.T; ++t) {
      std::vector<Term> row;
      for (std::size_t j = 0; j < z.J; ++j)
        for (std::size_t x2 = 0; x2 < z.X; ++x2)
          if (x2 != x) row.push_back({idx.at(k(Family::kFlow, j, x, x2, t)), 1.0});
      for (std::size_t l = 0; l < z.L; ++l) row.push_back({idx.at(k(Family::kDelta, l)), -s.pipes[l].max_flow()});
      model.add_constraint(std::move(row), Sense::kLessEqual, 0.0, "pipe_limit");
    }
  {
    std::vector<Term> row;
    for (std::size_t l = 0; l < z.L; ++l) row.push_back({idx.at(k(Family::kDelta, l)), 1.0});
    model.add_constraint(std::move(row), Sense::kEqual, 1.0, "pipe_type");
  }

  // Outflow bounded by connector inflow plus generation. The per-component
  // rows of the model differ only by the factor C_{j,p}; one row in flow
  // units carries them all.
  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t x = 0; x < z.X; ++x)
      for (std::size_t t = 0; t < z.T; ++t) {
        std::vector<Term> row;
        for (std::size_t x2 = 0; x2 < z.X; ++x2) row.push_back({idx.at(k(Family::kFlow, j, x, x2, t)), 1.0});
        for (std::size_t m : z.connectors) row.push_back({idx.at(k(Family::kTreated, j, x, m, t)), -1.0});
        const double gen = z.source[j] == x ? s.streams[j].flow(t) : 0.0;
        model.add_constraint(std::move(row), Sense::kLessEqual, gen, "balance");
        if (!conn) continue;
        std::vector<Term> thru;
        for (std::size_t m : z.connectors) thru.push_back({idx.at(k(Family::kTreated, j, x, m, t)), 1.0});
        for (std::size_t x2 = 0; x2 < z.X; ++x2) thru.push_back({idx.at(k(Family::kFlow, j, x, x2, t)), -1.0});
        model.add_constraint(std::move(thru), Sense::kLessEqual, 0.0, "throughflow");
      }

  if (conn) {
    for (std::size_t j = 0; j < z.J; ++j) {
      std::vector<VarId> xs;
      for (std::size_t x = 0; x < z.X; ++x)
        for (std::size_t m : z.connectors) xs.push_back(idx.at(k(Family::kAlpha, j, x, m)));
      milp::add_indicator_link(model, idx.at(k(Family::kEpsilon, j)), xs,
                               milp::LinkForm::kDisaggregated, "epsilon_link");
    }

    // kappa = (connector for j in x) * (plant for j in x').
    for (std::size_t j = 0; j < z.J; ++j)
      for (std::size_t x = 0; x < z.X; ++x)
        for (std::size_t x2 = 0; x2 < z.X; ++x2) {
          if (x == x2) continue;
          const VarId ups = idx.at(k(Family::kUpsilon, j, x2));
          const std::string name = nm("kappa", {s.streams[j].id, cells[x].id, cells[x2].id});
          VarId kap;
          if (z.connectors.size() == 1) {
            kap = milp::add_product_bin_bin(model, idx.at(k(Family::kAlpha, j, x, z.connectors[0])),
                                            ups, name);
          } else {
            // At most one technology per (j,x), so the connector sum is binary.
            kap = model.add_binary(name);
            std::vector<Term> le{{kap, 1.0}}, ge{{kap, 1.0}, {ups, -1.0}};
            for (std::size_t m : z.connectors) {
              le.push_back({idx.at(k(Family::kAlpha, j, x, m)), -1.0});
              ge.push_back({idx.at(k(Family::kAlpha, j, x, m)), -1.0});
            }
            model.add_constraint(std::move(le), Sense::kLessEqual, 0.0, "prod_bb");
            model.add_constraint({{kap, 1.0}, {ups, -1.0}}, Sense::kLessEqual, 0.0, "prod_bb");
            model.add_constraint(std::move(ge), Sense::kGreaterEqual, -1.0, "prod_bb");
          }
          idx.put(k(Family::kKappa, j, x, x2), kap);
        }
    for (std::size_t j = 0; j < z.J; ++j)
      for (std::size_t x2 = 0; x2 < z.X; ++x2) {
        if (x2 == z.source[j]) continue;
        idx.put(k(Family::kZeta, j, x2),
                milp::add_product_bin_complement(model, idx.at(k(Family::kUpsilon, j, x2)),
                                                 idx.at(k(Family::kEpsilon, j)),
                                                 nm("zeta", {s.streams[j].id, cells[x2].id})));
      }
  }

  for (std::size_t x = 0; x < z.X; ++x)
    for (std::size_t x2 = 0; x2 < z.X; ++x2) {
      if (x == x2) continue;
      std::vector<VarId> parts;
      auto link = [&](Family f, const std::vector<VarId>& xs, const char* tag) {
        const VarId y = idx.at(k(f, x, x2));
        if (xs.empty()) {
          model.set_bounds(y, 0.0, 0.0);
        } else {
          milp::add_indicator_link(model, y, xs, milp::LinkForm::kDisaggregated, tag);
        }
        parts.push_back(y);
      };
      std::vector<VarId> gamma_xs;
      for (std::size_t j = 0; j < z.J; ++j) {
        if (z.source[j] != x) continue;
        gamma_xs.push_back(conn ? idx.at(k(Family::kZeta, j, x2)) : idx.at(k(Family::kUpsilon, j, x2)));
      }
      if (conn) {
        std::vector<VarId> phi_xs;
        for (std::size_t j = 0; j < z.J; ++j) {
          if (z.source[j] != x) continue;
          for (std::size_t m : z.connectors) phi_xs.push_back(idx.at(k(Family::kAlpha, j, x2, m)));
        }
        link(Family::kPhi, phi_xs, "phi_link");
        std::vector<VarId> pi_xs;
        for (std::size_t j = 0; j < z.J; ++j) pi_xs.push_back(idx.at(k(Family::kKappa, j, x, x2)));
        link(Family::kPi, pi_xs, "pi_link");
      }
      link(Family::kGamma, gamma_xs, "gamma_link");
      milp::add_indicator_link(model, idx.at(k(Family::kPathway, x, x2)), parts,
                               milp::LinkForm::kDisaggregated, "pathway_link");
    }
}

void build_objective(const Scenario& s, milp::MilpModel& model, VariableIndex& idx) {
  const Sets z = sets_of(s);
  const auto& cells = s.topology.cells;
  const double days = s.step_duration;

  for (std::size_t x = 0; x < z.X; ++x)
    for (std::size_t x2 = 0; x2 < z.X; ++x2) {
      if (x == x2) continue;
      const VarId path = idx.at(k(Family::kPathway, x, x2));
      const bool priced = pair_priced(s, x, x2);
      std::vector<Term> sum{{path, -1.0}};
      for (std::size_t l = 0; l < z.L; ++l) {
        const VarId w = milp::add_product_bin_bin(
            model, idx.at(k(Family::kDelta, l)), path,
            nm("dpath", {s.pipes[l].id, cells[x].id, cells[x2].id}));
        idx.put(k(Family::kPipePathway, l, x, x2), w);
        if (priced) model.add_objective_term(w, pipe_cost_coefficient(s, x, x2, l));
        sum.push_back({w, 1.0});
      }
      // Exactly one pipe type is selected, so the products sum to the pathway.
      model.add_constraint(std::move(sum), Sense::kEqual, 0.0, "pipe_pathway_sum");
    }

  for (std::size_t x = 0; x < z.X; ++x)
    for (std::size_t m = 0; m < z.M; ++m)
      model.add_objective_term(idx.at(k(Family::kOmega, x, m)), s.technologies[m].capex);

  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t x = 0; x < z.X; ++x)
      for (std::size_t m = 0; m < z.M; ++m)
        for (std::size_t t = 0; t < z.T; ++t)
          model.add_objective_term(idx.at(k(Family::kTreated, j, x, m, t)),
                                   s.technologies[m].opex * days);

  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t p = 0; p < z.P; ++p)
      for (std::size_t t = 0; t < z.T; ++t)
        model.add_objective_term(idx.at(k(Family::kDischarge, j, p, t)),
                                 s.economics.penalty(s.components[p]) * days);

  for (std::size_t r = 0; r < z.R; ++r)
    for (std::size_t t = 0; t < z.T; ++t)
      model.add_objective_term(idx.at(k(Family::kRecovered, r, t)),
                               -s.economics.price(s.resources[r]) * s.economics.price_factor * days);
}

BuiltModel build_model(const Scenario& s) {
  const auto report = park::validate_scenario(s);
  if (!report.ok()) {
    std::string msg = "scenario failed validation:";
    for (const auto& e : report.errors) msg += "\n  " + e;
    throw FormulationError(msg);
  }
  BuiltModel built;
  built.index = declare_variables(s, built.model);
  build_treatment_block(s, built.model, built.index);
  build_transport_block(s, built.model, built.index);
  build_objective(s, built.model, built.index);
  built.model.canonicalize();
  return built;
}

Design extract_design(const Scenario& s, const VariableIndex& idx, std::span<const double> x,
                      double tol) {
  const Sets z = sets_of(s);
  if (x.size() < idx.size()) throw FormulationError("assignment shorter than the variable index");

  auto value = [&](const SemanticKey& key) -> double {
    auto id = idx.find(key);
    return id ? x[static_cast<std::size_t>(id->index)] : 0.0;
  };
  auto binary = [&](const SemanticKey& key, std::vector<std::string>& bad) {
    const double v = value(key);
    if (std::fabs(v - std::round(v)) > tol) {
      bad.push_back(family_name(key.family) + " = " + milp::format_number(v));
    }
    return v >= 0.5;
  };

  std::vector<std::string> fractional;
  Design d;
  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t c = 0; c < z.X; ++c)
      for (std::size_t m = 0; m < z.M; ++m)
        if (binary(k(Family::kAlpha, j, c, m), fractional)) {
          d.placements.push_back(
              {s.streams[j].id, s.topology.cells[c].id, s.technologies[m].id});
        }
  for (std::size_t l = 0; l < z.L; ++l)
    if (binary(k(Family::kDelta, l), fractional)) d.pipe_types.push_back(s.pipes[l].id);
  std::vector<std::pair<std::string, std::string>> paths;
  for (std::size_t a = 0; a < z.X; ++a)
    for (std::size_t b = 0; b < z.X; ++b)
      if (a != b && binary(k(Family::kPathway, a, b), fractional)) {
        paths.emplace_back(s.topology.cells[a].id, s.topology.cells[b].id);
      }
  if (!fractional.empty()) {
    std::string msg = "assignment is not integral:";
    for (std::size_t i = 0; i < std::min<std::size_t>(fractional.size(), 10); ++i) {
      msg += "\n  " + fractional[i];
    }
    throw FormulationError(msg);
  }
  d.pathways = std::move(paths);

  for (std::size_t j = 0; j < z.J; ++j)
    for (std::size_t a = 0; a < z.X; ++a)
      for (std::size_t b = 0; b < z.X; ++b)
        for (std::size_t t = 0; t < z.T; ++t) {
          const double v = value(k(Family::kFlow, j, a, b, t));
          if (v > 1e-9) {
            d.flows.push_back({s.streams[j].id, s.topology.cells[a].id, s.topology.cells[b].id, t, v});
          }
        }
  d = normalized(std::move(d));

  const auto violations = evaluator::check_feasibility(s, d);
  if (!violations.empty()) {
    std::string msg = "decoded design violates the model:";
    for (std::size_t i = 0; i < std::min<std::size_t>(violations.size(), 10); ++i) {
      msg += "\n  " + evaluator::describe(violations[i]);
    }
    throw FormulationError(msg);
  }
  return d;
}

}  // namespace ecopark::formulation
