#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ecopark/park_model.hpp"
#include "json.hpp"

namespace ecopark::park {

namespace {

using nlohmann::json;

// Thin cursor over a JSON node that remembers where it is in the document so
// that every error names the offending field.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  const json& raw() const { return value_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ScenarioError("field '" + path_ + "': " + msg);
  }

  bool has(const char* key) const { return value_.is_object() && value_.contains(key); }

  Node at(const char* key) const {
    if (!value_.is_object()) fail("expected an object");
    auto it = value_.find(key);
    if (it == value_.end()) {
      throw ScenarioError("field '" + child_path(key) + "': required field missing");
    }
    return Node(*it, child_path(key));
  }

  Node at(std::size_t i) const { return Node(value_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    return value_.get<double>();
  }

  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  bool boolean() const {
    if (!value_.is_boolean()) fail("expected true or false");
    return value_.get<bool>();
  }

  double number_or(const char* key, double fallback) const {
    return has(key) ? at(key).number() : fallback;
  }

  std::string string_or(const char* key, std::string fallback) const {
    return has(key) ? at(key).string() : std::move(fallback);
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }

  std::vector<std::string> strings() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).string());
    return out;
  }

  std::map<std::string, double> number_map() const {
    if (!value_.is_object()) fail("expected an object");
    std::map<std::string, double> out;
    for (auto it = value_.begin(); it != value_.end(); ++it) {
      out[it.key()] = Node(it.value(), child_path(it.key().c_str())).number();
    }
    return out;
  }

  std::vector<std::pair<std::string, Node>> items() const {
    if (!value_.is_object()) fail("expected an object");
    std::vector<std::pair<std::string, Node>> out;
    for (auto it = value_.begin(); it != value_.end(); ++it) {
      out.emplace_back(it.key(), Node(it.value(), child_path(it.key().c_str())));
    }
    return out;
  }

 private:
  std::string child_path(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  const json& value_;
  std::string path_;
};

// Converts a concentration to kg/m3. Division keeps e.g. 713 mg/L exactly
// equal to the literal 0.713.
double to_kg_per_m3(const Node& where, double value, const std::string& units) {
  if (units == "kg_per_m3") return value;
  if (units == "mg_per_L") return value / 1000.0;  // mg/L = g/m3
  if (units == "kg_per_L") return value * 1000.0;
  where.fail("unknown concentration unit '" + units + "'");
}

void require_known(const Node& where, const std::set<std::string>& known,
                   const std::string& name, const char* what) {
  if (!known.contains(name)) where.fail(std::string("unknown ") + what + " '" + name + "'");
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(8);
  os << v;
  return os.str();
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + byte, '\n');
    throw ScenarioError("parse error at line " + std::to_string(line) + ": " + e.what());
  }
}

Scenario from_document(const json& doc) {
  Node root(doc, "");
  if (!doc.is_object()) root.fail("scenario document must be a JSON object");

  const Node version = root.at("schema_version");
  if (!version.raw().is_number_integer() || version.raw().get<int>() != kScenarioSchemaVersion) {
    version.fail("unsupported schema version " + version.raw().dump() + " (expected " +
                 std::to_string(kScenarioSchemaVersion) + ")");
  }

  Scenario s;
  s.name = root.string_or("name", "unnamed");
  s.currency = root.string_or("currency", "GBP");
  s.components = root.at("components").strings();
  s.resources = root.has("resources") ? root.at("resources").strings() : std::vector<std::string>{};
  const std::set<std::string> components(s.components.begin(), s.components.end());
  const std::set<std::string> resources(s.resources.begin(), s.resources.end());

  if (root.has("horizon")) {
    const Node h = root.at("horizon");
    const double steps = h.number_or("time_steps", 1.0);
    if (steps < 1.0 || steps != static_cast<double>(static_cast<std::size_t>(steps))) {
      h.at("time_steps").fail("time_steps must be a positive integer");
    }
    s.time_steps = static_cast<std::size_t>(steps);
    s.step_duration = h.number_or("step_duration_days", 3650.0);
  }
  s.transport_enabled = root.has("transport_enabled") ? root.at("transport_enabled").boolean() : true;
  if (root.has("notes")) s.notes = root.at("notes").strings();

  const Node topo = root.at("topology");
  s.topology.elevation_classes = topo.at("elevation_classes_m").numbers();
  const Node cells = topo.at("cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Node c = cells.at(i);
    s.topology.cells.push_back(Cell{c.at("id").string(), c.at("east_m").number(),
                                    c.at("north_m").number(), c.number_or("elevation_m", 0.0)});
  }

  const Node streams = root.at("streams");
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const Node n = streams.at(i);
    WasteStream st;
    st.id = n.at("id").string();
    st.source_cell = n.at("source_cell").string();
    if (!s.topology.contains(st.source_cell)) {
      n.at("source_cell").fail("stream '" + st.id + "' references unknown cell '" +
                               st.source_cell + "'");
    }
    const Node flow = n.at("flow_m3_per_day");
    if (flow.raw().is_array()) {
      st.flow_profile = flow.numbers();
    } else {
      st.flow_profile = {flow.number()};
    }
    if (st.flow_profile.size() == 1 && s.time_steps > 1) {
      st.flow_profile.assign(s.time_steps, st.flow_profile.front());
    }
    if (st.flow_profile.size() != s.time_steps) {
      flow.fail("expected " + std::to_string(s.time_steps) + " flow values");
    }
    const std::string units = n.string_or("concentration_units", "kg_per_m3");
    for (const auto& [p, node] : n.at("composition").items()) {
      require_known(node, components, p, "component");
      st.composition[p] = to_kg_per_m3(n, node.number(), units);
    }
    if (units != "kg_per_m3") {
      s.notes.push_back("stream " + st.id + ": concentrations converted from " + units +
                        " to kg/m3");
    }
    s.streams.push_back(std::move(st));
  }

  const Node techs = root.at("technologies");
  for (std::size_t i = 0; i < techs.size(); ++i) {
    const Node n = techs.at(i);
    Technology m;
    m.id = n.at("id").string();
    const std::string kind = n.string_or("kind", "plant");
    if (kind == "plant") {
      m.kind = TechnologyKind::kPlant;
    } else if (kind == "connector") {
      m.kind = TechnologyKind::kConnector;
    } else {
      n.at("kind").fail("kind must be 'plant' or 'connector'");
    }
    if (n.has("capacity_m3_per_day")) m.capacity = n.at("capacity_m3_per_day").number();
    if (n.has("removal")) {
      for (const auto& [p, node] : n.at("removal").items()) {
        require_known(node, components, p, "component");
        m.removal_eff[p] = node.number();
      }
    }
    if (n.has("recovery")) {
      const Node rec = n.at("recovery");
      for (std::size_t k = 0; k < rec.size(); ++k) {
        const Node e = rec.at(k);
        const std::string r = e.at("resource").string();
        const std::string p = e.at("component").string();
        require_known(e.at("resource"), resources, r, "resource");
        require_known(e.at("component"), components, p, "component");
        m.recovery_map[{r, p}] = e.at("yield").number();
      }
    }
    m.capex = n.number_or("capex", 0.0);
    m.opex = n.number_or("opex_per_m3", 0.0);
    s.technologies.push_back(std::move(m));
  }

  const std::size_t n_classes = s.topology.elevation_classes.size();
  const Node pipes = root.at("pipes");
  for (std::size_t i = 0; i < pipes.size(); ++i) {
    const Node n = pipes.at(i);
    PipeOption p;
    p.id = n.at("id").string();
    p.diameter = n.at("diameter_m").number();
    p.design_velocity = n.at("design_velocity_m_per_s").number();
    p.capacity_factor = n.number_or("capacity_factor", 1.0);
    p.install_cost_per_100m = n.at("install_cost_per_100m").numbers();
    p.pump_cost_per_100m = n.has("pump_cost_per_100m") ? n.at("pump_cost_per_100m").numbers()
                                                        : std::vector<double>(n_classes, 0.0);
    s.pipes.push_back(std::move(p));
  }

  if (root.has("economics")) {
    const Node e = root.at("economics");
    if (e.has("discharge_penalty_per_kg")) {
      for (const auto& [p, node] : e.at("discharge_penalty_per_kg").items()) {
        require_known(node, components, p, "component");
        s.economics.discharge_penalty[p] = node.number();
      }
    }
    if (e.has("resource_price")) {
      for (const auto& [r, node] : e.at("resource_price").items()) {
        require_known(node, resources, r, "resource");
        s.economics.resource_price[r] = node.number();
      }
    }
    s.economics.price_factor = e.number_or("price_factor", 1.0);
    if (e.has("discharge_limit")) {
      for (const auto& [p, node] : e.at("discharge_limit").items()) {
        require_known(node, components, p, "component");
        const double value = node.at("value").number();
        const std::string units = node.string_or("units", "kg_per_day");
        if (units == "kg_per_day") {
          s.economics.discharge_limit[p] = value;
          continue;
        }
        // Concentration limit on total park effluent: scale by the mean total
        // inflow volume per day.
        double volume = 0.0;
        for (const auto& st : s.streams) {
          for (double f : st.flow_profile) volume += f;
        }
        volume /= static_cast<double>(s.time_steps);
        const double kg_per_m3 = to_kg_per_m3(node, value, units);
        s.economics.discharge_limit[p] = kg_per_m3 * volume;
        s.notes.push_back("discharge limit " + p + ": " + format_number(value) + " " + units +
                          " read as a park effluent concentration; x " + format_number(volume) +
                          " m3/d total inflow = " +
                          format_number(s.economics.discharge_limit[p]) + " kg/d");
      }
    }
  }
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json resolve_variant(json doc, std::string_view variant) {
  json variants = json::object();
  if (doc.is_object() && doc.contains("variants")) {
    variants = doc["variants"];
    doc.erase("variants");
  }
  if (variant.empty()) return doc;
  const std::string key(variant);
  if (!variants.is_object() || !variants.contains(key)) {
    throw ScenarioError("unknown scenario variant '" + key + "'");
  }
  doc.merge_patch(variants[key]);
  return doc;
}

}  // namespace

Scenario parse_scenario(std::string_view text, std::string_view variant) {
  return from_document(resolve_variant(parse_document(text), variant));
}

Scenario load_scenario(const std::string& path, std::string_view variant) {
  return parse_scenario(read_file(path), variant);
}

std::vector<std::string> list_variants(const std::string& path) {
  const json doc = parse_document(read_file(path));
  std::vector<std::string> out;
  if (doc.is_object() && doc.contains("variants") && doc["variants"].is_object()) {
    for (auto it = doc["variants"].begin(); it != doc["variants"].end(); ++it) {
      out.push_back(it.key());
    }
  }
  return out;
}

std::string save_scenario(const Scenario& s) {
  json doc;
  doc["schema_version"] = kScenarioSchemaVersion;
  doc["name"] = s.name;
  doc["currency"] = s.currency;
  doc["components"] = s.components;
  doc["resources"] = s.resources;
  doc["horizon"] = {{"time_steps", s.time_steps}, {"step_duration_days", s.step_duration}};
  doc["transport_enabled"] = s.transport_enabled;
  doc["notes"] = s.notes;

  json cells = json::array();
  for (const auto& c : s.topology.cells) {
    cells.push_back({{"id", c.id}, {"east_m", c.east}, {"north_m", c.north},
                     {"elevation_m", c.elevation}});
  }
  doc["topology"] = {{"elevation_classes_m", s.topology.elevation_classes}, {"cells", cells}};

  json streams = json::array();
  for (const auto& st : s.streams) {
    json comp = json::object();
    for (const auto& [p, c] : st.composition) comp[p] = c;
    streams.push_back({{"id", st.id},
                       {"source_cell", st.source_cell},
                       {"flow_m3_per_day", st.flow_profile},
                       {"concentration_units", "kg_per_m3"},
                       {"composition", comp}});
  }
  doc["streams"] = streams;

  json techs = json::array();
  for (const auto& m : s.technologies) {
    json t = {{"id", m.id}, {"kind", m.is_connector() ? "connector" : "plant"}};
    if (m.capacity) t["capacity_m3_per_day"] = *m.capacity;
    json removal = json::object();
    for (const auto& [p, y] : m.removal_eff) removal[p] = y;
    t["removal"] = removal;
    json recovery = json::array();
    for (const auto& [key, z] : m.recovery_map) {
      recovery.push_back({{"resource", key.first}, {"component", key.second}, {"yield", z}});
    }
    t["recovery"] = recovery;
    t["capex"] = m.capex;
    t["opex_per_m3"] = m.opex;
    techs.push_back(t);
  }
  doc["technologies"] = techs;

  json pipes = json::array();
  for (const auto& p : s.pipes) {
    pipes.push_back({{"id", p.id},
                     {"diameter_m", p.diameter},
                     {"design_velocity_m_per_s", p.design_velocity},
                     {"capacity_factor", p.capacity_factor},
                     {"install_cost_per_100m", p.install_cost_per_100m},
                     {"pump_cost_per_100m", p.pump_cost_per_100m}});
  }
  doc["pipes"] = pipes;

  json limits = json::object();
  for (const auto& [p, v] : s.economics.discharge_limit) {
    limits[p] = {{"value", v}, {"units", "kg_per_day"}};
  }
  doc["economics"] = {{"discharge_penalty_per_kg", s.economics.discharge_penalty},
                      {"resource_price", s.economics.resource_price},
                      {"price_factor", s.economics.price_factor},
                      {"discharge_limit", limits}};
  return doc.dump(2) + "\n";
}

}  // namespace ecopark::park
