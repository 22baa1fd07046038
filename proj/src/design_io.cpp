#include <algorithm>
#include <fstream>
#include "json.hpp"
#include <sstream>
#include <tuple>

#include "ecopark/design.hpp"

namespace ecopark::formulation {

namespace {

using nlohmann::json;

constexpr int kDesignSchemaVersion = 1;

const json& field(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DesignError(path + ": missing field '" + key + "'");
  return *it;
}

std::string str_field(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_string()) throw DesignError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

}  // namespace

Design normalized(Design d) {
  std::sort(d.placements.begin(), d.placements.end());
  d.placements.erase(std::unique(d.placements.begin(), d.placements.end()), d.placements.end());
  std::erase_if(d.flows, [](const FlowEntry& f) { return f.value == 0.0; });
  std::sort(d.flows.begin(), d.flows.end(), [](const FlowEntry& a, const FlowEntry& b) {
    return std::tie(a.stream, a.step, a.from, a.to) < std::tie(b.stream, b.step, b.from, b.to);
  });
  if (d.pathways) {
    std::sort(d.pathways->begin(), d.pathways->end());
    d.pathways->erase(std::unique(d.pathways->begin(), d.pathways->end()), d.pathways->end());
  }
  return d;
}

std::string design_to_json(const Design& d, const std::string& scenario_name) {
  json out;
  out["schema_version"] = kDesignSchemaVersion;
  if (!scenario_name.empty()) out["scenario"] = scenario_name;
  out["pipe_types"] = d.pipe_types;
  out["placements"] = json::array();
  for (const auto& p : d.placements) {
    out["placements"].push_back({{"stream", p.stream}, {"cell", p.cell}, {"technology", p.technology}});
  }
  out["flows"] = json::array();
  for (const auto& f : d.flows) {
    out["flows"].push_back(
        {{"stream", f.stream}, {"from", f.from}, {"to", f.to}, {"step", f.step}, {"m3_per_day", f.value}});
  }
  if (d.pathways) {
    out["pathways"] = json::array();
    for (const auto& [a, b] : *d.pathways) out["pathways"].push_back({a, b});
  }
  return out.dump(2) + "\n";
}

Design design_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DesignError(std::string("design: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DesignError("design: expected a JSON object");
  if (auto v = doc.find("schema_version"); v != doc.end()) {
    if (!v->is_number_integer() || v->get<int>() != kDesignSchemaVersion) {
      throw DesignError("design.schema_version: unsupported version");
    }
  }

  Design d;
  if (auto it = doc.find("pipe_types"); it != doc.end()) {
    if (!it->is_array()) throw DesignError("design.pipe_types: expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      if (!(*it)[i].is_string()) {
        throw DesignError("design.pipe_types[" + std::to_string(i) + "]: expected a string");
      }
      d.pipe_types.push_back((*it)[i].get<std::string>());
    }
  }
  if (auto it = doc.find("placements"); it != doc.end()) {
    if (!it->is_array()) throw DesignError("design.placements: expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "design.placements[" + std::to_string(i) + "]";
      const json& p = (*it)[i];
      if (!p.is_object()) throw DesignError(path + ": expected an object");
      d.placements.push_back({str_field(p, "stream", path), str_field(p, "cell", path),
                              str_field(p, "technology", path)});
    }
  }
  if (auto it = doc.find("flows"); it != doc.end()) {
    if (!it->is_array()) throw DesignError("design.flows: expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "design.flows[" + std::to_string(i) + "]";
      const json& f = (*it)[i];
      if (!f.is_object()) throw DesignError(path + ": expected an object");
      FlowEntry e{str_field(f, "stream", path), str_field(f, "from", path), str_field(f, "to", path), 0, 0.0};
      if (auto st = f.find("step"); st != f.end()) {
        if (!st->is_number_unsigned()) throw DesignError(path + ".step: expected a non-negative integer");
        e.step = st->get<std::size_t>();
      }
      const json& v = field(f, "m3_per_day", path);
      if (!v.is_number()) throw DesignError(path + ".m3_per_day: expected a number");
      e.value = v.get<double>();
      d.flows.push_back(std::move(e));
    }
  }
  if (auto it = doc.find("pathways"); it != doc.end()) {
    if (!it->is_array()) throw DesignError("design.pathways: expected an array");
    d.pathways.emplace();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& p = (*it)[i];
      if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string()) {
        throw DesignError("design.pathways[" + std::to_string(i) + "]: expected [from, to]");
      }
      d.pathways->emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    }
  }
  return d;
}

Design load_design(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DesignError("cannot open design file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return design_from_json(os.str());
}

}  // namespace ecopark::formulation
