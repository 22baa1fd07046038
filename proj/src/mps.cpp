#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ecopark/milp_core.hpp"

namespace ecopark::milp {

namespace {

constexpr const char* kObjectiveRow = "OBJ";

std::string mangle(char prefix, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%07zu", prefix, index);
  return buf;
}

std::string pad(std::string_view s, std::size_t width) {
  std::string out(s);
  if (out.size() < width) out.append(width - out.size(), ' ');
  return out;
}

char sense_code(Sense s) {
  switch (s) {
    case Sense::kLessEqual: return 'L';
    case Sense::kGreaterEqual: return 'G';
    case Sense::kEqual: return 'E';
  }
  return 'E';
}

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

std::optional<double> parse_double(std::string_view s) {
  if (s == "inf" || s == "Inf" || s == "+inf" || s == "1e+30" || s == "1e30") return kInfinity;
  if (s == "-inf" || s == "-Inf" || s == "-1e+30" || s == "-1e30") return -kInfinity;
  double v = 0.0;
  const char* begin = s.data();
  if (!s.empty() && s.front() == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

[[noreturn]] void mps_error(std::size_t line, const std::string& msg) {
  throw ModelError("MPS line " + std::to_string(line) + ": " + msg);
}

}  // namespace

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "1e+30" : "-1e+30";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string NameTable::to_tsv(const MilpModel& model) const {
  std::string out = "# kind\tmangled\toriginal\n";
  for (std::size_t i = 0; i < column_names.size(); ++i) {
    out += "col\t" + column_names[i] + "\t" + model.variables()[i].name + "\n";
  }
  for (std::size_t i = 0; i < row_names.size(); ++i) {
    out += "row\t" + row_names[i] + "\t" + model.constraints()[i].name + "\n";
  }
  return out;
}

NameTable NameTable::from_tsv(std::string_view text) {
  NameTable t;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string_view::npos) {
      throw ModelError("name table line " + std::to_string(line_no) + ": expected 3 fields");
    }
    const std::string kind(line.substr(0, tab1));
    const std::string mangled(line.substr(tab1 + 1, tab2 - tab1 - 1));
    const std::string original(line.substr(tab2 + 1));
    if (kind == "col") {
      t.column_names.push_back(mangled);
    } else if (kind == "row") {
      t.row_names.push_back(mangled);
    } else {
      throw ModelError("name table line " + std::to_string(line_no) + ": unknown kind '" +
                       kind + "'");
    }
    t.to_original[mangled] = original;
    t.to_mangled[original] = mangled;
  }
  return t;
}

MpsExport export_model(const MilpModel& source) {
  MilpModel model = source;
  model.canonicalize();

  MpsExport out;
  NameTable& names = out.names;
  for (std::size_t i = 0; i < model.num_variables(); ++i) {
    names.column_names.push_back(mangle('C', i));
    names.to_original[names.column_names.back()] = model.variables()[i].name;
    names.to_mangled[model.variables()[i].name] = names.column_names.back();
  }
  for (std::size_t i = 0; i < model.num_constraints(); ++i) {
    names.row_names.push_back(mangle('R', i));
    names.to_original[names.row_names.back()] = model.constraints()[i].name;
    names.to_mangled[model.constraints()[i].name] = names.row_names.back();
  }

  // Column-major view: (row index or -1 for objective, coefficient).
  std::vector<std::vector<std::pair<std::int64_t, double>>> columns(model.num_variables());
  for (const Term& t : model.objective().terms) {
    columns[static_cast<std::size_t>(t.var.index)].emplace_back(-1, t.coef);
  }
  for (std::size_t r = 0; r < model.num_constraints(); ++r) {
    for (const Term& t : model.constraints()[r].terms) {
      columns[static_cast<std::size_t>(t.var.index)].emplace_back(static_cast<std::int64_t>(r),
                                                                 t.coef);
    }
  }

  std::ostringstream os;
  os << "* ecopark model: " << model.num_variables() << " columns, " << model.num_constraints()
     << " rows\n";
  os << "NAME          ECOPARK\n";
  os << "ROWS\n";
  os << " N  " << kObjectiveRow << "\n";
  for (std::size_t r = 0; r < model.num_constraints(); ++r) {
    os << ' ' << sense_code(model.constraints()[r].sense) << "  " << names.row_names[r] << "\n";
  }

  os << "COLUMNS\n";
  bool in_integer_block = false;
  for (std::size_t j = 0; j < model.num_variables(); ++j) {
    const bool integer = model.variables()[j].kind == VarKind::kBinary;
    if (integer != in_integer_block) {
      os << "    MARKER                 'MARKER'                 "
         << (integer ? "'INTORG'" : "'INTEND'") << "\n";
      in_integer_block = integer;
    }
    const std::string& col = names.column_names[j];
    if (columns[j].empty()) {
      // Keep the column declared even without coefficients.
      os << "    " << pad(col, 8) << "  " << pad(kObjectiveRow, 8) << "  0\n";
    }
    for (const auto& [row, coef] : columns[j]) {
      const std::string_view row_name =
          row < 0 ? std::string_view(kObjectiveRow) : names.row_names[static_cast<std::size_t>(row)];
      os << "    " << pad(col, 8) << "  " << pad(row_name, 8) << "  " << format_number(coef)
         << "\n";
    }
  }
  if (in_integer_block) os << "    MARKER                 'MARKER'                 'INTEND'\n";

  os << "RHS\n";
  if (model.objective().constant != 0.0) {
    os << "    RHS       " << pad(kObjectiveRow, 8) << "  "
       << format_number(-model.objective().constant) << "\n";
  }
  for (std::size_t r = 0; r < model.num_constraints(); ++r) {
    const double rhs = model.constraints()[r].rhs;
    if (rhs != 0.0) {
      os << "    RHS       " << pad(names.row_names[r], 8) << "  " << format_number(rhs) << "\n";
    }
  }

  os << "BOUNDS\n";
  for (std::size_t j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variables()[j];
    const std::string& col = names.column_names[j];
    if (v.kind == VarKind::kBinary && v.lower == 0.0 && v.upper == 1.0) {
      os << " BV BND       " << col << "\n";
      continue;
    }
    if (v.lower == v.upper) {
      os << " FX BND       " << pad(col, 8) << "  " << format_number(v.lower) << "\n";
      continue;
    }
    if (v.lower == -kInfinity && v.upper == kInfinity) {
      os << " FR BND       " << col << "\n";
      continue;
    }
    if (v.lower == -kInfinity) {
      os << " MI BND       " << col << "\n";
    } else if (v.lower != 0.0 || v.kind == VarKind::kBinary) {
      os << " LO BND       " << pad(col, 8) << "  " << format_number(v.lower) << "\n";
    }
    if (v.upper != kInfinity) {
      os << " UP BND       " << pad(col, 8) << "  " << format_number(v.upper) << "\n";
    } else if (v.kind == VarKind::kBinary) {
      os << " PL BND       " << col << "\n";
    }
  }
  os << "ENDATA\n";
  out.mps = os.str();
  return out;
}

MilpModel read_mps(std::string_view text, const NameTable* names) {
  enum class Section { kNone, kName, kObjSense, kRows, kColumns, kRhs, kBounds, kEnd };
  struct RawRow {
    std::string name;
    Sense sense;
    std::vector<Term> terms;
    double rhs = 0.0;
  };
  struct RawCol {
    std::string name;
    bool integer = false;
    bool has_lower = false;
    double lower = 0.0;
    double upper = kInfinity;
    bool upper_set = false;
  };

  auto original = [&](const std::string& mangled) {
    if (names != nullptr) {
      auto it = names->to_original.find(mangled);
      if (it != names->to_original.end()) return it->second;
    }
    return mangled;
  };

  std::string objective_row;
  std::vector<RawRow> rows;
  std::unordered_map<std::string, std::size_t> row_index;
  std::vector<RawCol> cols;
  std::unordered_map<std::string, std::size_t> col_index;
  std::vector<Term> objective;
  double objective_rhs = 0.0;
  bool integer_block = false;
  Section section = Section::kNone;

  auto column = [&](const std::string& name, std::size_t line) -> std::size_t {
    auto it = col_index.find(name);
    if (it != col_index.end()) return it->second;
    if (section != Section::kColumns) mps_error(line, "unknown column '" + name + "'");
    col_index.emplace(name, cols.size());
    cols.push_back(RawCol{name, integer_block});
    return cols.size() - 1;
  };

  auto add_entry = [&](std::size_t col, const std::string& row, const std::string& value,
                       std::size_t line) {
    auto v = parse_double(value);
    if (!v) mps_error(line, "bad number '" + value + "'");
    const VarId id{static_cast<std::int32_t>(col)};
    if (row == objective_row) {
      objective.push_back({id, *v});
      return;
    }
    auto it = row_index.find(row);
    if (it == row_index.end()) mps_error(line, "unknown row '" + row + "'");
    rows[it->second].terms.push_back({id, *v});
  };

  auto set_rhs = [&](const std::string& row, const std::string& value, std::size_t line) {
    auto v = parse_double(value);
    if (!v) mps_error(line, "bad number '" + value + "'");
    if (row == objective_row) {
      objective_rhs = *v;
      return;
    }
    auto it = row_index.find(row);
    if (it == row_index.end()) mps_error(line, "unknown row '" + row + "'");
    rows[it->second].rhs = *v;
  };

  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (line.empty() || line.front() == '*') continue;
    const auto tok = tokenize(line);
    if (tok.empty()) continue;
    if (!std::isspace(static_cast<unsigned char>(line.front()))) {
      const std::string& head = tok[0];
      if (head == "NAME") section = Section::kName;
      else if (head == "ROWS") section = Section::kRows;
      else if (head == "COLUMNS") section = Section::kColumns;
      else if (head == "RHS") section = Section::kRhs;
      else if (head == "BOUNDS") section = Section::kBounds;
      else if (head == "ENDATA") { section = Section::kEnd; break; }
      else if (head == "OBJSENSE") {
        section = Section::kObjSense;
        if (tok.size() > 1 && tok[1] != "MIN" && tok[1] != "MINIMIZE") mps_error(line_no, "only minimisation supported");
      } else mps_error(line_no, "unsupported section '" + head + "'");
      continue;
    }
    switch (section) {
      case Section::kRows: {
        if (tok.size() != 2) mps_error(line_no, "expected row type and name");
        const std::string& type = tok[0];
        if (type == "N") {
          if (objective_row.empty()) objective_row = tok[1];
          continue;
        }
        Sense sense;
        if (type == "L") sense = Sense::kLessEqual;
        else if (type == "G") sense = Sense::kGreaterEqual;
        else if (type == "E") sense = Sense::kEqual;
        else mps_error(line_no, "unknown row type '" + type + "'");
        if (row_index.contains(tok[1])) mps_error(line_no, "duplicate row '" + tok[1] + "'");
        row_index.emplace(tok[1], rows.size());
        rows.push_back(RawRow{tok[1], sense, {}, 0.0});
        break;
      }
      case Section::kColumns: {
        if (tok.size() >= 3 && tok[1] == "'MARKER'") {
          if (tok[2] == "'INTORG'") integer_block = true;
          else if (tok[2] == "'INTEND'") integer_block = false;
          else mps_error(line_no, "unknown marker " + tok[2]);
          continue;
        }
        if (tok.size() != 3 && tok.size() != 5) mps_error(line_no, "malformed COLUMNS entry");
        const std::size_t col = column(tok[0], line_no);
        add_entry(col, tok[1], tok[2], line_no);
        if (tok.size() == 5) add_entry(col, tok[3], tok[4], line_no);
        break;
      }
      case Section::kRhs: {
        const std::size_t offset = tok.size() % 2 == 1 ? 1 : 0;
        if (tok.size() < 2 + offset) mps_error(line_no, "malformed RHS entry");
        for (std::size_t k = offset; k + 1 < tok.size(); k += 2) set_rhs(tok[k], tok[k + 1], line_no);
        break;
      }
      case Section::kBounds: {
        if (tok.size() < 3) mps_error(line_no, "malformed BOUNDS entry");
        const std::string& type = tok[0];
        RawCol& c = cols[column(tok[2], line_no)];
        std::optional<double> value;
        if (tok.size() >= 4) {
          value = parse_double(tok[3]);
          if (!value) mps_error(line_no, "bad number '" + tok[3] + "'");
        }
        auto need = [&]() {
          if (!value) mps_error(line_no, "bound " + type + " needs a value");
          return *value;
        };
        if (type == "UP") { c.upper = need(); c.upper_set = true; }
        else if (type == "LO") { c.lower = need(); c.has_lower = true; }
        else if (type == "FX") { c.lower = c.upper = need(); c.has_lower = c.upper_set = true; }
        else if (type == "FR") { c.lower = -kInfinity; c.upper = kInfinity; c.has_lower = c.upper_set = true; }
        else if (type == "MI") { c.lower = -kInfinity; c.has_lower = true; }
        else if (type == "PL") { c.upper = kInfinity; c.upper_set = true; }
        else if (type == "BV") { c.integer = true; c.lower = 0.0; c.upper = 1.0; c.has_lower = c.upper_set = true; }
        else mps_error(line_no, "unsupported bound type '" + type + "'");
        break;
      }
      case Section::kObjSense:
        // Free-format files put the sense on its own line.
        if (tok[0] != "MIN" && tok[0] != "MINIMIZE") mps_error(line_no, "only minimisation supported");
        break;
      case Section::kName:
      case Section::kNone:
      case Section::kEnd:
        mps_error(line_no, "data outside a section");
    }
  }
  if (section != Section::kEnd) throw ModelError("MPS text lacks ENDATA");

  MilpModel model;
  for (RawCol& c : cols) {
    if (c.integer) {
      if (!c.upper_set) c.upper = 1.0;
      if (c.lower < 0.0 || c.upper > 1.0) {
        throw ModelError("column '" + c.name + "': general integers are not supported");
      }
      model.add_variable(original(c.name), VarKind::kBinary, c.lower, c.upper);
    } else {
      model.add_variable(original(c.name), VarKind::kContinuous, c.lower, c.upper);
    }
  }
  for (RawRow& r : rows) {
    const std::string name = original(r.name);
    std::string tag = name;
    if (auto hash = tag.find('#'); hash != std::string::npos) tag.resize(hash);
    model.add_constraint(std::move(r.terms), r.sense, r.rhs, std::move(tag), name);
  }
  for (const Term& t : objective) model.add_objective_term(t.var, t.coef);
  model.add_objective_constant(-objective_rhs);
  model.canonicalize();
  return model;
}

ImportedSolution import_solution(const MilpModel& model, std::string_view text,
                                 const NameTable* names) {
  ImportedSolution out;
  out.values.assign(model.num_variables(), 0.0);
  std::vector<bool> seen(model.num_variables(), false);

  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    const auto tok = tokenize(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok.size() != 2) {
      throw ModelError("solution line " + std::to_string(line_no) + ": expected 'name value'");
    }
    std::optional<VarId> id;
    if (names != nullptr) {
      auto it = names->to_original.find(tok[0]);
      if (it != names->to_original.end()) id = model.find(it->second);
    }
    if (!id) id = model.find(tok[0]);
    if (!id) {
      throw ModelError("solution line " + std::to_string(line_no) + ": unknown variable '" +
                       tok[0] + "'");
    }
    auto value = parse_double(tok[1]);
    if (!value || !std::isfinite(*value)) {
      throw ModelError("solution line " + std::to_string(line_no) + ": non-numeric value '" +
                       tok[1] + "'");
    }
    const auto k = static_cast<std::size_t>(id->index);
    if (seen[k]) out.warnings.push_back("variable '" + tok[0] + "' listed more than once");
    seen[k] = true;
    out.values[k] = *value;
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) {
      ++out.missing;
      out.warnings.push_back("variable '" + model.variables()[k].name + "' missing; set to 0");
    }
  }
  return out;
}

std::string format_solution(const MilpModel& model, std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < model.num_variables(); ++i) {
    out += model.variables()[i].name;
    out += ' ';
    out += format_number(values[i]);
    out += '\n';
  }
  return out;
}

}  // namespace ecopark::milp
