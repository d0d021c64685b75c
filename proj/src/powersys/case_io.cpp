#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <numbers>
#include <queue>
#include <set>

#include "roa/powersys.hpp"

namespace roa::power {

namespace {

int parse_int(std::string_view text, std::string_view spec) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw PreconditionError(fmt::format("bad contingency '{}': '{}' is not an integer", spec, text));
  }
  return value;
}

template <typename T>
T required(const nlohmann::json& obj, const char* key, std::string_view where) {
  if (!obj.is_object() || !obj.contains(key)) throw SchemaError(fmt::format("{}: missing \"{}\"", where, key));
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(fmt::format("{}: \"{}\" has the wrong type", where, key));
  }
}

template <typename T>
T optional_value(const nlohmann::json& obj, const char* key, T fallback, std::string_view where) {
  if (!obj.contains(key)) return fallback;
  return required<T>(obj, key, where);
}

BusType parse_bus_type(const std::string& s, std::string_view where) {
  if (s == "slack") return BusType::slack;
  if (s == "pv" || s == "PV") return BusType::pv;
  if (s == "pq" || s == "PQ") return BusType::pq;
  throw SchemaError(fmt::format("{}: unknown bus type '{}'", where, s));
}

std::string bus_type_name(BusType t) {
  switch (t) {
    case BusType::slack:
      return "slack";
    case BusType::pv:
      return "pv";
    case BusType::pq:
      break;
  }
  return "pq";
}

}  // namespace

Contingency Contingency::parse(std::string_view spec) {
  // bus:<id>,line:<a>-<b>
  const auto comma = spec.find(',');
  if (comma == std::string_view::npos) {
    throw PreconditionError(fmt::format("bad contingency '{}': expected bus:<id>,line:<a>-<b>", spec));
  }
  const std::string_view bus_part = spec.substr(0, comma);
  const std::string_view line_part = spec.substr(comma + 1);
  if (!bus_part.starts_with("bus:") || !line_part.starts_with("line:")) {
    throw PreconditionError(fmt::format("bad contingency '{}': expected bus:<id>,line:<a>-<b>", spec));
  }
  const std::string_view ends = line_part.substr(5);
  const auto dash = ends.find('-');
  if (dash == std::string_view::npos) {
    throw PreconditionError(fmt::format("bad contingency '{}': line needs <a>-<b>", spec));
  }
  Contingency c;
  c.faulted_bus = parse_int(bus_part.substr(4), spec);
  c.from = parse_int(ends.substr(0, dash), spec);
  c.to = parse_int(ends.substr(dash + 1), spec);
  if (c.faulted_bus != c.from && c.faulted_bus != c.to) {
    throw PreconditionError(fmt::format("bad contingency '{}': faulted bus must be an end of the tripped line", spec));
  }
  return c;
}

std::string Contingency::spec() const { return fmt::format("bus:{},line:{}", faulted_bus, line()); }
std::string Contingency::line() const { return fmt::format("{}-{}", from, to); }

std::optional<std::size_t> PowerCase::find_bus(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return i;
  }
  return std::nullopt;
}

std::size_t PowerCase::bus_index(int id) const {
  if (auto i = find_bus(id)) return *i;
  throw PreconditionError(fmt::format("unknown bus {}", id));
}

std::optional<std::size_t> PowerCase::find_branch(int a, int b) const {
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const Branch& br = branches[k];
    if (br.in_service && ((br.from == a && br.to == b) || (br.from == b && br.to == a))) return k;
  }
  return std::nullopt;
}

double PowerCase::omega_s() const { return 2.0 * std::numbers::pi * frequency_hz; }

bool is_connected(const PowerCase& c, std::optional<std::size_t> skip_branch) {
  if (c.buses.empty()) return false;
  std::vector<std::vector<std::size_t>> adj(c.buses.size());
  for (std::size_t k = 0; k < c.branches.size(); ++k) {
    const Branch& br = c.branches[k];
    if (!br.in_service || (skip_branch && *skip_branch == k)) continue;
    const auto a = c.bus_index(br.from);
    const auto b = c.bus_index(br.to);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(c.buses.size(), false);
  std::queue<std::size_t> todo;
  todo.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!todo.empty()) {
    const auto u = todo.front();
    todo.pop();
    for (auto v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        todo.push(v);
      }
    }
  }
  return reached == c.buses.size();
}

void validate_case(const PowerCase& c) {
  if (!(c.base_mva > 0.0)) throw SchemaError("base_mva must be positive");
  if (!(c.frequency_hz > 0.0)) throw SchemaError("frequency_hz must be positive");
  if (c.buses.empty()) throw SchemaError("case has no buses");

  std::set<int> ids;
  std::size_t slacks = 0;
  for (const Bus& b : c.buses) {
    if (!ids.insert(b.id).second) throw SchemaError(fmt::format("duplicate bus id {}", b.id));
    if (!(b.v > 0.0)) throw SchemaError(fmt::format("bus {}: voltage magnitude must be positive", b.id));
    if (b.type == BusType::slack) ++slacks;
  }
  if (slacks == 0) throw MissingSlackError("case has no slack bus");
  if (slacks > 1) throw SchemaError(fmt::format("case has {} slack buses; exactly one is allowed", slacks));

  for (const Branch& br : c.branches) {
    if (!ids.contains(br.from) || !ids.contains(br.to)) {
      throw SchemaError(fmt::format("branch {}-{} references an unknown bus", br.from, br.to));
    }
    if (br.from == br.to) throw SchemaError(fmt::format("branch {}-{} is a self loop", br.from, br.to));
    if (br.r == 0.0 && br.x == 0.0) throw SchemaError(fmt::format("branch {}-{} has zero impedance", br.from, br.to));
    if (!(br.ratio > 0.0)) throw SchemaError(fmt::format("branch {}-{}: tap ratio must be positive", br.from, br.to));
  }

  if (c.machines.empty()) throw SchemaError("case has no machines");
  std::set<int> machine_buses;
  for (const Machine& m : c.machines) {
    if (!ids.contains(m.bus)) throw SchemaError(fmt::format("machine references unknown bus {}", m.bus));
    if (!machine_buses.insert(m.bus).second) throw SchemaError(fmt::format("more than one machine at bus {}", m.bus));
    if (!(m.h > 0.0)) throw SchemaError(fmt::format("machine at bus {}: H must be positive", m.bus));
    if (!(m.xd_prime > 0.0)) throw SchemaError(fmt::format("machine at bus {}: x'd must be positive", m.bus));
    if (m.d < 0.0) throw SchemaError(fmt::format("machine at bus {}: damping must be non-negative", m.bus));
    const BusType type = c.buses[c.bus_index(m.bus)].type;
    if (type == BusType::pq) throw SchemaError(fmt::format("machine at bus {} sits on a PQ bus", m.bus));
  }
  for (const Bus& b : c.buses) {
    if (b.type != BusType::pq && !machine_buses.contains(b.id)) {
      throw SchemaError(fmt::format("voltage-controlled bus {} has no machine", b.id));
    }
  }

  if (!is_connected(c)) throw DisconnectedNetworkError("the in-service branch graph is not connected");

  for (const Contingency& k : c.contingencies) validate_contingency(c, k);
}

void validate_contingency(const PowerCase& c, const Contingency& k) {
  if (!c.find_bus(k.faulted_bus)) throw PreconditionError(fmt::format("contingency {}: unknown bus", k.spec()));
  if (!c.find_branch(k.from, k.to)) {
    throw PreconditionError(fmt::format("contingency {}: no in-service branch {}", k.spec(), k.line()));
  }
  if (k.faulted_bus != k.from && k.faulted_bus != k.to) {
    throw PreconditionError(fmt::format("contingency {}: faulted bus is not an end of the tripped branch", k.spec()));
  }
}

PowerCase parse_case(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("case file must hold a JSON object");
  PowerCase c;
  c.name = optional_value<std::string>(j, "name", "case", "case");
  c.base_mva = required<double>(j, "base_mva", "case");
  c.frequency_hz = required<double>(j, "frequency_hz", "case");

  for (const char* key : {"buses", "branches", "machines"}) {
    if (!j.contains(key) || !j.at(key).is_array()) throw SchemaError(fmt::format("case: \"{}\" must be an array", key));
  }
  for (const auto& jb : j.at("buses")) {
    Bus b;
    b.id = required<int>(jb, "id", "bus");
    const std::string where = fmt::format("bus {}", b.id);
    b.type = parse_bus_type(required<std::string>(jb, "type", where), where);
    b.v = required<double>(jb, "v", where);
    b.p_load = optional_value<double>(jb, "p_load", 0.0, where);
    b.q_load = optional_value<double>(jb, "q_load", 0.0, where);
    b.g_shunt = optional_value<double>(jb, "g_shunt", 0.0, where);
    b.b_shunt = optional_value<double>(jb, "b_shunt", 0.0, where);
    c.buses.push_back(b);
  }
  for (const auto& jb : j.at("branches")) {
    Branch br;
    br.from = required<int>(jb, "from", "branch");
    br.to = required<int>(jb, "to", "branch");
    const std::string where = fmt::format("branch {}-{}", br.from, br.to);
    br.r = required<double>(jb, "r", where);
    br.x = required<double>(jb, "x", where);
    br.b = optional_value<double>(jb, "b", 0.0, where);
    br.ratio = optional_value<double>(jb, "ratio", 1.0, where);
    br.in_service = optional_value<bool>(jb, "in_service", true, where);
    c.branches.push_back(br);
  }
  for (const auto& jm : j.at("machines")) {
    Machine m;
    m.bus = required<int>(jm, "bus", "machine");
    const std::string where = fmt::format("machine at bus {}", m.bus);
    m.h = required<double>(jm, "h", where);
    m.xd_prime = required<double>(jm, "xd_prime", where);
    m.d = optional_value<double>(jm, "d", 0.0, where);
    m.p_mech = optional_value<double>(jm, "p_mech", 0.0, where);
    c.machines.push_back(m);
  }
  if (j.contains("contingencies")) {
    for (const auto& jc : j.at("contingencies")) {
      Contingency k;
      k.faulted_bus = required<int>(jc, "faulted_bus", "contingency");
      const auto ends = required<std::vector<int>>(jc, "tripped_branch", "contingency");
      if (ends.size() != 2) throw SchemaError("contingency: tripped_branch needs two bus ids");
      k.from = ends[0];
      k.to = ends[1];
      c.contingencies.push_back(k);
    }
  }
  validate_case(c);
  return c;
}

PowerCase load_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CaseError(fmt::format("cannot open case file {}", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_case(j);
}

nlohmann::json case_to_json(const PowerCase& c) {
  nlohmann::json buses = nlohmann::json::array();
  for (const Bus& b : c.buses) {
    buses.push_back({{"id", b.id},
                     {"type", bus_type_name(b.type)},
                     {"v", b.v},
                     {"p_load", b.p_load},
                     {"q_load", b.q_load},
                     {"g_shunt", b.g_shunt},
                     {"b_shunt", b.b_shunt}});
  }
  nlohmann::json branches = nlohmann::json::array();
  for (const Branch& br : c.branches) {
    branches.push_back({{"from", br.from},
                        {"to", br.to},
                        {"r", br.r},
                        {"x", br.x},
                        {"b", br.b},
                        {"ratio", br.ratio},
                        {"in_service", br.in_service}});
  }
  nlohmann::json machines = nlohmann::json::array();
  for (const Machine& m : c.machines) {
    machines.push_back({{"bus", m.bus}, {"h", m.h}, {"d", m.d}, {"xd_prime", m.xd_prime}, {"p_mech", m.p_mech}});
  }
  nlohmann::json contingencies = nlohmann::json::array();
  for (const Contingency& k : c.contingencies) {
    contingencies.push_back({{"faulted_bus", k.faulted_bus}, {"tripped_branch", {k.from, k.to}}});
  }
  return {{"name", c.name},         {"base_mva", c.base_mva}, {"frequency_hz", c.frequency_hz},
          {"buses", buses},         {"branches", branches},   {"machines", machines},
          {"contingencies", contingencies}};
}

}  // namespace roa::power
