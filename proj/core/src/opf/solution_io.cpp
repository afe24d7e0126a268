#include "scacopf/opf/solution_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace scacopf::opf {

using nlohmann::json;

namespace {

double number(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return 0.0;
  if (!it->is_number()) throw SolutionError(where + ": field '" + key + "' must be a number");
  return it->get<double>();
}

std::string id_of(const json& obj, const std::string& where) {
  const auto it = obj.find("id");
  if (it == obj.end()) throw SolutionError(where + ": record without 'id'");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw SolutionError(where + ": 'id' must be a string or integer");
}

const json& array_field(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end() || !it->is_array()) throw SolutionError(std::string("solution: missing array '") + key + "'");
  return *it;
}

json penalty_json(const CasePenalty& p) {
  return {{"thermal", p.thermal}, {"active", p.active}, {"reactive", p.reactive}, {"total", p.total()}};
}

}  // namespace

std::string solution_to_json(const grid::Network& net, const OperatingPoint& pt, const CasePenalty* penalty) {
  const auto topo = pt.case_id == grid::kBaseCaseId ? grid::base_topology(net) : grid::apply_contingency(net, pt.case_id);
  const bool contingency = !topo.is_base();
  json doc;
  doc["case"] = pt.case_id;
  json buses = json::array();
  const auto controlled = topo.controlled_buses(net);
  std::vector<char> is_controlled(net.buses.size(), 0);
  for (auto n : controlled) is_controlled[n] = 1;
  for (std::size_t n = 0; n < net.buses.size(); ++n) {
    json b = {{"id", net.buses[n].id}, {"v", pt.v[n]}, {"theta", pt.theta[n]},
              {"sp_plus", pt.sp_plus[n]}, {"sp_minus", pt.sp_minus[n]},
              {"sq_plus", pt.sq_plus[n]}, {"sq_minus", pt.sq_minus[n]}};
    if (contingency && is_controlled[n]) {
      b["nu_plus"] = pt.nu_plus[n];
      b["nu_minus"] = pt.nu_minus[n];
    }
    buses.push_back(std::move(b));
  }
  json gens = json::array();
  for (auto g : topo.generators) {
    json r = {{"id", net.generators[g].id}, {"p", pt.p[g]}, {"q", pt.q[g]}};
    if (contingency) {
      r["rho_plus"] = pt.rho_plus[g];
      r["rho_minus"] = pt.rho_minus[g];
    }
    gens.push_back(std::move(r));
  }
  json branches = json::array();
  for (auto e : topo.branches)
    branches.push_back({{"id", net.branches[e].id}, {"sigma_from", pt.sigma_from[e]}, {"sigma_to", pt.sigma_to[e]}});
  doc["buses"] = std::move(buses);
  doc["generators"] = std::move(gens);
  doc["branches"] = std::move(branches);
  doc["delta"] = pt.delta;
  if (penalty) doc["penalty"] = penalty_json(*penalty);
  return doc.dump(2) + "\n";
}

OperatingPoint parse_solution(const grid::Network& net, std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SolutionError(std::string("solution: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SolutionError("solution: top level must be an object");
  const auto cit = doc.find("case");
  if (cit == doc.end() || !cit->is_string()) throw SolutionError("solution: missing string field 'case'");
  const auto case_id = cit->get<std::string>();
  if (case_id != grid::kBaseCaseId && !net.contingency_index(case_id))
    throw SolutionError("solution: unknown case '" + case_id + "'");

  auto pt = empty_point(net, case_id);
  for (const auto& b : array_field(doc, "buses")) {
    const auto id = id_of(b, "bus");
    const auto n = net.bus_index(id);
    if (!n) throw SolutionError("solution: unknown bus '" + id + "'");
    const std::string where = "bus " + id;
    if (!b.contains("v")) throw SolutionError(where + ": missing 'v'");
    pt.v[*n] = number(b, "v", where);
    pt.theta[*n] = number(b, "theta", where);
    pt.sp_plus[*n] = number(b, "sp_plus", where);
    pt.sp_minus[*n] = number(b, "sp_minus", where);
    pt.sq_plus[*n] = number(b, "sq_plus", where);
    pt.sq_minus[*n] = number(b, "sq_minus", where);
    pt.nu_plus[*n] = number(b, "nu_plus", where);
    pt.nu_minus[*n] = number(b, "nu_minus", where);
  }
  for (const auto& g : array_field(doc, "generators")) {
    const auto id = id_of(g, "generator");
    const auto i = net.generator_index(id);
    if (!i) throw SolutionError("solution: unknown generator '" + id + "'");
    const std::string where = "generator " + id;
    pt.p[*i] = number(g, "p", where);
    pt.q[*i] = number(g, "q", where);
    pt.rho_plus[*i] = number(g, "rho_plus", where);
    pt.rho_minus[*i] = number(g, "rho_minus", where);
  }
  for (const auto& e : array_field(doc, "branches")) {
    const auto id = id_of(e, "branch");
    const auto i = net.branch_index(id);
    if (!i) throw SolutionError("solution: unknown branch '" + id + "'");
    const std::string where = "branch " + id;
    pt.sigma_from[*i] = number(e, "sigma_from", where);
    pt.sigma_to[*i] = number(e, "sigma_to", where);
  }
  pt.delta = number(doc, "delta", "solution");
  return pt;
}

OperatingPoint load_solution(const grid::Network& net, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SolutionError("cannot open solution file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_solution(net, ss.str());
}

std::string breakdown_to_json(const ScoreBreakdown& s) {
  json doc;
  doc["mode"] = s.mode == PenaltyMode::piecewise ? "piecewise" : "quadratic";
  doc["generation_cost"] = s.generation_cost;
  doc["base_penalty"] = penalty_json(s.base_penalty);
  doc["contingency_weight"] = s.contingency_weight;
  json cs = json::array();
  for (const auto& c : s.contingencies) {
    json r = {{"id", c.id}, {"present", c.present}};
    if (c.present) r["penalty"] = penalty_json(c.penalty);
    cs.push_back(std::move(r));
  }
  doc["contingencies"] = std::move(cs);
  doc["total"] = s.total;
  doc["partial"] = s.partial;
  doc["diagnostics"] = s.diagnostics;
  return doc.dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string solution_file_name(std::string_view case_id) { return "solution_" + std::string(case_id) + ".json"; }

}  // namespace scacopf::opf
