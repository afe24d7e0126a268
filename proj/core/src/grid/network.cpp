#include "scacopf/grid/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace scacopf::grid {

using nlohmann::json;

double PenaltyCurve::operator()(double x) const {
  if (x <= 0.0) return 0.0;
  if (x <= bin1_width) return slope1 * x;
  return slope1 * bin1_width + slope2 * (x - bin1_width);
}

std::string_view to_string(ContingencyKind kind) {
  return kind == ContingencyKind::generator ? "generator" : "branch";
}

namespace {

template <class T>
std::optional<std::size_t> find_by_id(const std::vector<T>& items, std::string_view id) {
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].id == id) return i;
  return std::nullopt;
}

std::string id_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw NetworkError(where + ": missing field '" + key + "'");
  const auto& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw NetworkError(where + ": field '" + key + "' must be a string or integer id");
}

double num(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw NetworkError(where + ": missing field '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw NetworkError(where + ": field '" + key + "' must be numeric");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw NetworkError(where + ": field '" + key + "' is not finite");
  return x;
}

double num_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? num(j, key, where) : fallback;
}

PenaltyCurve parse_curve(const json& j, const std::string& where) {
  PenaltyCurve c;
  c.slope1 = num(j, "slope1", where);
  c.slope2 = num(j, "slope2", where);
  c.bin1_width = num(j, "bin1_width", where);
  return c;
}

}  // namespace

std::optional<std::size_t> Network::bus_index(std::string_view id) const {
  return find_by_id(buses, id);
}
std::optional<std::size_t> Network::generator_index(std::string_view id) const {
  return find_by_id(generators, id);
}
std::optional<std::size_t> Network::branch_index(std::string_view id) const {
  return find_by_id(branches, id);
}
std::optional<std::size_t> Network::contingency_index(std::string_view id) const {
  return find_by_id(contingencies, id);
}

Network parse_network(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw NetworkError(std::string("parse error: ") + e.what());
  }
  if (!doc.is_object()) throw NetworkError("parse error: top level must be an object");
  for (const char* key : {"buses", "generators", "branches", "penalties", "contingencies"})
    if (!doc.contains(key)) throw NetworkError(std::string("missing top-level key '") + key + "'");

  Network net;
  net.base_mva = num_or(doc, "base_mva", 100.0, "network");

  for (const auto& jb : doc.at("buses")) {
    Bus b;
    b.id = id_field(jb, "id", "bus");
    const std::string where = "bus " + b.id;
    b.v_min_base = num(jb, "v_min_base", where);
    b.v_max_base = num(jb, "v_max_base", where);
    b.v_min_emer = num(jb, "v_min_emer", where);
    b.v_max_emer = num(jb, "v_max_emer", where);
    b.p_load = num_or(jb, "p_load", 0.0, where);
    b.q_load = num_or(jb, "q_load", 0.0, where);
    b.g_shunt = num_or(jb, "g_shunt", 0.0, where);
    b.b_shunt = num_or(jb, "b_shunt", 0.0, where);
    net.buses.push_back(std::move(b));
  }

  for (const auto& jg : doc.at("generators")) {
    Generator g;
    g.id = id_field(jg, "id", "generator");
    const std::string where = "generator " + g.id;
    g.bus = id_field(jg, "bus", where);
    g.p_min = num(jg, "p_min", where);
    g.p_max = num(jg, "p_max", where);
    g.q_min = num(jg, "q_min", where);
    g.q_max = num(jg, "q_max", where);
    g.drop_const = num_or(jg, "drop_const", 0.0, where);
    if (jg.contains("cost")) {
      const auto& jc = jg.at("cost");
      g.cost.c0 = num_or(jc, "c0", 0.0, where);
      g.cost.c1 = num_or(jc, "c1", 0.0, where);
      g.cost.c2 = num_or(jc, "c2", 0.0, where);
    }
    net.generators.push_back(std::move(g));
  }

  for (const auto& je : doc.at("branches")) {
    Branch e;
    e.id = id_field(je, "id", "branch");
    const std::string where = "branch " + e.id;
    e.from_bus = id_field(je, "from_bus", where);
    e.to_bus = id_field(je, "to_bus", where);
    e.g_series = num(je, "g_series", where);
    e.b_series = num(je, "b_series", where);
    e.b_charge = num_or(je, "b_charge", 0.0, where);
    e.rate_base = num(je, "rate_base", where);
    e.rate_emer = num_or(je, "rate_emer", e.rate_base, where);
    net.branches.push_back(std::move(e));
  }

  const auto& jp = doc.at("penalties");
  for (const char* key : {"s", "p", "q"})
    if (!jp.contains(key)) throw NetworkError(std::string("penalties: missing curve '") + key + "'");
  net.penalty_s = parse_curve(jp.at("s"), "penalty s");
  net.penalty_p = parse_curve(jp.at("p"), "penalty p");
  net.penalty_q = parse_curve(jp.at("q"), "penalty q");

  for (const auto& jk : doc.at("contingencies")) {
    Contingency k;
    k.id = id_field(jk, "id", "contingency");
    const std::string where = "contingency " + k.id;
    if (!jk.contains("kind") || !jk.at("kind").is_string())
      throw NetworkError(where + ": missing field 'kind'");
    const auto kind = jk.at("kind").get<std::string>();
    if (kind == "generator")
      k.kind = ContingencyKind::generator;
    else if (kind == "branch")
      k.kind = ContingencyKind::branch;
    else
      throw NetworkError(where + ": kind must be 'generator' or 'branch'");
    k.element = id_field(jk, "element", where);
    net.contingencies.push_back(std::move(k));
  }

  validate(net);
  return net;
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NetworkError("cannot open network file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

namespace {

template <class T>
void require_unique_ids(const std::vector<T>& items, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& it : items)
    if (!seen.insert(it.id).second)
      throw NetworkError(std::string("duplicate ") + what + " id '" + it.id + "'");
}

}  // namespace

bool is_connected(const Network& net, std::span<const char> branch_active) {
  const std::size_t n = net.buses.size();
  if (n == 0) return true;
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t e = 0; e < net.branches.size(); ++e) {
    if (!branch_active[e]) continue;
    adj[net.branches[e].from].push_back(net.branches[e].to);
    adj[net.branches[e].to].push_back(net.branches[e].from);
  }
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (auto w : adj[u])
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
  }
  return count == n;
}

void validate(Network& net) {
  if (!(net.base_mva > 0.0)) throw NetworkError("base_mva must be positive");
  if (net.buses.empty()) throw NetworkError("network has no buses");
  if (net.generators.empty()) throw NetworkError("network has no generators");
  require_unique_ids(net.buses, "bus");
  require_unique_ids(net.generators, "generator");
  require_unique_ids(net.branches, "branch");
  require_unique_ids(net.contingencies, "contingency");

  for (const auto& b : net.buses) {
    if (!(0.0 < b.v_min_emer && b.v_min_emer <= b.v_min_base && b.v_min_base <= b.v_max_base &&
          b.v_max_base <= b.v_max_emer))
      throw NetworkError("bus " + b.id +
                         ": voltage bounds must satisfy 0 < v_min_emer <= v_min_base <= "
                         "v_max_base <= v_max_emer");
  }

  net.gens_at_bus.assign(net.buses.size(), {});
  for (std::size_t i = 0; i < net.generators.size(); ++i) {
    auto& g = net.generators[i];
    const auto bi = net.bus_index(g.bus);
    if (!bi) throw NetworkError("generator " + g.id + ": unknown bus '" + g.bus + "'");
    g.bus_index = *bi;
    if (!(g.p_min <= g.p_max)) throw NetworkError("generator " + g.id + ": p_min > p_max");
    if (!(g.q_min <= g.q_max)) throw NetworkError("generator " + g.id + ": q_min > q_max");
    if (!(g.drop_const >= 0.0)) throw NetworkError("generator " + g.id + ": drop_const < 0");
    if (!(g.cost.c2 >= 0.0)) throw NetworkError("generator " + g.id + ": cost is not convex");
    net.gens_at_bus[g.bus_index].push_back(i);
  }

  for (auto& e : net.branches) {
    const auto fi = net.bus_index(e.from_bus);
    const auto ti = net.bus_index(e.to_bus);
    if (!fi) throw NetworkError("branch " + e.id + ": unknown bus '" + e.from_bus + "'");
    if (!ti) throw NetworkError("branch " + e.id + ": unknown bus '" + e.to_bus + "'");
    if (*fi == *ti) throw NetworkError("branch " + e.id + ": from_bus equals to_bus");
    e.from = *fi;
    e.to = *ti;
    if (!(e.rate_base > 0.0)) throw NetworkError("branch " + e.id + ": rate_base must be positive");
    if (!(e.rate_base <= e.rate_emer))
      throw NetworkError("branch " + e.id + ": rate_base exceeds rate_emer");
  }

  for (const auto* c : {&net.penalty_s, &net.penalty_p, &net.penalty_q}) {
    if (!(0.0 < c->slope1 && c->slope1 <= c->slope2 && c->bin1_width > 0.0))
      throw NetworkError("penalty curve must satisfy 0 < slope1 <= slope2 and bin1_width > 0");
  }

  std::vector<char> all_active(net.branches.size(), 1);
  if (!is_connected(net, all_active)) throw NetworkError("network graph is not connected");

  for (auto& k : net.contingencies) {
    const std::string where = "contingency " + k.id;
    if (k.id == kBaseCaseId) throw NetworkError(where + ": id is reserved for the base case");
    if (k.kind == ContingencyKind::generator) {
      const auto gi = net.generator_index(k.element);
      if (!gi) throw NetworkError(where + ": unknown generator '" + k.element + "'");
      k.element_index = *gi;
      if (net.generators.size() < 2)
        throw NetworkError(where + ": outage leaves no generator in service");
    } else {
      const auto ei = net.branch_index(k.element);
      if (!ei) throw NetworkError(where + ": unknown branch '" + k.element + "'");
      k.element_index = *ei;
      std::vector<char> active(net.branches.size(), 1);
      active[*ei] = 0;
      if (!is_connected(net, active)) throw NetworkError(where + ": outage islands the network");
    }
  }
}

}  // namespace scacopf::grid
