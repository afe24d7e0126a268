#include <algorithm>
#include <limits>

#include "scacopf/grid/network.hpp"

namespace scacopf::grid {

CaseTopology base_topology(const Network& net) {
  CaseTopology t;
  t.generator_active.assign(net.generators.size(), 1);
  t.branch_active.assign(net.branches.size(), 1);
  for (std::size_t g = 0; g < net.generators.size(); ++g) t.generators.push_back(g);
  for (std::size_t e = 0; e < net.branches.size(); ++e) t.branches.push_back(e);
  for (const auto& b : net.buses) {
    t.v_min.push_back(b.v_min_base);
    t.v_max.push_back(b.v_max_base);
  }
  for (const auto& e : net.branches) t.rating.push_back(e.rate_base);
  return t;
}

CaseTopology apply_contingency(const Network& net, std::size_t contingency_index) {
  if (contingency_index >= net.contingencies.size())
    throw NetworkError("unknown contingency index " + std::to_string(contingency_index));
  const auto& k = net.contingencies[contingency_index];
  CaseTopology t;
  t.contingency = contingency_index;
  t.generator_active.assign(net.generators.size(), 1);
  t.branch_active.assign(net.branches.size(), 1);
  if (k.kind == ContingencyKind::generator)
    t.generator_active[k.element_index] = 0;
  else
    t.branch_active[k.element_index] = 0;
  for (std::size_t g = 0; g < net.generators.size(); ++g)
    if (t.generator_active[g]) t.generators.push_back(g);
  for (std::size_t e = 0; e < net.branches.size(); ++e)
    if (t.branch_active[e]) t.branches.push_back(e);
  for (const auto& b : net.buses) {
    t.v_min.push_back(b.v_min_emer);
    t.v_max.push_back(b.v_max_emer);
  }
  for (const auto& e : net.branches) t.rating.push_back(e.rate_emer);
  return t;
}

CaseTopology apply_contingency(const Network& net, std::string_view id) {
  if (id == kBaseCaseId) return base_topology(net);
  const auto k = net.contingency_index(id);
  if (!k) throw NetworkError("unknown contingency '" + std::string(id) + "'");
  return apply_contingency(net, *k);
}

std::vector<std::size_t> CaseTopology::controlled_buses(const Network& net) const {
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < net.buses.size(); ++n)
    if (std::any_of(net.gens_at_bus[n].begin(), net.gens_at_bus[n].end(),
                    [&](std::size_t g) { return generator_active[g] != 0; }))
      out.push_back(n);
  return out;
}

std::vector<std::size_t> CaseTopology::active_generators_at(const Network& net,
                                                            std::size_t n) const {
  std::vector<std::size_t> out;
  for (auto g : net.gens_at_bus[n])
    if (generator_active[g]) out.push_back(g);
  return out;
}

DeltaBounds delta_bounds(const Network& net, const CaseTopology& topo,
                         std::span<const double> p_base) {
  DeltaBounds out;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (auto g : topo.generators) {
    const auto& gen = net.generators[g];
    if (!(gen.drop_const > 0.0)) continue;
    any = true;
    lo = std::min(lo, (gen.p_min - p_base[g]) / gen.drop_const);
    hi = std::max(hi, (gen.p_max - p_base[g]) / gen.drop_const);
  }
  if (!any) {
    out.rigid = true;
    return out;
  }
  // p_base inside its bounds keeps lo <= 0 <= hi; clamp guards round-off.
  out.lower = std::min(lo, 0.0);
  out.upper = std::max(hi, 0.0);
  return out;
}

}  // namespace scacopf::grid
