#include "scacopf/opf/score.hpp"

#include <cstdio>

namespace scacopf::opf {

namespace {

std::string describe(const std::string& case_id, const std::string& what, double value, double lo, double hi) {
  char buf[160];
  std::snprintf(buf, sizeof buf, ": %s = %.10g outside [%.10g, %.10g]", what.c_str(), value, lo, hi);
  return case_id + buf;
}

bool dimensions_ok(const grid::Network& net, const OperatingPoint& pt) {
  const auto nb = net.buses.size(), ng = net.generators.size(), ne = net.branches.size();
  return pt.v.size() == nb && pt.theta.size() == nb && pt.sp_plus.size() == nb && pt.sp_minus.size() == nb &&
         pt.sq_plus.size() == nb && pt.sq_minus.size() == nb && pt.p.size() == ng && pt.q.size() == ng &&
         pt.sigma_from.size() == ne && pt.sigma_to.size() == ne;
}

}  // namespace

double ScoreBreakdown::contingency_total() const {
  double s = 0.0;
  for (const auto& c : contingencies)
    if (c.present) s += c.penalty.total();
  return s;
}

std::vector<std::string> bound_diagnostics(const grid::Network& net, const grid::CaseTopology& topo,
                                           const OperatingPoint& pt, double tol) {
  std::vector<std::string> out;
  if (!dimensions_ok(net, pt)) {
    out.push_back(pt.case_id + ": dimensions do not match the network");
    return out;
  }
  for (std::size_t n = 0; n < net.buses.size(); ++n) {
    if (pt.v[n] < topo.v_min[n] - tol || pt.v[n] > topo.v_max[n] + tol)
      out.push_back(describe(pt.case_id, "v[" + net.buses[n].id + "]", pt.v[n], topo.v_min[n], topo.v_max[n]));
    for (const auto* s : {&pt.sp_plus, &pt.sp_minus, &pt.sq_plus, &pt.sq_minus})
      if ((*s)[n] < -tol) {
        out.push_back(pt.case_id + ": negative balance slack at bus " + net.buses[n].id);
        break;
      }
  }
  for (auto g : topo.generators) {
    const auto& gen = net.generators[g];
    if (pt.p[g] < gen.p_min - tol || pt.p[g] > gen.p_max + tol)
      out.push_back(describe(pt.case_id, "p[" + gen.id + "]", pt.p[g], gen.p_min, gen.p_max));
    if (pt.q[g] < gen.q_min - tol || pt.q[g] > gen.q_max + tol)
      out.push_back(describe(pt.case_id, "q[" + gen.id + "]", pt.q[g], gen.q_min, gen.q_max));
  }
  for (auto e : topo.branches)
    if (pt.sigma_from[e] < -tol || pt.sigma_to[e] < -tol)
      out.push_back(pt.case_id + ": negative thermal slack on branch " + net.branches[e].id);
  return out;
}

ScoreBreakdown score_solution(const grid::Network& net, const OperatingPoint& base,
                              const std::map<std::string, OperatingPoint>& contingency_points,
                              PenaltyMode mode) {
  ScoreBreakdown out;
  out.mode = mode;
  const auto base_topo = grid::base_topology(net);
  if (!dimensions_ok(net, base)) throw std::invalid_argument("base point dimensions do not match the network");
  out.diagnostics = bound_diagnostics(net, base_topo, base);
  out.generation_cost = generation_cost(net, base);
  out.base_penalty = case_penalty(net, base_topo, base, mode);
  if (!net.contingencies.empty()) out.contingency_weight = 1.0 / static_cast<double>(net.contingencies.size());

  for (std::size_t k = 0; k < net.contingencies.size(); ++k) {
    ContingencyScore cs;
    cs.id = net.contingencies[k].id;
    const auto it = contingency_points.find(cs.id);
    if (it == contingency_points.end() || !dimensions_ok(net, it->second)) {
      out.partial = true;
      if (it != contingency_points.end()) out.diagnostics.push_back(cs.id + ": dimensions do not match the network");
    } else {
      const auto topo = grid::apply_contingency(net, k);
      auto d = bound_diagnostics(net, topo, it->second);
      out.diagnostics.insert(out.diagnostics.end(), d.begin(), d.end());
      cs.present = true;
      cs.penalty = case_penalty(net, topo, it->second, mode);
    }
    out.contingencies.push_back(std::move(cs));
  }
  for (const auto& [id, pt] : contingency_points)
    if (!net.contingency_index(id)) out.diagnostics.push_back(id + ": not a contingency of this network");

  out.total = out.generation_cost + out.base_penalty.total() + out.contingency_weight * out.contingency_total();
  return out;
}

}  // namespace scacopf::opf
