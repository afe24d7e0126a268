#include "scacopf/opf/case_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "scacopf/opf/blocks.hpp"
#include "scacopf/opf/flows.hpp"

namespace scacopf::opf {

using grid::CaseTopology;
using grid::Network;
using nlp::kInf;

namespace {

constexpr double kColdSlack = 1e-4;
constexpr double kMinResponse = 1e-6;

std::string named(const char* prefix, const std::string& id) { return std::string(prefix) + "[" + id + "]"; }

std::optional<long long> as_integer(const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) return std::nullopt;
  return v;
}

bool id_less(const std::string& a, const std::string& b) {
  const auto ia = as_integer(a), ib = as_integer(b);
  if (ia && ib) return *ia < *ib;
  return a < b;
}

// Adds the power-flow variables of `topo` (and optionally the coupling
// variables) to `sp` and records their indices.
CaseIndex make_index(const Network& net, const CaseTopology& topo, nlp::VariableSpace& sp,
                     bool coupling, bool delta) {
  CaseIndex idx;
  idx.topo = topo;
  idx.reference_bus = reference_bus(net);
  const std::size_t nb = net.buses.size(), ng = net.generators.size(), ne = net.branches.size();
  idx.v.resize(nb);
  idx.theta.resize(nb);
  idx.p.assign(ng, npos);
  idx.q.assign(ng, npos);
  for (auto* vec : {&idx.pf_from, &idx.qf_from, &idx.pf_to, &idx.qf_to, &idx.sigma_from, &idx.sigma_to})
    vec->assign(ne, npos);
  for (auto* vec : {&idx.sp_plus, &idx.sp_minus, &idx.sq_plus, &idx.sq_minus}) vec->resize(nb);
  idx.rho_plus.assign(ng, npos);
  idx.rho_minus.assign(ng, npos);
  idx.nu_plus.assign(nb, npos);
  idx.nu_minus.assign(nb, npos);

  for (std::size_t n = 0; n < nb; ++n) {
    const auto& id = net.buses[n].id;
    idx.v[n] = sp.add(named("v", id), topo.v_min[n], topo.v_max[n]);
    const bool ref = n == idx.reference_bus;
    idx.theta[n] = sp.add(named("theta", id), ref ? 0.0 : -kInf, ref ? 0.0 : kInf);
  }
  for (auto g : topo.generators) {
    const auto& gen = net.generators[g];
    idx.p[g] = sp.add(named("p", gen.id), gen.p_min, gen.p_max);
    idx.q[g] = sp.add(named("q", gen.id), gen.q_min, gen.q_max);
  }
  for (auto e : topo.branches) {
    const auto& id = net.branches[e].id;
    idx.pf_from[e] = sp.add(named("pf_from", id));
    idx.qf_from[e] = sp.add(named("qf_from", id));
    idx.pf_to[e] = sp.add(named("pf_to", id));
    idx.qf_to[e] = sp.add(named("qf_to", id));
    idx.sigma_from[e] = sp.add(named("sigma_from", id), 0.0, kInf);
    idx.sigma_to[e] = sp.add(named("sigma_to", id), 0.0, kInf);
  }
  for (std::size_t n = 0; n < nb; ++n) {
    const auto& id = net.buses[n].id;
    idx.sp_plus[n] = sp.add(named("sp_plus", id), 0.0, kInf);
    idx.sp_minus[n] = sp.add(named("sp_minus", id), 0.0, kInf);
    idx.sq_plus[n] = sp.add(named("sq_plus", id), 0.0, kInf);
    idx.sq_minus[n] = sp.add(named("sq_minus", id), 0.0, kInf);
  }
  if (coupling) {
    for (auto g : topo.generators) {
      const auto& id = net.generators[g].id;
      idx.rho_plus[g] = sp.add(named("rho_plus", id), 0.0, kInf);
      idx.rho_minus[g] = sp.add(named("rho_minus", id), 0.0, kInf);
    }
    for (auto n : topo.controlled_buses(net)) {
      const auto& id = net.buses[n].id;
      idx.nu_plus[n] = sp.add(named("nu_plus", id), 0.0, kInf);
      idx.nu_minus[n] = sp.add(named("nu_minus", id), 0.0, kInf);
    }
  }
  if (delta) idx.delta = sp.add("delta", 0.0, 0.0);
  return idx;
}

void add_power_flow_blocks(nlp::NlpProblem& prob, const Network& net, const CaseIndex& idx) {
  const auto& topo = idx.topo;
  std::vector<FlowBlock::Item> flows;
  std::vector<ThermalBlock::Item> thermal;
  for (auto e : topo.branches) {
    const auto& br = net.branches[e];
    flows.push_back({&br, idx.v[br.from], idx.v[br.to], idx.theta[br.from], idx.theta[br.to], idx.pf_from[e],
                     idx.qf_from[e], idx.pf_to[e], idx.qf_to[e]});
    thermal.push_back({topo.rating[e], idx.v[br.from], idx.sigma_from[e], idx.pf_from[e], idx.qf_from[e]});
    thermal.push_back({topo.rating[e], idx.v[br.to], idx.sigma_to[e], idx.pf_to[e], idx.qf_to[e]});
  }
  std::vector<BalanceBlock::Item> balance(net.buses.size());
  for (std::size_t n = 0; n < net.buses.size(); ++n) {
    const auto& bus = net.buses[n];
    auto& it = balance[n];
    it.v = idx.v[n];
    it.g_shunt = bus.g_shunt;
    it.b_shunt = bus.b_shunt;
    it.p_load = bus.p_load;
    it.q_load = bus.q_load;
    it.sp_plus = idx.sp_plus[n];
    it.sp_minus = idx.sp_minus[n];
    it.sq_plus = idx.sq_plus[n];
    it.sq_minus = idx.sq_minus[n];
  }
  for (auto g : topo.generators) {
    auto& it = balance[net.generators[g].bus_index];
    it.p_gen.push_back(idx.p[g]);
    it.q_gen.push_back(idx.q[g]);
  }
  for (auto e : topo.branches) {
    const auto& br = net.branches[e];
    balance[br.from].p_flow.push_back(idx.pf_from[e]);
    balance[br.from].q_flow.push_back(idx.qf_from[e]);
    balance[br.to].p_flow.push_back(idx.pf_to[e]);
    balance[br.to].q_flow.push_back(idx.qf_to[e]);
  }
  prob.add_constraints(std::make_unique<FlowBlock>(std::move(flows)));
  prob.add_constraints(std::make_unique<ThermalBlock>(std::move(thermal)));
  prob.add_constraints(std::make_unique<BalanceBlock>(std::move(balance)));
}

void add_penalty_blocks(nlp::NlpProblem& prob, const Network& net, const CaseIndex& idx) {
  const auto s = quad_penalty_fit(net.penalty_s);
  const auto p = quad_penalty_fit(net.penalty_p);
  const auto q = quad_penalty_fit(net.penalty_q);
  std::vector<QuadPenaltyBlock::Item> ts, tp, tq;
  for (auto e : idx.topo.branches) {
    ts.push_back({idx.sigma_from[e], s.a1, s.a2});
    ts.push_back({idx.sigma_to[e], s.a1, s.a2});
  }
  for (std::size_t n = 0; n < net.buses.size(); ++n) {
    tp.push_back({idx.sp_plus[n], p.a1, p.a2});
    tp.push_back({idx.sp_minus[n], p.a1, p.a2});
    tq.push_back({idx.sq_plus[n], q.a1, q.a2});
    tq.push_back({idx.sq_minus[n], q.a1, q.a2});
  }
  prob.add_objective(std::make_unique<QuadPenaltyBlock>("thermal-penalty", std::move(ts)));
  prob.add_objective(std::make_unique<QuadPenaltyBlock>("active-balance-penalty", std::move(tp)));
  prob.add_objective(std::make_unique<QuadPenaltyBlock>("reactive-balance-penalty", std::move(tq)));
}

OperatingPoint cold_point(const Network& net, const CaseTopology& topo) {
  auto pt = empty_point(net, std::string(grid::kBaseCaseId));
  for (std::size_t n = 0; n < net.buses.size(); ++n) pt.v[n] = 0.5 * (topo.v_min[n] + topo.v_max[n]);
  for (auto g : topo.generators) {
    const auto& gen = net.generators[g];
    pt.p[g] = 0.5 * (gen.p_min + gen.p_max);
    pt.q[g] = 0.5 * (gen.q_min + gen.q_max);
  }
  for (auto e : topo.branches) pt.sigma_from[e] = pt.sigma_to[e] = kColdSlack;
  for (auto* vec : {&pt.sp_plus, &pt.sp_minus, &pt.sq_plus, &pt.sq_minus})
    std::fill(vec->begin(), vec->end(), kColdSlack);
  return pt;
}

}  // namespace

OperatingPoint empty_point(const Network& net, std::string case_id) {
  OperatingPoint pt;
  pt.case_id = std::move(case_id);
  const std::size_t nb = net.buses.size(), ng = net.generators.size(), ne = net.branches.size();
  for (auto* vec : {&pt.v, &pt.theta, &pt.sp_plus, &pt.sp_minus, &pt.sq_plus, &pt.sq_minus, &pt.nu_plus,
                    &pt.nu_minus})
    vec->assign(nb, 0.0);
  for (auto* vec : {&pt.p, &pt.q, &pt.rho_plus, &pt.rho_minus}) vec->assign(ng, 0.0);
  pt.sigma_from.assign(ne, 0.0);
  pt.sigma_to.assign(ne, 0.0);
  return pt;
}

std::size_t reference_bus(const Network& net) {
  std::size_t best = npos;
  for (const auto& g : net.generators)
    if (best == npos || id_less(net.buses[g.bus_index].id, net.buses[best].id)) best = g.bus_index;
  return best == npos ? 0 : best;
}

CaseProblem build_base_problem(const Network& net, std::span<const SurrogateTerm> surrogates) {
  const auto topo = grid::base_topology(net);
  nlp::VariableSpace sp;
  auto idx = make_index(net, topo, sp, false, false);
  CaseProblem cp{nlp::NlpProblem(std::move(sp)), std::move(idx), {}};
  add_power_flow_blocks(cp.problem, net, cp.index);

  std::vector<GenerationCostBlock::Item> cost;
  for (auto g : topo.generators) cost.push_back({cp.index.p[g], net.generators[g].cost});
  cp.problem.add_objective(std::make_unique<GenerationCostBlock>(std::move(cost)));
  add_penalty_blocks(cp.problem, net, cp.index);

  if (!surrogates.empty() && !net.contingencies.empty()) {
    std::vector<SurrogateBlock::Item> items;
    for (const auto& s : surrogates) {
      const auto& ix = cp.index;
      switch (s.site) {
        case SurrogateSite::generator:
          items.push_back({ix.p[s.element], ix.q[s.element], s.coefficient});
          break;
        case SurrogateSite::branch_from:
          items.push_back({ix.pf_from[s.element], ix.qf_from[s.element], s.coefficient});
          break;
        case SurrogateSite::branch_to:
          items.push_back({ix.pf_to[s.element], ix.qf_to[s.element], s.coefficient});
          break;
      }
    }
    cp.problem.add_objective(std::make_unique<SurrogateBlock>(
        std::move(items), 1.0 / static_cast<double>(net.contingencies.size())));
  }
  cp.problem.finalize();
  cp.start = to_vector(net, cp.index, cold_point(net, topo));
  return cp;
}

CaseProblem build_contingency_problem(const Network& net, std::size_t k, const OperatingPoint& base,
                                      double epsilon) {
  if (epsilon < 0) throw std::invalid_argument("relaxation constant must be nonnegative");
  const auto topo = grid::apply_contingency(net, k);
  const auto base_topo = grid::base_topology(net);
  nlp::VariableSpace sp;
  auto idx = make_index(net, topo, sp, true, true);

  const auto db = grid::delta_bounds(net, topo, base.p);
  if (db.rigid)
    sp.fix(idx.delta, 0.0);
  else
    sp.set_bounds(idx.delta, db.lower, db.upper);

  std::vector<LinearBlock::Row> drop, vreg;
  std::vector<ProductCapBlock::Item> drop_caps, vreg_caps;
  for (auto g : topo.generators) {
    const auto& gen = net.generators[g];
    const double width = gen.p_max - gen.p_min;
    LinearBlock::Row row{{{idx.p[g], 1.0}, {idx.rho_plus[g], 1.0}, {idx.rho_minus[g], -1.0}}, base.p[g], base.p[g]};
    if (gen.drop_const > 0) row.terms.push_back({idx.delta, -gen.drop_const});
    drop.push_back(std::move(row));
    if (width == 0.0) continue;  // both products vanish identically
    // A response range below kMinResponse is numerically a saturated unit; a
    // cap of order eps * 1e-8 would make the row an exact complementarity.
    const double range_up = gen.drop_const * db.upper, range_dn = -gen.drop_const * db.lower;
    const double cap_up = range_up > kMinResponse ? epsilon * range_up * width : 0.0;
    const double cap_dn = range_dn > kMinResponse ? epsilon * range_dn * width : 0.0;
    if (cap_up > 0)
      drop_caps.push_back({idx.rho_plus[g], idx.p[g], gen.p_max, -1.0, cap_up});
    else
      sp.fix(idx.rho_plus[g], 0.0);
    if (cap_dn > 0)
      drop_caps.push_back({idx.rho_minus[g], idx.p[g], -gen.p_min, 1.0, cap_dn});
    else
      sp.fix(idx.rho_minus[g], 0.0);
  }
  for (auto n : topo.controlled_buses(net)) {
    vreg.push_back({{{idx.nu_plus[n], 1.0}, {idx.nu_minus[n], -1.0}, {idx.v[n], -1.0}}, -base.v[n], -base.v[n]});
    for (auto g : topo.active_generators_at(net, n)) {
      const auto& gen = net.generators[g];
      const double qw = gen.q_max - gen.q_min;
      if (qw == 0.0) continue;
      const double cap_minus = epsilon * (topo.v_max[n] - base_topo.v_min[n]) * qw;
      const double cap_plus = epsilon * (base_topo.v_max[n] - topo.v_min[n]) * qw;
      vreg_caps.push_back({idx.nu_minus[n], idx.q[g], gen.q_max, -1.0, cap_minus});
      vreg_caps.push_back({idx.nu_plus[n], idx.q[g], -gen.q_min, 1.0, cap_plus});
    }
  }

  CaseProblem cp{nlp::NlpProblem(std::move(sp)), std::move(idx), {}};
  add_power_flow_blocks(cp.problem, net, cp.index);
  cp.problem.add_constraints(std::make_unique<LinearBlock>("drop-coupling", std::move(drop)));
  cp.problem.add_constraints(std::make_unique<ProductCapBlock>("drop-complementarity", std::move(drop_caps)));
  cp.problem.add_constraints(std::make_unique<LinearBlock>("voltage-coupling", std::move(vreg)));
  cp.problem.add_constraints(std::make_unique<ProductCapBlock>("voltage-complementarity", std::move(vreg_caps)));
  add_penalty_blocks(cp.problem, net, cp.index);
  cp.problem.finalize();
  cp.start = to_vector(net, cp.index, copy_base_point(net, topo, base));
  return cp;
}

RestrictedCanvas::RestrictedCanvas(const Network& net, std::size_t k, const OperatingPoint& base,
                                   double regularization)
    : net_(net) {
  const auto topo = grid::apply_contingency(net, k);
  nlp::VariableSpace sp;
  auto idx = make_index(net, topo, sp, false, true);
  cp_ = CaseProblem{nlp::NlpProblem(std::move(sp)), std::move(idx), {}};
  add_power_flow_blocks(cp_.problem, net, cp_.index);
  add_penalty_blocks(cp_.problem, net, cp_.index);
  if (regularization > 0) {
    std::vector<std::size_t> vars;
    std::vector<double> ref;
    for (std::size_t n = 0; n < net.buses.size(); ++n) {
      vars.push_back(cp_.index.v[n]);
      ref.push_back(base.v[n]);
      vars.push_back(cp_.index.theta[n]);
      ref.push_back(base.theta[n]);
    }
    cp_.problem.add_objective(std::make_unique<RegularizationBlock>(std::move(vars), std::move(ref), regularization));
  }
  auto start_pt = copy_base_point(net, topo, base);
  cp_.start = to_vector(net, cp_.index, start_pt);
}

std::size_t RestrictedCanvas::variable(std::string_view name) const {
  const auto j = cp_.problem.space().find(name);
  if (!j) throw std::invalid_argument("canvas has no variable '" + std::string(name) + "'");
  return *j;
}

void RestrictedCanvas::fix(std::size_t var, double value) {
  if (var >= cp_.problem.num_variables()) throw std::invalid_argument("canvas variable index out of range");
  cp_.problem.space().fix(var, value);
  cp_.start[var] = value;
}

void RestrictedCanvas::set_bounds(std::size_t var, double lo, double hi) {
  if (var >= cp_.problem.num_variables()) throw std::invalid_argument("canvas variable index out of range");
  cp_.problem.space().set_bounds(var, lo, hi);
  cp_.start[var] = std::clamp(cp_.start[var], lo, hi);
}

void RestrictedCanvas::add_linear_constraint(std::vector<std::pair<std::size_t, double>> terms, double lo,
                                             double hi) {
  if (finalized()) throw std::logic_error("canvas already finalized");
  for (const auto& t : terms)
    if (t.first >= cp_.problem.num_variables()) throw std::invalid_argument("canvas variable index out of range");
  pending_.push_back({std::move(terms), {lo, hi}});
}

void RestrictedCanvas::add_response(std::size_t g, double p0) {
  const auto& ix = cp_.index;
  if (g >= ix.p.size() || ix.p[g] == npos) throw std::invalid_argument("generator not in service in this case");
  add_linear_constraint({{ix.p[g], 1.0}, {ix.delta, -net_.generators[g].drop_const}}, p0, p0);
}

CaseProblem& RestrictedCanvas::finalize() {
  if (!finalized()) {
    if (!pending_.empty()) {
      std::vector<LinearBlock::Row> rows;
      for (auto& [terms, b] : pending_) rows.push_back({std::move(terms), b.first, b.second});
      cp_.problem.add_constraints(std::make_unique<LinearBlock>("response", std::move(rows)));
    }
    cp_.problem.finalize();
  }
  return cp_;
}

std::vector<double> to_vector(const Network& net, const CaseIndex& idx, const OperatingPoint& pt) {
  std::size_t n_vars = 0;
  auto track = [&](std::size_t j) {
    if (j != npos) n_vars = std::max(n_vars, j + 1);
  };
  for (const auto* vec : {&idx.v, &idx.theta, &idx.p, &idx.q, &idx.pf_from, &idx.qf_from, &idx.pf_to, &idx.qf_to,
                          &idx.sigma_from, &idx.sigma_to, &idx.sp_plus, &idx.sp_minus, &idx.sq_plus, &idx.sq_minus,
                          &idx.rho_plus, &idx.rho_minus, &idx.nu_plus, &idx.nu_minus})
    for (auto j : *vec) track(j);
  track(idx.delta);

  std::vector<double> x(n_vars, 0.0);
  auto put = [&](const std::vector<std::size_t>& ix, const std::vector<double>& val) {
    for (std::size_t i = 0; i < ix.size(); ++i)
      if (ix[i] != npos && i < val.size()) x[ix[i]] = val[i];
  };
  put(idx.v, pt.v);
  put(idx.theta, pt.theta);
  put(idx.p, pt.p);
  put(idx.q, pt.q);
  put(idx.sigma_from, pt.sigma_from);
  put(idx.sigma_to, pt.sigma_to);
  put(idx.sp_plus, pt.sp_plus);
  put(idx.sp_minus, pt.sp_minus);
  put(idx.sq_plus, pt.sq_plus);
  put(idx.sq_minus, pt.sq_minus);
  put(idx.rho_plus, pt.rho_plus);
  put(idx.rho_minus, pt.rho_minus);
  put(idx.nu_plus, pt.nu_plus);
  put(idx.nu_minus, pt.nu_minus);
  if (idx.delta != npos) x[idx.delta] = pt.delta;
  for (auto e : idx.topo.branches) {
    const auto& br = net.branches[e];
    const auto f = branch_flow(pt.v[br.from], pt.v[br.to], pt.theta[br.from], pt.theta[br.to], br);
    x[idx.pf_from[e]] = f.p_from;
    x[idx.qf_from[e]] = f.q_from;
    x[idx.pf_to[e]] = f.p_to;
    x[idx.qf_to[e]] = f.q_to;
  }
  return x;
}

OperatingPoint to_point(const Network& net, const CaseIndex& idx, std::span<const double> x, std::string case_id) {
  auto pt = empty_point(net, std::move(case_id));
  auto get = [&](const std::vector<std::size_t>& ix, std::vector<double>& val) {
    for (std::size_t i = 0; i < ix.size(); ++i)
      if (ix[i] != npos) val[i] = x[ix[i]];
  };
  get(idx.v, pt.v);
  get(idx.theta, pt.theta);
  get(idx.p, pt.p);
  get(idx.q, pt.q);
  get(idx.sigma_from, pt.sigma_from);
  get(idx.sigma_to, pt.sigma_to);
  get(idx.sp_plus, pt.sp_plus);
  get(idx.sp_minus, pt.sp_minus);
  get(idx.sq_plus, pt.sq_plus);
  get(idx.sq_minus, pt.sq_minus);
  get(idx.rho_plus, pt.rho_plus);
  get(idx.rho_minus, pt.rho_minus);
  get(idx.nu_plus, pt.nu_plus);
  get(idx.nu_minus, pt.nu_minus);
  if (idx.delta != npos) pt.delta = x[idx.delta];
  return pt;
}

void fill_slacks(const Network& net, const CaseTopology& topo, OperatingPoint& pt) {
  std::vector<double> rp(net.buses.size()), rq(net.buses.size());
  for (std::size_t n = 0; n < net.buses.size(); ++n) {
    const auto& b = net.buses[n];
    const double v2 = pt.v[n] * pt.v[n];
    rp[n] = -b.p_load - b.g_shunt * v2;
    rq[n] = -b.q_load + b.b_shunt * v2;
  }
  for (auto g : topo.generators) {
    rp[net.generators[g].bus_index] += pt.p[g];
    rq[net.generators[g].bus_index] += pt.q[g];
  }
  std::fill(pt.sigma_from.begin(), pt.sigma_from.end(), 0.0);
  std::fill(pt.sigma_to.begin(), pt.sigma_to.end(), 0.0);
  for (auto e : topo.branches) {
    const auto& br = net.branches[e];
    const auto f = branch_flow(pt.v[br.from], pt.v[br.to], pt.theta[br.from], pt.theta[br.to], br);
    rp[br.from] -= f.p_from;
    rq[br.from] -= f.q_from;
    rp[br.to] -= f.p_to;
    rq[br.to] -= f.q_to;
    const double r = topo.rating[e];
    pt.sigma_from[e] = std::max(0.0, std::hypot(f.p_from, f.q_from) - r * pt.v[br.from]);
    pt.sigma_to[e] = std::max(0.0, std::hypot(f.p_to, f.q_to) - r * pt.v[br.to]);
  }
  for (std::size_t n = 0; n < net.buses.size(); ++n) {
    pt.sp_plus[n] = std::max(rp[n], 0.0);
    pt.sp_minus[n] = std::max(-rp[n], 0.0);
    pt.sq_plus[n] = std::max(rq[n], 0.0);
    pt.sq_minus[n] = std::max(-rq[n], 0.0);
  }
}

OperatingPoint copy_base_point(const Network& net, const CaseTopology& topo, const OperatingPoint& base) {
  auto pt = empty_point(net, topo.is_base() ? std::string(grid::kBaseCaseId) : net.contingencies[*topo.contingency].id);
  pt.v = base.v;
  pt.theta = base.theta;
  for (std::size_t n = 0; n < net.buses.size(); ++n) pt.v[n] = std::clamp(pt.v[n], topo.v_min[n], topo.v_max[n]);
  for (auto g : topo.generators) {
    pt.p[g] = base.p[g];
    pt.q[g] = base.q[g];
  }
  pt.delta = 0.0;
  fill_slacks(net, topo, pt);
  return pt;
}

CasePenalty case_penalty(const Network& net, const CaseTopology& topo, const OperatingPoint& pt, PenaltyMode mode) {
  CasePenalty out;
  for (auto e : topo.branches)
    out.thermal += evaluate_penalty(net.penalty_s, pt.sigma_from[e], mode) +
                   evaluate_penalty(net.penalty_s, pt.sigma_to[e], mode);
  for (std::size_t n = 0; n < net.buses.size(); ++n) {
    out.active += evaluate_penalty(net.penalty_p, pt.sp_plus[n], mode) +
                  evaluate_penalty(net.penalty_p, pt.sp_minus[n], mode);
    out.reactive += evaluate_penalty(net.penalty_q, pt.sq_plus[n], mode) +
                    evaluate_penalty(net.penalty_q, pt.sq_minus[n], mode);
  }
  return out;
}

double generation_cost(const Network& net, const OperatingPoint& base) {
  double f = 0.0;
  for (std::size_t g = 0; g < net.generators.size(); ++g) f += net.generators[g].cost(base.p[g]);
  return f;
}

}  // namespace scacopf::opf
