#include "scacopf/recovery/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scacopf/nlp/variable_space.hpp"

namespace scacopf::recovery {

using grid::CaseTopology;
using grid::Network;
using opf::OperatingPoint;

namespace {

constexpr double kResponseTol = 1e-10;

double slope_at(double delta, std::span<const ResponseUnit> units) {
  double s = 0.0;
  for (const auto& u : units) {
    const double p = u.p0 + u.a * delta;
    if (p > u.p_min && p < u.p_max) s += u.a;
  }
  return s;
}

Mutation fix(Mutation::Var var, std::size_t element, double value) {
  return {Mutation::Kind::fix, var, element, value, value};
}

Mutation bounds(Mutation::Var var, std::size_t element, double lo, double hi) {
  return {Mutation::Kind::bounds, var, element, lo, hi};
}

}  // namespace

double response_total(double delta, std::span<const ResponseUnit> units) {
  double x = 0.0;
  for (const auto& u : units) x += std::clamp(u.p0 + u.a * delta, u.p_min, u.p_max) - u.p0;
  return x;
}

double delta_response(double x, std::span<const ResponseUnit> units, double lower, double upper) {
  if (x == 0.0) return 0.0;
  double lo_sum = 0.0, hi_sum = 0.0;
  for (const auto& u : units) {
    lo_sum += u.p_min - u.p0;
    hi_sum += u.p_max - u.p0;
  }
  if (!(lo_sum < x && x < hi_sum))
    throw DomainError("production deviation " + std::to_string(x) + " outside (" + std::to_string(lo_sum) + ", " +
                      std::to_string(hi_sum) + ")");
  double a = x > 0 ? 0.0 : lower;
  double b = x > 0 ? upper : 0.0;
  double mid = 0.5 * (a + b);
  for (int it = 0; it < 300; ++it) {
    mid = 0.5 * (a + b);
    const double r = response_total(mid, units);
    if (std::abs(r - x) <= kResponseTol) break;
    if (r < x)
      a = mid;
    else
      b = mid;
    if (b - a <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(mid))) break;
  }
  // Exact step within the linear piece containing mid.
  const double s = slope_at(mid, units);
  if (s > 0) {
    const double refined = mid + (x - response_total(mid, units)) / s;
    if (refined >= a && refined <= b && std::abs(response_total(refined, units) - x) <= std::abs(response_total(mid, units) - x))
      mid = refined;
  }
  return mid;
}

std::vector<ResponseUnit> response_units(const Network& net, const CaseTopology& topo, std::span<const double> p_base,
                                         std::vector<std::size_t>* generators) {
  std::vector<ResponseUnit> units;
  if (generators) generators->clear();
  for (auto g : topo.generators) {
    const auto& gen = net.generators[g];
    if (gen.drop_const <= 0) continue;
    units.push_back({p_base[g], gen.drop_const, gen.p_min, gen.p_max});
    if (generators) generators->push_back(g);
  }
  return units;
}

double delta_response(double x, const Network& net, const CaseTopology& topo, std::span<const double> p_base) {
  const auto units = response_units(net, topo, p_base);
  const auto db = grid::delta_bounds(net, topo, p_base);
  return delta_response(x, units, db.lower, db.upper);
}

std::string variable_name(const Mutation& m, const Network& net) {
  switch (m.var) {
    case Mutation::Var::p: return "p[" + net.generators[m.element].id + "]";
    case Mutation::Var::q: return "q[" + net.generators[m.element].id + "]";
    case Mutation::Var::v: return "v[" + net.buses[m.element].id + "]";
    case Mutation::Var::delta: return "delta";
  }
  return {};
}

CrushPlan crush_drop(const Network& net, const CaseTopology& topo, const OperatingPoint& base,
                     const OperatingPoint& approx) {
  CrushPlan plan;
  plan.p_hat.assign(net.generators.size(), 0.0);
  std::vector<std::size_t> gens;
  const auto units = response_units(net, topo, base.p, &gens);
  const auto db = grid::delta_bounds(net, topo, base.p);

  for (auto g : topo.generators)
    if (net.generators[g].drop_const <= 0) {
      plan.held.push_back(g);
      plan.p_hat[g] = base.p[g];
      plan.mutations.push_back(fix(Mutation::Var::p, g, base.p[g]));
    }
  if (units.empty()) {
    plan.delta_fixed = true;
    plan.mutations.push_back(fix(Mutation::Var::delta, 0, 0.0));
    return plan;
  }

  double x = 0.0, lo_sum = 0.0, hi_sum = 0.0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    x += approx.p[gens[i]] - units[i].p0;
    lo_sum += units[i].p_min - units[i].p0;
    hi_sum += units[i].p_max - units[i].p0;
  }
  if (x <= lo_sum && x != 0.0)
    plan.delta_hat = db.lower;
  else if (x >= hi_sum && x != 0.0)
    plan.delta_hat = db.upper;
  else
    plan.delta_hat = delta_response(x, units, db.lower, db.upper);

  const double dh = plan.delta_hat;
  double d_lo = db.lower, d_hi = db.upper;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    const auto g = gens[i];
    const double p_hat = std::clamp(u.p0 + u.a * dh, u.p_min, u.p_max);
    plan.p_hat[g] = p_hat;
    if (dh >= 0) {
      const double brk = (u.p_max - u.p0) / u.a;
      if (p_hat >= u.p_max) {
        plan.saturated.push_back(g);
        d_lo = std::max(d_lo, brk);
      } else {
        plan.responding.push_back(g);
        d_hi = std::min(d_hi, brk);
      }
    } else {
      const double brk = (u.p_min - u.p0) / u.a;
      if (p_hat <= u.p_min) {
        plan.saturated.push_back(g);
        d_hi = std::min(d_hi, brk);
      } else {
        plan.responding.push_back(g);
        d_lo = std::max(d_lo, brk);
      }
    }
  }
  // Round-off may put the breakpoints a hair on the wrong side of delta_hat.
  plan.d_lower = std::min(d_lo, dh);
  plan.d_upper = std::max(d_hi, dh);

  for (auto g : plan.saturated) {
    const auto& gen = net.generators[g];
    plan.mutations.push_back(fix(Mutation::Var::p, g, dh >= 0 ? gen.p_max : gen.p_min));
  }
  if (plan.responding.empty()) {
    plan.delta_fixed = true;
    plan.mutations.push_back(fix(Mutation::Var::delta, 0, dh));
    return plan;
  }
  plan.mutations.push_back(bounds(Mutation::Var::delta, 0, plan.d_lower, plan.d_upper));
  for (auto g : plan.responding) plan.mutations.push_back({Mutation::Kind::response, Mutation::Var::p, g, 0.0, 0.0});
  return plan;
}

void crush_vreg(const Network& net, const CaseTopology& topo, const OperatingPoint& base,
                const OperatingPoint& approx, double epsilon_q, CrushPlan& plan) {
  if (!(epsilon_q > 0 && epsilon_q < 0.5)) throw std::invalid_argument("epsilon_q must lie in (0, 0.5)");
  for (auto n : topo.controlled_buses(net)) {
    const auto gens = topo.active_generators_at(net, n);
    double num = 0.0, den = 0.0;
    for (auto g : gens) {
      num += approx.q[g] - net.generators[g].q_min;
      den += net.generators[g].q_max - net.generators[g].q_min;
    }
    BusRegulation reg{n, den > 0 ? num / den : 0.5, RegulatorDecision::regulated};
    if (den > 0 && reg.eta < epsilon_q) {
      reg.decision = RegulatorDecision::lower_saturated;
      for (auto g : gens) plan.mutations.push_back(fix(Mutation::Var::q, g, net.generators[g].q_min));
      plan.mutations.push_back(bounds(Mutation::Var::v, n, base.v[n], topo.v_max[n]));
    } else if (den > 0 && reg.eta > 1.0 - epsilon_q) {
      reg.decision = RegulatorDecision::upper_saturated;
      for (auto g : gens) plan.mutations.push_back(fix(Mutation::Var::q, g, net.generators[g].q_max));
      plan.mutations.push_back(bounds(Mutation::Var::v, n, topo.v_min[n], base.v[n]));
    } else {
      plan.mutations.push_back(fix(Mutation::Var::v, n, base.v[n]));
    }
    plan.regulators.push_back(reg);
  }
}

void apply_plan(const CrushPlan& plan, const Network& net, opf::RestrictedCanvas& canvas,
                const OperatingPoint& base) {
  for (const auto& m : plan.mutations) {
    switch (m.kind) {
      case Mutation::Kind::fix: canvas.fix(variable_name(m, net), m.lo); break;
      case Mutation::Kind::bounds: canvas.set_bounds(variable_name(m, net), m.lo, m.hi); break;
      case Mutation::Kind::response: canvas.add_response(m.element, base.p[m.element]); break;
    }
  }
}

OperatingPoint planned_point(const Network& net, const CaseTopology& topo, const OperatingPoint& base,
                             const OperatingPoint& approx, const CrushPlan& plan) {
  auto pt = approx;
  for (std::size_t n = 0; n < net.buses.size(); ++n) pt.v[n] = std::clamp(pt.v[n], topo.v_min[n], topo.v_max[n]);
  for (auto g : topo.generators) {
    const auto& gen = net.generators[g];
    pt.p[g] = std::clamp(pt.p[g], gen.p_min, gen.p_max);
    pt.q[g] = std::clamp(pt.q[g], gen.q_min, gen.q_max);
  }
  pt.delta = plan.delta_hat;
  auto value = [&](const Mutation& m) -> double& {
    switch (m.var) {
      case Mutation::Var::p: return pt.p[m.element];
      case Mutation::Var::q: return pt.q[m.element];
      case Mutation::Var::v: return pt.v[m.element];
      case Mutation::Var::delta: break;
    }
    return pt.delta;
  };
  for (const auto& m : plan.mutations) {
    if (m.kind == Mutation::Kind::fix) value(m) = m.lo;
    if (m.kind == Mutation::Kind::bounds) value(m) = std::clamp(value(m), m.lo, m.hi);
  }
  for (const auto& m : plan.mutations)
    if (m.kind == Mutation::Kind::response)
      pt.p[m.element] = base.p[m.element] + net.generators[m.element].drop_const * pt.delta;
  std::fill(pt.rho_plus.begin(), pt.rho_plus.end(), 0.0);
  std::fill(pt.rho_minus.begin(), pt.rho_minus.end(), 0.0);
  std::fill(pt.nu_plus.begin(), pt.nu_plus.end(), 0.0);
  std::fill(pt.nu_minus.begin(), pt.nu_minus.end(), 0.0);
  opf::fill_slacks(net, topo, pt);
  return pt;
}

void derive_coupling(const Network& net, const CaseTopology& topo, const OperatingPoint& base, OperatingPoint& pt) {
  std::fill(pt.rho_plus.begin(), pt.rho_plus.end(), 0.0);
  std::fill(pt.rho_minus.begin(), pt.rho_minus.end(), 0.0);
  std::fill(pt.nu_plus.begin(), pt.nu_plus.end(), 0.0);
  std::fill(pt.nu_minus.begin(), pt.nu_minus.end(), 0.0);
  for (auto g : topo.generators) {
    const double target = base.p[g] + net.generators[g].drop_const * pt.delta;
    pt.rho_plus[g] = std::max(0.0, target - pt.p[g]);
    pt.rho_minus[g] = std::max(0.0, pt.p[g] - target);
  }
  for (auto n : topo.controlled_buses(net)) {
    pt.nu_plus[n] = std::max(0.0, pt.v[n] - base.v[n]);
    pt.nu_minus[n] = std::max(0.0, base.v[n] - pt.v[n]);
  }
}

double CouplingResiduals::max() const {
  return std::max({drop_complementarity, voltage_complementarity, drop_equation, voltage_equation});
}

CouplingResiduals coupling_residuals(const Network& net, const CaseTopology& topo, const OperatingPoint& base,
                                     const OperatingPoint& pt) {
  CouplingResiduals r;
  for (auto g : topo.generators) {
    const auto& gen = net.generators[g];
    r.drop_complementarity = std::max({r.drop_complementarity, std::min(pt.rho_plus[g], gen.p_max - pt.p[g]),
                                       std::min(pt.rho_minus[g], pt.p[g] - gen.p_min)});
    r.drop_equation = std::max(
        r.drop_equation,
        std::abs(pt.p[g] + pt.rho_plus[g] - pt.rho_minus[g] - base.p[g] - gen.drop_const * pt.delta));
  }
  for (auto n : topo.controlled_buses(net)) {
    r.voltage_equation =
        std::max(r.voltage_equation, std::abs(pt.nu_plus[n] - pt.nu_minus[n] - pt.v[n] + base.v[n]));
    for (auto g : topo.active_generators_at(net, n)) {
      const auto& gen = net.generators[g];
      r.voltage_complementarity = std::max({r.voltage_complementarity, std::min(pt.nu_minus[n], gen.q_max - pt.q[g]),
                                            std::min(pt.nu_plus[n], pt.q[g] - gen.q_min)});
    }
  }
  return r;
}

namespace {

// Largest violation of the canvas bounds and constraints at x.
double canvas_violation(const nlp::NlpProblem& prob, std::span<const double> x) {
  double viol = 0.0;
  const auto& sp = prob.space();
  for (std::size_t j = 0; j < sp.size(); ++j) viol = std::max({viol, sp.lower(j) - x[j], x[j] - sp.upper(j)});
  const auto m = prob.num_constraints();
  std::vector<double> c(m), lo(m), hi(m);
  prob.residuals(x, c);
  prob.constraint_bounds(lo, hi);
  for (std::size_t i = 0; i < m; ++i) viol = std::max({viol, lo[i] - c[i], c[i] - hi[i]});
  return viol;
}

}  // namespace

RecoveryResult recover_feasible(const Network& net, std::size_t k, const OperatingPoint& base,
                                const OperatingPoint& approx, const RecoveryOptions& opts) {
  const auto topo = grid::apply_contingency(net, k);
  RecoveryResult out;
  out.plan = crush_drop(net, topo, base, approx);
  crush_vreg(net, topo, base, approx, opts.epsilon_q, out.plan);
  const auto start = planned_point(net, topo, base, approx, out.plan);

  auto ipm_opts = opts.ipm;
  ipm_opts.warm_start_mode = ipm::WarmStartMode::primal;
  double reg = opts.regularization;
  for (int attempt = 0; attempt < 2; ++attempt) {
    opf::RestrictedCanvas canvas(net, k, base, reg);
    apply_plan(out.plan, net, canvas, base);
    auto& cp = canvas.finalize();
    const auto x0 = opf::to_vector(net, cp.index, start);
    if (canvas_violation(cp.problem, x0) > 1e-8)
      throw std::logic_error("crushed problem start point violates the plan for contingency " +
                             net.contingencies[k].id);
    const auto res = ipm::solve(cp.problem, ipm::StartPoint{x0, {}, {}, {}, ipm::WarmStartMode::primal}, ipm_opts);
    out.iterations += res.iterations;
    out.status = res.status;
    if (res.converged()) {
      out.point = opf::to_point(net, cp.index, res.x, net.contingencies[k].id);
      derive_coupling(net, topo, base, out.point);
      out.constraint_violation = res.constraint_violation;
      return out;
    }
    out.retried = true;
    reg *= 10.0;
  }
  out.fallback = true;
  out.point = opf::copy_base_point(net, topo, base);
  derive_coupling(net, topo, base, out.point);
  out.constraint_violation = 0.0;
  return out;
}

}  // namespace scacopf::recovery
