#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "scacopf/grid/network.hpp"
#include "scacopf/ipm/solver.hpp"
#include "scacopf/opf/case_model.hpp"
#include "scacopf/recovery/recovery.hpp"

using namespace scacopf;
using recovery::ResponseUnit;

namespace {

const std::string kData = SCACOPF_DATA_DIR;

ipm::IpmResult solve(const opf::CaseProblem& cp) {
  return ipm::solve(cp.problem, ipm::StartPoint{cp.start, {}, {}, {}, ipm::WarmStartMode::cold}, {});
}

opf::OperatingPoint solved_base(const grid::Network& net) {
  auto cp = opf::build_base_problem(net, {});
  auto r = solve(cp);
  EXPECT_EQ(r.status, ipm::Status::optimal);
  return opf::to_point(net, cp.index, r.x, "base");
}

// hedge3 with the local unit taking part in drop control, so that two units
// respond once "cheap" is lost.
grid::Network two_responders() {
  auto net = grid::load_network(kData + "/hedge3.json");
  net.generators[*net.generator_index("local")].drop_const = 1.0;
  return net;
}

}  // namespace

TEST(DeltaResponse, LinearUnsaturatedUnit) {
  std::vector<ResponseUnit> u{{1.0, 2.0, 0.0, 3.0}};
  EXPECT_NEAR(recovery::delta_response(0.5, u, -0.5, 1.0), 0.25, 1e-10);
}

TEST(DeltaResponse, FirstUnitSaturates) {
  std::vector<ResponseUnit> u{{0.8, 1.0, 0.0, 1.0}, {0.0, 1.0, 0.0, 1.0}};
  EXPECT_NEAR(recovery::delta_response(0.8, u, -0.8, 1.0), 0.6, 1e-10);
  // Frozen grid-oracle output for the same instance.
  EXPECT_NEAR(oracle::delta_grid(0.8, u, -0.8, 1.0), 0.6, 1e-6);
}

TEST(DeltaResponse, ZeroDeviationGivesZero) {
  std::vector<ResponseUnit> u{{0.8, 1.0, 0.0, 1.0}, {0.0, 1.0, 0.0, 1.0}};
  EXPECT_EQ(recovery::delta_response(0.0, u, -0.8, 1.0), 0.0);
}

TEST(DeltaResponse, OutsideResponseRangeIsDomainError) {
  std::vector<ResponseUnit> u{{0.8, 1.0, 0.0, 1.0}, {0.0, 1.0, 0.0, 1.0}};
  EXPECT_THROW(recovery::delta_response(1.2, u, -0.8, 1.0), recovery::DomainError);
  EXPECT_THROW(recovery::delta_response(-0.8, u, -0.8, 1.0), recovery::DomainError);
}

TEST(DeltaResponse, MatchesGridOracleAndIsMonotone) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u01(0, 1);
  for (int inst = 0; inst < 60; ++inst) {
    std::vector<ResponseUnit> units(1 + inst % 4);
    double lower = 0.0, upper = 0.0, lo_sum = 0.0, hi_sum = 0.0;
    for (auto& u : units) {
      u.p_min = 0.0;
      u.p_max = 0.2 + 0.8 * u01(rng);
      u.p0 = u.p_max * u01(rng);
      u.a = 1.0 + 3.0 * u01(rng);
      lower = std::min(lower, (u.p_min - u.p0) / u.a);
      upper = std::max(upper, (u.p_max - u.p0) / u.a);
      lo_sum += u.p_min - u.p0;
      hi_sum += u.p_max - u.p0;
    }
    std::vector<double> xs;
    for (int s = 0; s < 5; ++s) xs.push_back(lo_sum + (hi_sum - lo_sum) * (0.02 + 0.96 * u01(rng)));
    std::sort(xs.begin(), xs.end());
    double prev = -1e300;
    for (double x : xs) {
      const double d = recovery::delta_response(x, units, lower, upper);
      EXPECT_NEAR(recovery::response_total(d, units), x, 1e-10);
      EXPECT_NEAR(d, oracle::delta_grid(x, units, lower, upper), 1e-6);
      EXPECT_GE(d, prev);
      prev = d;
    }
  }
}

TEST(CrushDrop, PositiveSignalSplitsAtBreakpoints) {
  auto net = two_responders();
  const auto k = *net.contingency_index("lose-cheap");
  auto topo = grid::apply_contingency(net, k);
  const auto reserve = *net.generator_index("reserve"), local = *net.generator_index("local");
  auto base = opf::empty_point(net, "base");
  base.p[reserve] = 0.4;  // breakpoint 0.2
  base.p[local] = 0.5;    // breakpoint 1.0
  auto approx = opf::copy_base_point(net, topo, base);
  approx.p[reserve] = 0.6;
  approx.p[local] = 1.1;
  auto plan = recovery::crush_drop(net, topo, base, approx);
  EXPECT_NEAR(plan.delta_hat, 0.6, 1e-10);
  EXPECT_EQ(plan.saturated, std::vector<std::size_t>{reserve});
  EXPECT_EQ(plan.responding, std::vector<std::size_t>{local});
  EXPECT_NEAR(plan.d_lower, 0.2, 1e-12);
  EXPECT_NEAR(plan.d_upper, 1.0, 1e-12);
  bool fixed_at_max = false;
  for (const auto& m : plan.mutations)
    if (m.kind == recovery::Mutation::Kind::fix && m.var == recovery::Mutation::Var::p && m.element == reserve)
      fixed_at_max = m.lo == net.generators[reserve].p_max;
  EXPECT_TRUE(fixed_at_max);
}

TEST(CrushDrop, NegativeSignalFixesSaturatedUnitsAtMinimum) {
  auto net = two_responders();
  const auto k = *net.contingency_index("lose-cheap");
  auto topo = grid::apply_contingency(net, k);
  const auto reserve = *net.generator_index("reserve"), local = *net.generator_index("local");
  auto base = opf::empty_point(net, "base");
  base.p[reserve] = 0.4;  // lower breakpoint -0.4
  base.p[local] = 0.5;    // lower breakpoint -0.5
  auto approx = opf::copy_base_point(net, topo, base);
  approx.p[reserve] = 0.0;
  approx.p[local] = 0.05;
  auto plan = recovery::crush_drop(net, topo, base, approx);
  EXPECT_NEAR(plan.delta_hat, -0.45, 1e-10);
  EXPECT_EQ(plan.saturated, std::vector<std::size_t>{reserve});
  EXPECT_EQ(plan.responding, std::vector<std::size_t>{local});
  EXPECT_NEAR(plan.d_lower, -0.5, 1e-12);
  EXPECT_NEAR(plan.d_upper, -0.4, 1e-12);
  for (const auto& m : plan.mutations)
    if (m.kind == recovery::Mutation::Kind::fix && m.var == recovery::Mutation::Var::p && m.element == reserve)
      EXPECT_EQ(m.lo, net.generators[reserve].p_min);
}

TEST(CrushDrop, ZeroSignalKeepsEveryUnitResponding) {
  auto net = two_responders();
  const auto k = *net.contingency_index("lose-cheap");
  auto topo = grid::apply_contingency(net, k);
  auto base = opf::empty_point(net, "base");
  base.p[*net.generator_index("reserve")] = 0.4;
  base.p[*net.generator_index("local")] = 0.5;
  auto plan = recovery::crush_drop(net, topo, base, opf::copy_base_point(net, topo, base));
  auto db = grid::delta_bounds(net, topo, base.p);
  EXPECT_EQ(plan.delta_hat, 0.0);
  EXPECT_TRUE(plan.saturated.empty());
  EXPECT_EQ(plan.responding.size(), 2u);
  EXPECT_EQ(plan.d_lower, db.lower);
}

TEST(CrushVreg, SaturationLevelPicksBranch) {
  auto net = grid::load_network(kData + "/case14.json");
  auto base = solved_base(net);
  const auto k = 5u;
  auto topo = grid::apply_contingency(net, k);
  auto approx = opf::copy_base_point(net, topo, base);
  const auto buses = topo.controlled_buses(net);
  ASSERT_GE(buses.size(), 2u);
  for (auto g : topo.active_generators_at(net, buses[0])) approx.q[g] = net.generators[g].q_min;
  for (auto g : topo.active_generators_at(net, buses[1]))
    approx.q[g] = 0.5 * (net.generators[g].q_min + net.generators[g].q_max);
  recovery::CrushPlan plan;
  recovery::crush_vreg(net, topo, base, approx, 0.05, plan);
  ASSERT_EQ(plan.regulators.size(), buses.size());
  EXPECT_EQ(plan.regulators[0].eta, 0.0);
  EXPECT_EQ(plan.regulators[0].decision, recovery::RegulatorDecision::lower_saturated);
  EXPECT_NEAR(plan.regulators[1].eta, 0.5, 1e-12);
  EXPECT_EQ(plan.regulators[1].decision, recovery::RegulatorDecision::regulated);
  EXPECT_THROW(recovery::crush_vreg(net, topo, base, approx, 0.5, plan), std::invalid_argument);
}

TEST(Recover, Case14ContingenciesAreExactAndNotBelowRelaxation) {
  auto net = grid::load_network(kData + "/case14.json");
  auto base = solved_base(net);
  for (std::size_t k = 0; k < net.contingencies.size(); ++k) {
    const auto& id = net.contingencies[k].id;
    auto topo = grid::apply_contingency(net, k);
    auto cp = opf::build_contingency_problem(net, k, base);
    auto rc = solve(cp);
    EXPECT_EQ(rc.status, ipm::Status::optimal) << id;
    auto approx = opf::to_point(net, cp.index, rc.x, id);
    auto rr = recovery::recover_feasible(net, k, base, approx);
    EXPECT_EQ(rr.status, ipm::Status::optimal) << id;
    EXPECT_FALSE(rr.fallback) << id;
    const auto res = recovery::coupling_residuals(net, topo, base, rr.point);
    EXPECT_LE(res.max(), 1e-8) << id;
    EXPECT_LE(rr.constraint_violation, 1e-8) << id;
    const double relaxed = opf::case_penalty(net, topo, approx, opf::PenaltyMode::quadratic).total();
    const double recovered = opf::case_penalty(net, topo, rr.point, opf::PenaltyMode::quadratic).total();
    EXPECT_GE(recovered, relaxed - rc.duality_gap) << id;
    EXPECT_GE(relaxed, 0.0);
  }
}

TEST(Recover, LostCheapUnitOnHedgeFixture) {
  auto net = grid::load_network(kData + "/hedge3.json");
  auto base = solved_base(net);
  const auto k = *net.contingency_index("lose-cheap");
  auto cp = opf::build_contingency_problem(net, k, base);
  auto rc = solve(cp);
  ASSERT_EQ(rc.status, ipm::Status::optimal);
  auto approx = opf::to_point(net, cp.index, rc.x, "lose-cheap");
  auto rr = recovery::recover_feasible(net, k, base, approx);
  auto topo = grid::apply_contingency(net, k);
  EXPECT_EQ(rr.status, ipm::Status::optimal);
  // The reserve unit saturates; the shortfall shows up as active imbalance.
  EXPECT_NEAR(rr.point.p[*net.generator_index("reserve")], 0.6, 1e-8);
  EXPECT_GT(opf::case_penalty(net, topo, rr.point, opf::PenaltyMode::quadratic).active, 0.0);
  EXPECT_LE(recovery::coupling_residuals(net, topo, base, rr.point).max(), 1e-8);
}

TEST(Recover, RigidContingencyKeepsSignalAtZero) {
  auto net = grid::load_network(kData + "/hedge3.json");
  net.generators[*net.generator_index("reserve")].drop_const = 0.0;
  auto base = solved_base(net);
  const auto k = *net.contingency_index("lose-cheap");
  auto cp = opf::build_contingency_problem(net, k, base);
  auto rc = solve(cp);
  auto approx = opf::to_point(net, cp.index, rc.x, "lose-cheap");
  auto rr = recovery::recover_feasible(net, k, base, approx);
  EXPECT_TRUE(rr.plan.delta_fixed);
  EXPECT_EQ(rr.point.delta, 0.0);
  for (auto g : rr.plan.held) EXPECT_NEAR(rr.point.p[g], base.p[g], 1e-12);
}
