#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <string>

#include "../support/oracles.hpp"
#include "../support/sampling.hpp"
#include "scacopf/grid/network.hpp"
#include "scacopf/ipm/solver.hpp"
#include "scacopf/nlp/check.hpp"
#include "scacopf/opf/blocks.hpp"
#include "scacopf/opf/case_model.hpp"
#include "scacopf/opf/flows.hpp"
#include "scacopf/opf/penalty.hpp"
#include "scacopf/opf/score.hpp"
#include "scacopf/opf/solution_io.hpp"

using namespace scacopf;

namespace {

const std::string kData = SCACOPF_DATA_DIR;

grid::Network case2() { return grid::load_network(kData + "/case2.json"); }
grid::Network case14() { return grid::load_network(kData + "/case14.json"); }

ipm::IpmResult solve(const opf::CaseProblem& cp) {
  return ipm::solve(cp.problem, ipm::StartPoint{cp.start, {}, {}, {}, ipm::WarmStartMode::cold}, {});
}

opf::OperatingPoint solved_base(const grid::Network& net) {
  auto cp = opf::build_base_problem(net, {});
  auto r = solve(cp);
  EXPECT_EQ(r.status, ipm::Status::optimal);
  return opf::to_point(net, cp.index, r.x, "base");
}

grid::Branch branch(double g, double b, double bch) {
  grid::Branch e;
  e.g_series = g;
  e.b_series = b;
  e.b_charge = bch;
  return e;
}

}  // namespace

TEST(QuadPenaltyFit, MatchesSlopesAtZeroAndFirstBin) {
  auto fit = opf::quad_penalty_fit({1000, 5000, 0.02});
  EXPECT_DOUBLE_EQ(fit.a1, 1000.0);
  EXPECT_DOUBLE_EQ(fit.a2, 100000.0);
  EXPECT_DOUBLE_EQ(fit.derivative(0.0), 1000.0);
  EXPECT_NEAR(fit.derivative(0.02), 5000.0, 1e-9);
}

TEST(QuadPenaltyFit, EqualSlopesGiveLinearPenalty) {
  auto fit = opf::quad_penalty_fit({7, 7, 0.3});
  EXPECT_EQ(fit.a2, 0.0);
  EXPECT_DOUBLE_EQ(fit(2.0), 14.0);
}

TEST(QuadPenaltyFit, UnitCase) {
  auto fit = opf::quad_penalty_fit({1, 3, 1});
  EXPECT_DOUBLE_EQ(fit.a1, 1.0);
  EXPECT_DOUBLE_EQ(fit.a2, 1.0);
}

TEST(BranchFlow, NoFlowWithoutAngleOrVoltageDifference) {
  auto f = opf::branch_flow(1, 1, 0.3, 0.3, branch(1, 0, 0));
  EXPECT_NEAR(f.p_from, 0.0, 1e-15);
  EXPECT_NEAR(f.q_from, 0.0, 1e-15);
}

TEST(BranchFlow, ChargingOnlyReactive) {
  auto f = opf::branch_flow(1, 1, 0, 0, branch(0, -5, 0.2));
  EXPECT_NEAR(f.p_from, 0.0, 1e-15);
  EXPECT_NEAR(f.q_from, -0.1, 1e-14);
  EXPECT_NEAR(f.q_to, -0.1, 1e-14);
}

TEST(BranchFlow, AgreesWithComplexPiModelAndLossesAreNonnegative) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> v(0.85, 1.15), th(-0.6, 0.6), g(0, 5), b(-30, 5), bch(0, 0.5);
  for (int i = 0; i < 2000; ++i) {
    auto e = branch(g(rng), b(rng), bch(rng));
    const double vf = v(rng), vt = v(rng), tf = th(rng), tt = th(rng);
    auto f = opf::branch_flow(vf, vt, tf, tt, e);
    auto o = oracle::pi_model(vf, vt, tf, tt, e);
    EXPECT_NEAR(f.p_from, o.p_from, 1e-11);
    EXPECT_NEAR(f.q_from, o.q_from, 1e-11);
    EXPECT_NEAR(f.p_to, o.p_to, 1e-11);
    EXPECT_NEAR(f.q_to, o.q_to, 1e-11);
    EXPECT_GE(f.p_from + f.p_to, -1e-12);
  }
}

TEST(BaseProblem, TwoBusDimensions) {
  auto net = case2();
  auto cp = opf::build_base_problem(net, {});
  // 2 (v, theta) per bus, p and q, 4 flows, 2 thermal slacks, 4 balance slacks per bus.
  EXPECT_EQ(cp.problem.num_variables(), 20u);
  // 4 flow definitions, 2 thermal rows, 2 balance rows per bus.
  EXPECT_EQ(cp.problem.num_constraints(), 10u);
  EXPECT_EQ(opf::reference_bus(net), 0u);
  EXPECT_TRUE(cp.problem.space().is_fixed(cp.index.theta[0]));
}

TEST(BaseProblem, TwoBusOptimumMatchesGridSearch) {
  auto net = case2();
  auto cp = opf::build_base_problem(net, {});
  auto r = solve(cp);
  ASSERT_EQ(r.status, ipm::Status::optimal);
  auto pt = opf::to_point(net, cp.index, r.x, "base");
  for (std::size_t n = 0; n < 2; ++n) {
    EXPECT_LT(pt.sp_plus[n] + pt.sp_minus[n], 1e-6);
    EXPECT_LT(pt.sq_plus[n] + pt.sq_minus[n], 1e-6);
  }
  auto gs = oracle::two_bus_grid_search(net);
  EXPECT_NEAR(r.objective, gs.objective, 1e-4 * std::abs(gs.objective));
  EXPECT_LE(gs.objective, gs.grid_objective);
  // Frozen oracle output; the generator bus sits at its upper voltage bound.
  EXPECT_NEAR(gs.objective, 6.2861183485, 1e-9);
  EXPECT_NEAR(gs.x[0], 1.05, 1e-12);
}

TEST(BaseProblem, ShortageActivatesSlackAtMarginalPenalty) {
  auto net = case2();
  net.buses[1].p_load = 2.3;  // above the generator's 2.0 capacity
  auto cp = opf::build_base_problem(net, {});
  auto r = solve(cp);
  ASSERT_EQ(r.status, ipm::Status::optimal);
  const double s = r.x[cp.index.sp_minus[1]] + r.x[cp.index.sp_minus[0]];
  EXPECT_GT(s, 0.2);
  // Balance rows come after 4 flow and 2 thermal rows; bus 1 active row is the third balance row.
  const auto row = cp.problem.row_offset(2) + 2;
  const auto fit = opf::quad_penalty_fit(net.penalty_p);
  EXPECT_NEAR(std::abs(r.lambda[row]), fit.derivative(r.x[cp.index.sp_minus[1]]),
              1e-4 * fit.derivative(r.x[cp.index.sp_minus[1]]));
}

TEST(BaseProblem, ZeroSurrogateCoefficientLeavesOptimumUnchanged) {
  auto net = case14();
  auto plain = opf::build_base_problem(net, {});
  std::vector<opf::SurrogateTerm> terms{{0, opf::SurrogateSite::generator, 1, 0.0}};
  auto with = opf::build_base_problem(net, terms);
  auto r0 = solve(plain);
  auto r1 = solve(with);
  ASSERT_EQ(r0.status, ipm::Status::optimal);
  ASSERT_EQ(r1.status, ipm::Status::optimal);
  EXPECT_NEAR(r0.objective, r1.objective, 1e-8 * std::abs(r0.objective));
  for (std::size_t i = 0; i < r0.x.size(); ++i) EXPECT_NEAR(r0.x[i], r1.x[i], 1e-6);
}

TEST(Derivatives, BaseContingencyAndCanvasBlocks) {
  auto net2 = case2();
  auto net14 = case14();
  std::mt19937_64 rng(5);
  auto check_all = [&](const opf::CaseProblem& cp, int points) {
    for (int i = 0; i < points; ++i) {
      auto x = sampling::random_interior(cp.problem, cp.start, rng);
      auto rep = nlp::check_derivatives(cp.problem, x, rng());
      EXPECT_TRUE(rep.passed()) << rep.to_string();
    }
  };
  check_all(opf::build_base_problem(net2, {}), 3);
  std::vector<opf::SurrogateTerm> terms{{0, opf::SurrogateSite::generator, 1, 2.5},
                                        {5, opf::SurrogateSite::branch_from, 3, 1.5}};
  check_all(opf::build_base_problem(net14, terms), 3);
  auto base = solved_base(net14);
  check_all(opf::build_contingency_problem(net14, 0, base), 2);
  check_all(opf::build_contingency_problem(net14, 7, base), 2);
  opf::RestrictedCanvas canvas(net14, 0, base);
  canvas.add_response(1, base.p[1]);
  check_all(canvas.finalize(), 2);
}

TEST(ContingencyProblem, CopyBasePointIsFeasibleAtZeroEpsilon) {
  auto net = case14();
  auto base = solved_base(net);
  for (std::size_t k = 0; k < net.contingencies.size(); ++k) {
    auto cp = opf::build_contingency_problem(net, k, base, 0.0);
    std::vector<double> c(cp.problem.num_constraints()), lo(c.size()), hi(c.size());
    cp.problem.residuals(cp.start, c);
    cp.problem.constraint_bounds(lo, hi);
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_GE(c[i], lo[i] - 1e-9) << net.contingencies[k].id << " row " << i;
      EXPECT_LE(c[i], hi[i] + 1e-9) << net.contingencies[k].id << " row " << i;
    }
    const auto& sp = cp.problem.space();
    for (std::size_t j = 0; j < sp.size(); ++j) {
      EXPECT_GE(cp.start[j], sp.lower(j) - 1e-12) << sp.name(j);
      EXPECT_LE(cp.start[j], sp.upper(j) + 1e-12) << sp.name(j);
    }
  }
}

TEST(ContingencyProblem, RelaxedSetGrowsWithEpsilon) {
  auto net = case14();
  auto base = solved_base(net);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::size_t k : {0u, 3u, 10u}) {
    auto topo = grid::apply_contingency(net, k);
    auto db = grid::delta_bounds(net, topo, base.p);
    std::vector<opf::CaseProblem> problems;
    for (double eps : {0.0, 1e-4, 1e-2}) problems.push_back(opf::build_contingency_problem(net, k, base, eps));
    for (int s = 0; s < 50; ++s) {
      // Exactly complementary point: clipped response and voltage at a q bound when it moves.
      auto pt = opf::copy_base_point(net, topo, base);
      pt.delta = db.rigid ? 0.0 : db.lower + u(rng) * (db.upper - db.lower);
      for (auto g : topo.generators) {
        const auto& gen = net.generators[g];
        const double target = base.p[g] + gen.drop_const * pt.delta;
        pt.p[g] = std::clamp(target, gen.p_min, gen.p_max);
        pt.rho_plus[g] = std::max(0.0, target - pt.p[g]);
        pt.rho_minus[g] = std::max(0.0, pt.p[g] - target);
      }
      for (auto n : topo.controlled_buses(net)) {
        const double v = topo.v_min[n] + u(rng) * (topo.v_max[n] - topo.v_min[n]);
        pt.v[n] = v;
        pt.nu_plus[n] = std::max(0.0, v - base.v[n]);
        pt.nu_minus[n] = std::max(0.0, base.v[n] - v);
        for (auto g : topo.active_generators_at(net, n)) {
          const auto& gen = net.generators[g];
          pt.q[g] = v > base.v[n] ? gen.q_min : v < base.v[n] ? gen.q_max : 0.5 * (gen.q_min + gen.q_max);
        }
      }
      for (auto& cp : problems) {
        auto x = opf::to_vector(net, cp.index, pt);
        std::vector<double> c(cp.problem.num_constraints()), lo(c.size()), hi(c.size());
        cp.problem.residuals(x, c);
        cp.problem.constraint_bounds(lo, hi);
        for (std::size_t b = 3; b <= 6; ++b) {
          const auto& blk = cp.problem.constraint_block(b);
          for (std::size_t r = 0; r < blk.rows(); ++r) {
            const auto i = cp.problem.row_offset(b) + r;
            EXPECT_GE(c[i], lo[i] - 1e-12) << blk.name();
            EXPECT_LE(c[i], hi[i] + 1e-12) << blk.name();
          }
        }
      }
    }
  }
}

TEST(ContingencyProblem, DropCapsFollowResponseRange) {
  auto net = case14();
  auto base = solved_base(net);
  const double eps = 1e-4;
  auto cp = opf::build_contingency_problem(net, 0, base, eps);
  auto topo = grid::apply_contingency(net, 0);
  auto db = grid::delta_bounds(net, topo, base.p);
  const auto& caps = dynamic_cast<const opf::ProductCapBlock&>(cp.problem.constraint_block(4));
  for (const auto& it : caps.items()) {
    const auto& name = cp.problem.space().name(it.x);
    const auto gid = name.substr(name.find('[') + 1, name.size() - name.find('[') - 2);
    const auto& gen = net.generators[*net.generator_index(gid)];
    const double width = gen.p_max - gen.p_min;
    if (name.rfind("rho_plus", 0) == 0)
      EXPECT_NEAR(it.cap, eps * gen.drop_const * db.upper * width, 1e-15);
    else
      EXPECT_NEAR(it.cap, eps * (-gen.drop_const * db.lower) * width, 1e-15);
  }
}

TEST(Canvas, MutationHooks) {
  auto net = case14();
  auto base = solved_base(net);
  opf::RestrictedCanvas canvas(net, 0, base);
  EXPECT_THROW(canvas.variable("p[nope]"), std::invalid_argument);
  const auto pv = canvas.variable("p[G2]");
  canvas.fix("p[G2]", 0.4);
  EXPECT_EQ(canvas.problem().space().lower(pv), 0.4);
  EXPECT_EQ(canvas.start()[pv], 0.4);
  canvas.set_bounds("v[3]", 1.0, 1.01);
  EXPECT_GE(canvas.start()[canvas.variable("v[3]")], 1.0);
  canvas.add_response(2, base.p[2]);
  EXPECT_EQ(canvas.pending_constraints(), 1u);
  const auto rows_before = canvas.problem().num_constraints();
  auto& cp = canvas.finalize();
  EXPECT_EQ(cp.problem.num_constraints(), rows_before + 1);
  EXPECT_THROW(canvas.add_response(3, base.p[3]), std::logic_error);
}

TEST(Canvas, RegularizationDoesNotMoveTwoBusOptimum) {
  // case2 has no contingencies; add a parallel branch and lose it.
  auto net = case2();
  auto dup = net.branches[0];
  dup.id = "e2";
  net.branches.push_back(dup);
  net.contingencies.push_back({"lose-e2", grid::ContingencyKind::branch, "e2", 0});
  grid::validate(net);
  auto base = solved_base(net);
  // With generator output and voltage fixed the power flow has a unique solution;
  // without the fixes any zero-penalty state is optimal.
  auto fixed = [&](double reg) {
    auto c = std::make_unique<opf::RestrictedCanvas>(net, 0, base, reg);
    c->fix("p[g1]", base.p[0]);
    c->fix("v[1]", base.v[0]);
    return c;
  };
  auto plain = fixed(0.0);
  auto reg = fixed(1e-6);
  auto r0 = solve(plain->finalize());
  auto r1 = solve(reg->finalize());
  ASSERT_EQ(r0.status, ipm::Status::optimal);
  ASSERT_EQ(r1.status, ipm::Status::optimal);
  for (std::size_t i = 0; i < r0.x.size(); ++i) EXPECT_NEAR(r0.x[i], r1.x[i], 1e-6);
}

TEST(Score, ZeroSlacksGiveGenerationCost) {
  auto net = case2();
  auto base = opf::empty_point(net, "base");
  base.v = {1.0, 1.0};
  base.p = {0.6};
  auto s = opf::score_solution(net, base, {}, opf::PenaltyMode::piecewise);
  EXPECT_DOUBLE_EQ(s.total, net.generators[0].cost(0.6));
  EXPECT_FALSE(s.partial);
}

TEST(Score, PiecewiseAndQuadraticSingleSlack) {
  auto net = case2();
  auto base = opf::empty_point(net, "base");
  base.v = {1.0, 1.0};
  const double x = net.penalty_p.bin1_width;
  base.sp_plus[1] = x;
  auto pw = opf::score_solution(net, base, {}, opf::PenaltyMode::piecewise);
  auto qd = opf::score_solution(net, base, {}, opf::PenaltyMode::quadratic);
  EXPECT_DOUBLE_EQ(pw.base_penalty.total(), net.penalty_p.slope1 * x);
  EXPECT_NEAR(qd.base_penalty.total() - pw.base_penalty.total(),
              (net.penalty_p.slope2 - net.penalty_p.slope1) * x / 2.0, 1e-12);
  auto linear = net;
  linear.penalty_p.slope2 = linear.penalty_p.slope1;
  EXPECT_GE(qd.total, opf::score_solution(linear, base, {}, opf::PenaltyMode::quadratic).total);
}

TEST(Score, MissingContingencyMarksPartial) {
  auto net = case14();
  auto base = solved_base(net);
  std::map<std::string, opf::OperatingPoint> pts;
  auto topo = grid::apply_contingency(net, 0);
  pts.emplace(net.contingencies[0].id, opf::copy_base_point(net, topo, base));
  auto s = opf::score_solution(net, base, pts, opf::PenaltyMode::piecewise);
  EXPECT_TRUE(s.partial);
  EXPECT_TRUE(s.contingencies[0].present);
  EXPECT_FALSE(s.contingencies[1].present);
  EXPECT_DOUBLE_EQ(s.contingency_weight, 1.0 / static_cast<double>(net.contingencies.size()));
  EXPECT_NEAR(s.total,
              s.generation_cost + s.base_penalty.total() + s.contingency_weight * s.contingencies[0].penalty.total(),
              1e-9 * std::abs(s.total));
}

TEST(SolutionIo, RoundTripsContingencyRecord) {
  auto net = case14();
  auto base = solved_base(net);
  auto topo = grid::apply_contingency(net, 2);
  auto pt = opf::copy_base_point(net, topo, base);
  pt.delta = 0.125;
  pt.sp_minus[4] = 0.25;
  auto text = opf::solution_to_json(net, pt);
  auto back = opf::parse_solution(net, text);
  EXPECT_EQ(back.case_id, pt.case_id);
  EXPECT_EQ(back.v, pt.v);
  EXPECT_EQ(back.theta, pt.theta);
  EXPECT_EQ(back.p, pt.p);
  EXPECT_EQ(back.q, pt.q);
  EXPECT_EQ(back.sp_minus, pt.sp_minus);
  EXPECT_EQ(back.rho_plus, pt.rho_plus);
  EXPECT_EQ(back.nu_minus, pt.nu_minus);
  EXPECT_EQ(back.delta, pt.delta);
}

TEST(SolutionIo, RejectsUnknownElements) {
  auto net = case2();
  EXPECT_THROW(opf::parse_solution(net, R"({"case": "base", "buses": [{"id": "9", "v": 1, "theta": 0}]})"),
               opf::SolutionError);
  EXPECT_THROW(opf::parse_solution(net, R"({"case": "nope"})"), opf::SolutionError);
}
