#include <gtest/gtest.h>

#include "scacopf/ipm/solver.hpp"
#include "toy_blocks.hpp"

using namespace scacopf;
using namespace scacopf::nlp;

namespace {

// Records whether it was ever evaluated on or outside the variable bounds.
class InteriorSentinel : public ObjectiveBlock {
 public:
  InteriorSentinel(const VariableSpace& s, bool& flag) : ObjectiveBlock("sentinel"), s_(s), flag_(flag) {}
  double value(std::span<const double> x) const override {
    check(x);
    return 0.0;
  }
  void add_gradient(std::span<const double> x, std::span<double>) const override { check(x); }
  std::vector<Entry> hessian_pattern() const override { return {}; }
  void hessian_values(std::span<const double>, double, std::span<double>) const override {}

 private:
  void check(std::span<const double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (s_.is_fixed(i)) continue;
      if (x[i] <= s_.lower(i) || x[i] >= s_.upper(i)) flag_ = true;
    }
  }
  VariableSpace s_;
  bool& flag_;
};

NlpProblem bound_problem() {
  VariableSpace s;
  s.add("x", 1.0, kInf);
  NlpProblem p(std::move(s));
  p.add_objective(std::make_unique<toy::Squares>(std::vector<std::size_t>{0}, std::vector<double>{1},
                                                 std::vector<double>{0}));
  p.finalize();
  return p;
}

// min (x0-1)^2 + 2 (x1-2)^2 + x2^2  s.t. x0 x1 = 1, 0.5 <= x0 x2 <= 2, x in [0, 3]^2 x [-1, 5]
NlpProblem mixed_problem() {
  VariableSpace s;
  s.add("x0", 0, 3);
  s.add("x1", 0, 3);
  s.add("x2", -1, 5);
  NlpProblem p(std::move(s));
  p.add_objective(std::make_unique<toy::Squares>(std::vector<std::size_t>{0, 1, 2},
                                                 std::vector<double>{1, 2, 1}, std::vector<double>{1, 2, 0}));
  p.add_constraints(std::make_unique<toy::Bilinear>(0, 1, 1, 1));
  p.add_constraints(std::make_unique<toy::Bilinear>(0, 2, 0.5, 2));
  p.finalize();
  return p;
}

// Recomputes the documented residual from nlp-core evaluation only.
double independent_kkt(const NlpProblem& p, const ipm::IpmResult& r) {
  const auto n = p.num_variables();
  const auto m = p.num_constraints();
  auto ws = p.make_workspace();
  EvalResult e;
  p.eval(r.x, r.lambda, 1.0, ws, e);
  std::vector<double> cl(m), cu(m);
  p.constraint_bounds(cl, cu);
  std::vector<double> stat = e.grad;
  const auto& c = p.cache();
  for (std::size_t k = 0; k < c.jac_nnz(); ++k) stat[c.jac_cols[k]] += e.jac[k] * r.lambda[c.jac_rows[k]];
  const double sf = r.objective_scaling;
  double d = 0, pr = 0, comp = 0, zs = 0, ls = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (p.space().is_fixed(j)) continue;
    d = std::max(d, std::abs(sf * (stat[j] - r.z_lower[j] + r.z_upper[j])));
    if (std::isfinite(p.space().lower(j))) comp = std::max(comp, sf * r.z_lower[j] * (r.x[j] - p.space().lower(j)));
    if (std::isfinite(p.space().upper(j))) comp = std::max(comp, sf * r.z_upper[j] * (p.space().upper(j) - r.x[j]));
    zs += r.z_lower[j] + r.z_upper[j];
  }
  for (std::size_t i = 0; i < m; ++i) {
    pr = std::max({pr, cl[i] - e.c[i], e.c[i] - cu[i]});
    ls += std::abs(r.lambda[i]);
    if (cl[i] == cu[i]) continue;
    comp = std::max(comp, sf * std::max(-r.lambda[i], 0.0) * (e.c[i] - cl[i]));
    comp = std::max(comp, sf * std::max(r.lambda[i], 0.0) * (cu[i] - e.c[i]));
  }
  const double sd = std::max(1.0, sf * (ls + zs) / (100.0 * static_cast<double>(m + n)));
  const double sc = std::max(1.0, sf * zs / (100.0 * static_cast<double>(n)));
  return std::max({d / sd, pr, comp / sc});
}

}  // namespace

TEST(Ipm, BoundConstrainedQuadratic) {
  const auto p = bound_problem();
  const auto r = ipm::solve(p, std::nullopt);
  ASSERT_EQ(r.status, ipm::Status::optimal);
  EXPECT_NEAR(r.x[0], 1.0, 1e-7);
  EXPECT_NEAR(r.z_lower[0], 2.0, 1e-6);
  EXPECT_LE(r.kkt_residual, 1e-8);
}

TEST(Ipm, RowConstrainedQuadratic) {
  VariableSpace s;
  s.add("x");
  s.add("y", -kInf, kInf);
  NlpProblem p(std::move(s));
  p.add_objective(std::make_unique<toy::Squares>(std::vector<std::size_t>{0}, std::vector<double>{1},
                                                 std::vector<double>{0}));
  // x * 1 >= 1 via bilinear with y fixed.
  p.space().fix(1, 1.0);
  p.add_constraints(std::make_unique<toy::Bilinear>(0, 1, 1.0, kInf));
  p.finalize();
  const auto r = ipm::solve(p, std::nullopt);
  ASSERT_EQ(r.status, ipm::Status::optimal);
  EXPECT_NEAR(r.x[0], 1.0, 1e-7);
  EXPECT_NEAR(r.lambda[0], -2.0, 1e-6);
  EXPECT_EQ(r.x[1], 1.0);
}

TEST(Ipm, MixedProblemKktMatchesIndependentRecomputation) {
  const auto p = mixed_problem();
  const auto r = ipm::solve(p, std::nullopt);
  ASSERT_EQ(r.status, ipm::Status::optimal);
  EXPECT_NEAR(r.x[0] * r.x[1], 1.0, 1e-8);
  EXPECT_NEAR(independent_kkt(p, r), r.kkt_residual, 1e-12);
  EXPECT_LE(r.kkt_residual, 1e-8);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_GE(r.z_lower[j], 0.0);
    EXPECT_GE(r.z_upper[j], 0.0);
  }
}

TEST(Ipm, IteratesStayStrictlyInterior) {
  bool touched = false;
  VariableSpace s;
  s.add("x0", 0, 3);
  s.add("x1", 0, 3);
  s.add("x2", -1, 5);
  NlpProblem p(s);
  p.add_objective(std::make_unique<toy::Squares>(std::vector<std::size_t>{0, 1, 2},
                                                 std::vector<double>{1, 2, 1}, std::vector<double>{4, -2, 0}));
  p.add_objective(std::make_unique<InteriorSentinel>(s, touched));
  p.add_constraints(std::make_unique<toy::Bilinear>(0, 2, 0.5, 2));
  p.finalize();
  const auto r = ipm::solve(p, std::nullopt);
  EXPECT_TRUE(r.converged());
  EXPECT_NEAR(r.x[0], 3.0, 1e-6);
  EXPECT_FALSE(touched);
}

TEST(Ipm, PrimalDualWarmStartIsFast) {
  const auto p = mixed_problem();
  const auto cold = ipm::solve(p, std::nullopt);
  ASSERT_TRUE(cold.converged());
  ipm::IpmOptions opts;
  opts.warm_start_mode = ipm::WarmStartMode::primal_dual;
  const auto warm = ipm::solve(p, ipm::warm_start_from(cold, p.space(), ipm::WarmStartMode::primal_dual), opts);
  ASSERT_TRUE(warm.converged());
  EXPECT_LE(warm.iterations, 5);
  EXPECT_LT(warm.iterations, cold.iterations);
  EXPECT_NEAR(warm.objective, cold.objective, 1e-7);
}

TEST(Ipm, LogEmitsOneLinePerIteration) {
  const auto p = bound_problem();
  ipm::IpmOptions opts;
  std::vector<std::string> lines;
  opts.log = [&](std::string_view s) { lines.emplace_back(s); };
  const auto r = ipm::solve(p, std::nullopt, opts);
  EXPECT_EQ(lines.size(), static_cast<std::size_t>(r.iterations + 1));
  for (const auto& l : lines) {
    EXPECT_EQ(l.find('\n'), std::string::npos);
    EXPECT_EQ(l.rfind("iter=", 0), 0u);
  }
}

TEST(Ipm, RequiresStartForWarmModes) {
  const auto p = bound_problem();
  ipm::IpmOptions opts;
  opts.warm_start_mode = ipm::WarmStartMode::primal;
  EXPECT_THROW(ipm::solve(p, std::nullopt, opts), std::invalid_argument);
}

TEST(WarmStart, PrimalResetsDuals) {
  const auto p = mixed_problem();
  const auto r = ipm::solve(p, std::nullopt);
  const auto sp = ipm::warm_start_from(r, p.space(), ipm::WarmStartMode::primal);
  EXPECT_TRUE(sp.lambda.empty());
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(sp.z_lower[j], 1.0);
    EXPECT_EQ(sp.z_upper[j], 1.0);
  }
  ipm::IpmOptions opts;
  opts.warm_start_mode = ipm::WarmStartMode::primal;
  EXPECT_TRUE(ipm::solve(p, sp, opts).converged());
}

TEST(WarmStart, PushesBoundPointsInside) {
  VariableSpace s;
  s.add("a", 0, 2);
  s.add("b", 1, kInf);
  s.add("c", 0, 0);
  ipm::IpmResult base;
  base.x = {2.0, 0.0, 0.3};
  const auto sp = ipm::warm_start_from(base, s, ipm::WarmStartMode::primal);
  EXPECT_DOUBLE_EQ(sp.x[0], 2.0 - 1e-4 * 2.0);
  EXPECT_DOUBLE_EQ(sp.x[1], 1.0 + 1e-4);
  EXPECT_EQ(sp.x[2], 0.0);
}

TEST(WarmStart, DimensionMismatchThrows) {
  VariableSpace s;
  s.add("a", 0, 2);
  ipm::IpmResult base;
  base.x = {1.0, 2.0};
  EXPECT_THROW(ipm::warm_start_from(base, s, ipm::WarmStartMode::primal), std::invalid_argument);
}
