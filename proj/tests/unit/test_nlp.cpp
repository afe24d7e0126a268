#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "scacopf/nlp/check.hpp"
#include "scacopf/nlp/problem.hpp"
#include "toy_blocks.hpp"

using namespace scacopf::nlp;

namespace {

VariableSpace space_of(std::size_t n) {
  VariableSpace s;
  for (std::size_t i = 0; i < n; ++i) s.add("x" + std::to_string(i));
  return s;
}

}  // namespace

TEST(VariableSpace, RejectsDuplicatesAndInvertedBounds) {
  VariableSpace s;
  EXPECT_EQ(s.add("a", 0, 1), 0u);
  EXPECT_THROW(s.add("a"), std::invalid_argument);
  EXPECT_THROW(s.add("b", 2, 1), std::invalid_argument);
  EXPECT_EQ(s.find("a"), 0u);
  EXPECT_FALSE(s.find("b").has_value());
  s.fix(0, 0.5);
  EXPECT_TRUE(s.is_fixed(0));
}

TEST(Finalize, SharedEntryGetsOneSlot) {
  NlpProblem p(space_of(6));
  p.add_constraints(std::make_unique<toy::Bilinear>(3, 5, 0, 1));
  p.add_constraints(std::make_unique<toy::Bilinear>(5, 3, 0, 1));
  const auto& c = p.finalize();
  ASSERT_EQ(c.hess_nnz(), 1u);
  EXPECT_EQ(c.hess_rows[0], 5u);
  EXPECT_EQ(c.hess_cols[0], 3u);
  EXPECT_EQ(c.con_hess_slots[0][0], 0u);
  EXPECT_EQ(c.con_hess_slots[1][0], 0u);
  EXPECT_EQ(c.jac_nnz(), 4u);
  EXPECT_EQ(c.zeta, 6u);
}

TEST(Finalize, DuplicateJacobianEntryMerges) {
  NlpProblem p(space_of(6));
  p.add_constraints(std::make_unique<toy::Scatter>(
      4, std::vector<toy::Scatter::Term>{{3, 5, 1.0}, {3, 5, 2.0}, {0, 1, 1.0}}));
  const auto& c = p.finalize();
  ASSERT_EQ(c.jac_nnz(), 2u);
  EXPECT_EQ(c.jac_rows[1], 3u);
  EXPECT_EQ(c.jac_cols[1], 5u);
  EXPECT_EQ(c.jac_slots[0][0], 1u);
  EXPECT_EQ(c.jac_slots[0][1], 1u);
  EXPECT_EQ(c.jac_slots[0][2], 0u);
}

TEST(Finalize, SortedPatternGivesIdentitySlots) {
  NlpProblem p(space_of(4));
  p.add_constraints(std::make_unique<toy::Scatter>(
      3, std::vector<toy::Scatter::Term>{{0, 0, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}}));
  const auto& c = p.finalize();
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(c.jac_slots[0][i], i);
}

TEST(Finalize, IdempotentAndFrozen) {
  NlpProblem p(space_of(3));
  p.add_constraints(std::make_unique<toy::Bilinear>(0, 1, 0, 1));
  const auto* first = &p.finalize();
  const auto rows = first->jac_rows;
  EXPECT_EQ(&p.finalize(), first);
  EXPECT_EQ(p.finalize().jac_rows, rows);
  EXPECT_THROW(p.add_constraints(std::make_unique<toy::Bilinear>(0, 2, 0, 1)), std::logic_error);
}

TEST(Finalize, OutOfRangeIndexThrows) {
  NlpProblem p(space_of(3));
  p.add_constraints(std::make_unique<toy::Bilinear>(0, 7, 0, 1));
  EXPECT_THROW(p.finalize(), std::out_of_range);
}

TEST(Finalize, RandomPatternMatchesDenseAccumulation) {
  std::mt19937_64 rng(7);
  const std::size_t n = 25, rows = 12;
  std::uniform_int_distribution<std::size_t> col(0, n - 1), row(0, rows - 1), block(0, 2);
  std::uniform_real_distribution<double> coef(-2, 2);
  std::vector<std::vector<toy::Scatter::Term>> terms(3);
  std::vector<toy::Scatter::Term> all;
  for (int k = 0; k < 200; ++k) {
    toy::Scatter::Term t{row(rng), col(rng), coef(rng)};
    // About 30% of entries repeat an earlier (row, col).
    if (!all.empty() && k % 10 < 3) {
      std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
      const auto& o = all[pick(rng)];
      t.row = o.row;
      t.col = o.col;
    }
    all.push_back(t);
    terms[block(rng)].push_back(t);
  }
  NlpProblem p(space_of(n));
  for (auto& t : terms) p.add_constraints(std::make_unique<toy::Scatter>(rows, t));
  const auto& cache = p.finalize();
  EXPECT_EQ(cache.zeta, 400u);

  std::vector<double> x(n), lambda(3 * rows);
  for (auto& v : x) v = coef(rng);
  for (auto& v : lambda) v = coef(rng);
  auto ws = p.make_workspace();
  EvalResult r;
  p.eval(x, lambda, 1.0, ws, r);

  std::vector<double> jd(3 * rows * n, 0.0), hd(n * n, 0.0), jd2(3 * rows * n, 0.0), hd2(n * n, 0.0);
  for (std::size_t b = 0; b < 3; ++b)
    for (const auto& t : terms[b]) {
      jd[(b * rows + t.row) * n + t.col] += t.a * x[t.col];
      hd[t.col * n + t.col] += lambda[b * rows + t.row] * t.a;
    }
  for (std::size_t e = 0; e < cache.jac_nnz(); ++e) jd2[cache.jac_rows[e] * n + cache.jac_cols[e]] += r.jac[e];
  for (std::size_t e = 0; e < cache.hess_nnz(); ++e) hd2[cache.hess_rows[e] * n + cache.hess_cols[e]] += r.hess[e];
  for (std::size_t i = 0; i < jd.size(); ++i) EXPECT_DOUBLE_EQ(jd[i], jd2[i]);
  for (std::size_t i = 0; i < hd.size(); ++i) EXPECT_NEAR(hd[i], hd2[i], 1e-12);
  // Sorted and duplicate-free.
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t e = 0; e < cache.jac_nnz(); ++e) {
    EXPECT_TRUE(seen.insert({cache.jac_rows[e], cache.jac_cols[e]}).second);
    if (e > 0)
      EXPECT_LT(std::pair(cache.jac_rows[e - 1], cache.jac_cols[e - 1]),
                std::pair(cache.jac_rows[e], cache.jac_cols[e]));
  }
}

TEST(Eval, SumOfSquares) {
  NlpProblem p(space_of(2));
  p.add_objective(std::make_unique<toy::Squares>(std::vector<std::size_t>{0, 1},
                                                 std::vector<double>{1, 1}, std::vector<double>{0, 0}));
  p.finalize();
  auto ws = p.make_workspace();
  EvalResult r;
  const std::vector<double> x{1, 2};
  p.eval(x, {}, 1.0, ws, r);
  EXPECT_DOUBLE_EQ(r.f, 5.0);
  EXPECT_DOUBLE_EQ(r.grad[0], 2.0);
  EXPECT_DOUBLE_EQ(r.grad[1], 4.0);
}

TEST(Eval, BilinearJacobianAndHessian) {
  NlpProblem p(space_of(2));
  p.add_constraints(std::make_unique<toy::Bilinear>(0, 1, 6, 6));
  const auto& c = p.finalize();
  auto ws = p.make_workspace();
  EvalResult r;
  const std::vector<double> x{2, 3}, lambda{1};
  p.eval(x, lambda, 1.0, ws, r);
  EXPECT_DOUBLE_EQ(r.c[0], 6.0);
  EXPECT_DOUBLE_EQ(r.jac[0], 3.0);
  EXPECT_DOUBLE_EQ(r.jac[1], 2.0);
  ASSERT_EQ(c.hess_nnz(), 1u);
  EXPECT_EQ(c.hess_rows[0], 1u);
  EXPECT_EQ(c.hess_cols[0], 0u);
  EXPECT_DOUBLE_EQ(r.hess[0], 1.0);
}

TEST(Eval, NonFiniteNamesBlock) {
  NlpProblem p(space_of(2));
  p.add_objective(std::make_unique<toy::Poisoned>(0, 1.0));
  p.finalize();
  const std::vector<double> x{2, 0};
  try {
    p.objective(x);
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_NE(std::string(e.what()).find("poisoned"), std::string::npos);
  }
}

TEST(Check, ExactQuadraticIsTight) {
  NlpProblem p(space_of(3));
  p.add_objective(std::make_unique<toy::Squares>(std::vector<std::size_t>{0, 1, 2},
                                                 std::vector<double>{1, 2, 3}, std::vector<double>{1, -1, 0}));
  p.add_constraints(std::make_unique<toy::Bilinear>(0, 2, -1, 1));
  p.finalize();
  const std::vector<double> x{0.3, -0.7, 1.9};
  const auto rep = check_derivatives(p, x, 1);
  EXPECT_TRUE(rep.passed()) << rep.to_string();
  EXPECT_LE(rep.max_error(), 1e-9);
}

TEST(Check, CorruptedJacobianIsFlagged) {
  NlpProblem p(space_of(3));
  p.add_objective(std::make_unique<toy::Squares>(std::vector<std::size_t>{0}, std::vector<double>{1},
                                                 std::vector<double>{0}));
  p.add_constraints(std::make_unique<toy::Bilinear>(0, 2, -1, 1, 1e-3));
  p.finalize();
  const std::vector<double> x{0.3, -0.7, 1.9};
  const auto rep = check_derivatives(p, x, 1);
  EXPECT_FALSE(rep.passed());
  EXPECT_TRUE(rep.blocks[0].passed);
  EXPECT_FALSE(rep.blocks[1].passed);
}
