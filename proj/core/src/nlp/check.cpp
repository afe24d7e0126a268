#include "scacopf/nlp/check.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace scacopf::nlp {

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

double step_for(double xi) { return 1e-6 * (1.0 + std::abs(xi)); }

// Dense symmetric matrix from a lower-triangular pattern.
std::vector<double> dense_symmetric(std::size_t n, const std::vector<Entry>& pat,
                                    std::span<const double> vals) {
  std::vector<double> h(n * n, 0.0);
  for (std::size_t i = 0; i < pat.size(); ++i) {
    const auto r = pat[i].row;
    const auto c = pat[i].col;
    h[r * n + c] += vals[i];
    if (r != c) h[c * n + r] += vals[i];
  }
  return h;
}

BlockCheck check_objective(const ObjectiveBlock& ob, std::span<const double> x0) {
  const std::size_t n = x0.size();
  std::vector<double> x(x0.begin(), x0.end());
  BlockCheck out{ob.name(), true};

  std::vector<double> g(n, 0.0);
  ob.add_gradient(x, g);
  const auto pat = ob.hessian_pattern();
  std::vector<double> hv(pat.size());
  ob.hessian_values(x, 1.0, hv);
  const auto h = dense_symmetric(n, pat, hv);

  std::vector<double> gp(n), gm(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = step_for(x0[i]);
    x[i] = x0[i] + s;
    const double fp = ob.value(x);
    std::fill(gp.begin(), gp.end(), 0.0);
    ob.add_gradient(x, gp);
    x[i] = x0[i] - s;
    const double fm = ob.value(x);
    std::fill(gm.begin(), gm.end(), 0.0);
    ob.add_gradient(x, gm);
    x[i] = x0[i];

    out.first_order = std::max(out.first_order, rel_err(g[i], (fp - fm) / (2 * s)));
    for (std::size_t j = 0; j < n; ++j)
      out.second_order = std::max(out.second_order, rel_err(h[j * n + i], (gp[j] - gm[j]) / (2 * s)));
  }
  return out;
}

BlockCheck check_constraints(const ConstraintBlock& cb, std::span<const double> x0,
                             std::mt19937_64& rng) {
  const std::size_t n = x0.size();
  const std::size_t m = cb.rows();
  std::vector<double> x(x0.begin(), x0.end());
  BlockCheck out{cb.name(), false};

  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> lambda(m);
  for (auto& l : lambda) l = unif(rng);

  const auto jpat = cb.jacobian_pattern();
  auto dense_jac = [&](std::span<const double> at) {
    std::vector<double> vals(jpat.size());
    cb.jacobian_values(at, vals);
    std::vector<double> jd(m * n, 0.0);
    for (std::size_t i = 0; i < jpat.size(); ++i) jd[jpat[i].row * n + jpat[i].col] += vals[i];
    return jd;
  };
  auto jt_lambda = [&](std::span<const double> at) {
    const auto jd = dense_jac(at);
    std::vector<double> v(n, 0.0);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c) v[c] += lambda[r] * jd[r * n + c];
    return v;
  };

  const auto jd = dense_jac(x);
  const auto hpat = cb.hessian_pattern();
  std::vector<double> hv(hpat.size());
  cb.hessian_values(x, lambda, hv);
  const auto h = dense_symmetric(n, hpat, hv);

  std::vector<double> cp(m), cm(m);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = step_for(x0[i]);
    x[i] = x0[i] + s;
    cb.residuals(x, cp);
    const auto vp = jt_lambda(x);
    x[i] = x0[i] - s;
    cb.residuals(x, cm);
    const auto vm = jt_lambda(x);
    x[i] = x0[i];
    for (std::size_t r = 0; r < m; ++r)
      out.first_order = std::max(out.first_order, rel_err(jd[r * n + i], (cp[r] - cm[r]) / (2 * s)));
    for (std::size_t j = 0; j < n; ++j)
      out.second_order = std::max(out.second_order, rel_err(h[j * n + i], (vp[j] - vm[j]) / (2 * s)));
  }
  return out;
}

}  // namespace

bool DerivativeReport::passed() const {
  return std::all_of(blocks.begin(), blocks.end(), [](const BlockCheck& b) { return b.passed; });
}

double DerivativeReport::max_error() const {
  double e = 0.0;
  for (const auto& b : blocks) e = std::max({e, b.first_order, b.second_order});
  return e;
}

std::string DerivativeReport::to_string() const {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(2);
  for (const auto& b : blocks)
    os << (b.passed ? "  ok   " : "  FAIL ") << (b.is_objective ? "obj " : "con ") << b.name
       << "  d1=" << b.first_order << "  d2=" << b.second_order << '\n';
  return os.str();
}

DerivativeReport check_derivatives(const NlpProblem& problem, std::span<const double> x,
                                   std::uint64_t seed, double tolerance) {
  DerivativeReport report;
  report.tolerance = tolerance;
  std::mt19937_64 rng(seed);
  for (std::size_t b = 0; b < problem.objective_block_count(); ++b)
    report.blocks.push_back(check_objective(problem.objective_block(b), x));
  for (std::size_t b = 0; b < problem.constraint_block_count(); ++b)
    report.blocks.push_back(check_constraints(problem.constraint_block(b), x, rng));
  for (auto& b : report.blocks)
    b.passed = b.first_order <= tolerance && b.second_order <= tolerance;
  return report;
}

std::vector<double> random_interior(const NlpProblem& problem, std::span<const double> center, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::uniform_real_distribution<double> s(-0.3, 0.3);
  const auto& sp = problem.space();
  std::vector<double> x(sp.size());
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const double lo = sp.lower(i), hi = sp.upper(i);
    if (sp.is_fixed(i)) {
      x[i] = lo;
    } else if (std::isfinite(lo) && std::isfinite(hi)) {
      x[i] = lo + u(rng) * (hi - lo);
    } else if (std::isfinite(lo)) {
      x[i] = lo + 0.2 * u(rng);
    } else if (std::isfinite(hi)) {
      x[i] = hi - 0.2 * u(rng);
    } else {
      x[i] = center[i] + s(rng);
    }
  }
  return x;
}

}  // namespace scacopf::nlp
