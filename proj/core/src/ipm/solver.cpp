#include "scacopf/ipm/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "scacopf/ipm/ldlt.hpp"

namespace scacopf::ipm {

using nlp::NlpProblem;

std::string_view to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::acceptable: return "acceptable";
    case Status::infeasible_point: return "infeasible-point";
    case Status::iteration_limit: return "iteration-limit";
    case Status::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

std::string_view to_string(WarmStartMode m) {
  switch (m) {
    case WarmStartMode::cold: return "cold";
    case WarmStartMode::primal: return "primal";
    case WarmStartMode::primal_dual: return "primal-dual";
  }
  return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;
using Vec = std::vector<double>;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

// Moves v inside [l, u] by kappa * max(1, |bound|), capped at kappa * (u - l).
double push_interior(double v, double l, double u, double kappa) {
  const bool fl = std::isfinite(l);
  const bool fu = std::isfinite(u);
  double pl = fl ? kappa * std::max(1.0, std::abs(l)) : 0.0;
  double pu = fu ? kappa * std::max(1.0, std::abs(u)) : 0.0;
  if (fl && fu) {
    pl = std::min(pl, kappa * (u - l));
    pu = std::min(pu, kappa * (u - l));
  }
  if (fl) v = std::max(v, l + pl);
  if (fu) v = std::min(v, u - pu);
  return v;
}

struct FirstOrder {
  double f = 0.0;
  Vec grad;
  Vec c;
  Vec jac;
};

class Solver {
 public:
  Solver(const NlpProblem& p, const IpmOptions& o) : p_(p), o_(o), cache_(p.cache()) {
    n_ = p.num_variables();
    m_ = p.num_constraints();
    cl_.resize(m_);
    cu_.resize(m_);
    p.constraint_bounds(cl_, cu_);
    slack_of_row_.assign(m_, -1);
    for (std::size_t i = 0; i < m_; ++i)
      if (cl_[i] != cu_[i]) {
        slack_of_row_[i] = static_cast<long>(n_ + row_of_slack_.size());
        row_of_slack_.push_back(i);
      }
    N_ = n_ + row_of_slack_.size();
    wl_.resize(N_);
    wu_.resize(N_);
    fixed_.assign(N_, 0);
    for (std::size_t j = 0; j < n_; ++j) {
      wl_[j] = p.space().lower(j);
      wu_[j] = p.space().upper(j);
      fixed_[j] = p.space().is_fixed(j);
    }
    for (std::size_t k = 0; k < row_of_slack_.size(); ++k) {
      wl_[n_ + k] = cl_[row_of_slack_[k]];
      wu_[n_ + k] = cu_[row_of_slack_[k]];
    }
    has_l_.assign(N_, 0);
    has_u_.assign(N_, 0);
    for (std::size_t j = 0; j < N_; ++j) {
      has_l_[j] = !fixed_[j] && std::isfinite(wl_[j]);
      has_u_[j] = !fixed_[j] && std::isfinite(wu_[j]);
    }
    ws_ = p.make_workspace();
  }

  IpmResult run(const std::optional<StartPoint>& start);

 private:
  std::span<const double> xpart(const Vec& w) const { return {w.data(), n_}; }

  bool eval_first_order(const Vec& w, FirstOrder& out) {
    const auto t = Clock::now();
    out.grad.resize(n_);
    out.c.resize(m_);
    out.jac.resize(cache_.jac_nnz());
    bool ok = true;
    try {
      out.f = p_.objective(xpart(w));
      p_.gradient(xpart(w), out.grad);
      p_.residuals(xpart(w), out.c);
      p_.jacobian(xpart(w), ws_, out.jac);
    } catch (const nlp::EvalError&) {
      ok = false;
    }
    eval_seconds_ += seconds_since(t);
    return ok;
  }

  bool eval_zero_order(const Vec& w, double& f, Vec& c) {
    const auto t = Clock::now();
    c.resize(m_);
    bool ok = true;
    try {
      f = p_.objective(xpart(w));
      p_.residuals(xpart(w), c);
    } catch (const nlp::EvalError&) {
      ok = false;
    }
    eval_seconds_ += seconds_since(t);
    return ok;
  }

  void constraint_values(const Vec& w, const Vec& c, Vec& g) const {
    g.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      const long s = slack_of_row_[i];
      g[i] = c[i] - (s < 0 ? cl_[i] : w[static_cast<std::size_t>(s)]);
    }
  }

  // J_g^T v over the internal variables.
  void jt_times(const Vec& jac, const Vec& v, Vec& out) const {
    out.assign(N_, 0.0);
    for (std::size_t e = 0; e < jac.size(); ++e) out[cache_.jac_cols[e]] += jac[e] * v[cache_.jac_rows[e]];
    for (std::size_t k = 0; k < row_of_slack_.size(); ++k) out[n_ + k] -= v[row_of_slack_[k]];
  }

  double barrier(const Vec& w, double f, double mu) const {
    double phi = sf_ * f;
    for (std::size_t j = 0; j < N_; ++j) {
      if (has_l_[j]) phi -= mu * std::log(w[j] - wl_[j]);
      if (has_u_[j]) phi -= mu * std::log(wu_[j] - w[j]);
    }
    return phi;
  }

  static double norm1(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  static double norm_inf(const Vec& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
  }

  // Internal scaled optimality error for barrier parameter mu.
  double error(const Vec& w, const Vec& grad_lag, const Vec& g, double mu) const {
    double stat = 0.0, comp = 0.0, zsum = 0.0;
    for (std::size_t j = 0; j < N_; ++j) {
      if (fixed_[j]) continue;
      stat = std::max(stat, std::abs(grad_lag[j] - zl_[j] + zu_[j]));
      if (has_l_[j]) comp = std::max(comp, std::abs(zl_[j] * (w[j] - wl_[j]) - mu));
      if (has_u_[j]) comp = std::max(comp, std::abs(zu_[j] * (wu_[j] - w[j]) - mu));
      zsum += zl_[j] + zu_[j];
    }
    const double s_d =
        std::max(1.0, (norm1(lam_) + zsum) / (100.0 * static_cast<double>(std::max<std::size_t>(1, m_ + N_))));
    const double s_c = std::max(1.0, zsum / (100.0 * static_cast<double>(std::max<std::size_t>(1, N_))));
    return std::max({stat / s_d, norm_inf(g), comp / s_c});
  }

  void assemble(const Vec& jac, const Vec& hess, const Vec& sigma, double dw, double dc) {
    const std::size_t dim = N_ + m_;
    kkt_.clear(dim);
    for (std::size_t e = 0; e < hess.size(); ++e) {
      const auto r = cache_.hess_rows[e];
      const auto c = cache_.hess_cols[e];
      if (fixed_[r] || fixed_[c]) continue;
      kkt_.add(r, c, hess[e]);
    }
    for (std::size_t j = 0; j < N_; ++j) kkt_.add(j, j, fixed_[j] ? 1.0 : sigma[j] + dw);
    for (std::size_t e = 0; e < jac.size(); ++e) {
      const auto c = cache_.jac_cols[e];
      if (fixed_[c]) continue;
      kkt_.add(N_ + cache_.jac_rows[e], c, jac[e]);
    }
    for (std::size_t k = 0; k < row_of_slack_.size(); ++k) kkt_.add(N_ + row_of_slack_[k], n_ + k, -1.0);
    for (std::size_t i = 0; i < m_; ++i) kkt_.add(N_ + i, N_ + i, -dc);
  }

  bool factor_ok() {
    const bool ok = factor_.factor(kkt_);
    const auto& in = factor_.inertia();
    return ok && in.zero == 0 && in.positive == N_ && in.negative == m_;
  }

  const NlpProblem& p_;
  const IpmOptions& o_;
  const nlp::DerivativeCache& cache_;
  std::size_t n_ = 0, m_ = 0, N_ = 0;
  Vec cl_, cu_, wl_, wu_;
  std::vector<long> slack_of_row_;
  std::vector<std::size_t> row_of_slack_;
  std::vector<char> fixed_, has_l_, has_u_;
  nlp::EvalWorkspace ws_;
  SymmetricTriplets kkt_;
  KktFactorization factor_{2000};

  Vec lam_, zl_, zu_;
  double sf_ = 1.0;
  double eval_seconds_ = 0.0;
};

IpmResult Solver::run(const std::optional<StartPoint>& start) {
  const auto t_start = Clock::now();
  factor_ = KktFactorization(o_.dense_threshold);
  const auto mode = start ? o_.warm_start_mode : WarmStartMode::cold;
  if (start && start->x.size() != n_)
    throw std::invalid_argument("start point has " + std::to_string(start->x.size()) +
                                " entries, problem has " + std::to_string(n_));

  IpmResult res;
  Vec w(N_, 0.0);
  const double kappa = mode == WarmStartMode::cold ? o_.bound_push : 1e-4;
  for (std::size_t j = 0; j < n_; ++j) {
    if (fixed_[j]) {
      w[j] = wl_[j];
      continue;
    }
    double v = start ? start->x[j] : 0.0;
    if (!start) v = std::clamp(v, wl_[j], wu_[j]);
    w[j] = push_interior(v, wl_[j], wu_[j], kappa);
  }

  FirstOrder cur;
  if (!eval_first_order(w, cur)) {
    res.status = Status::numerical_failure;
    res.x.assign(w.begin(), w.begin() + static_cast<long>(n_));
    res.total_seconds = seconds_since(t_start);
    res.eval_seconds = eval_seconds_;
    return res;
  }
  for (std::size_t k = 0; k < row_of_slack_.size(); ++k)
    w[n_ + k] = push_interior(cur.c[row_of_slack_[k]], wl_[n_ + k], wu_[n_ + k], kappa);

  const double gmax = norm_inf(cur.grad);
  sf_ = gmax > 0 ? std::min(1.0, o_.grad_scale_target / gmax) : 1.0;

  double mu = mode == WarmStartMode::primal_dual ? o_.mu_warm : o_.mu_init;
  lam_.assign(m_, 0.0);
  zl_.assign(N_, 0.0);
  zu_.assign(N_, 0.0);
  for (std::size_t j = 0; j < N_; ++j) {
    if (has_l_[j]) zl_[j] = 1.0;
    if (has_u_[j]) zu_[j] = 1.0;
  }
  if (mode == WarmStartMode::primal_dual) {
    if (start->lambda.size() == m_)
      for (std::size_t i = 0; i < m_; ++i) lam_[i] = sf_ * start->lambda[i];
    for (std::size_t j = 0; j < n_; ++j) {
      if (has_l_[j])
        zl_[j] = std::max(start->z_lower.size() == n_ ? sf_ * start->z_lower[j] : 0.0, mu / (w[j] - wl_[j]));
      if (has_u_[j])
        zu_[j] = std::max(start->z_upper.size() == n_ ? sf_ * start->z_upper[j] : 0.0, mu / (wu_[j] - w[j]));
    }
    for (std::size_t k = 0; k < row_of_slack_.size(); ++k) {
      const auto j = n_ + k;
      const double l = lam_[row_of_slack_[k]];
      if (has_l_[j]) zl_[j] = std::max(-l, 0.0) + mu / (w[j] - wl_[j]);
      if (has_u_[j]) zu_[j] = std::max(l, 0.0) + mu / (wu_[j] - w[j]);
    }
  }

  Vec g, grad_lag, jtl, hess(cache_.hess_nnz()), sigma(N_), rhs, dw(N_), dlam(m_), dzl(N_), dzu(N_);
  Vec wt(N_), ct;
  double delta_w_last = 0.0;
  double nu = 1.0;
  std::deque<double> history;
  int ls_fail_streak = 0;
  Status status = Status::iteration_limit;
  bool done = false;
  int iter = 0;
  double last_alpha = 0.0, last_reg = 0.0;

  auto lagrangian_gradient = [&]() {
    jt_times(cur.jac, lam_, jtl);
    grad_lag.assign(N_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) grad_lag[j] = sf_ * cur.grad[j] + jtl[j];
    for (std::size_t j = n_; j < N_; ++j) grad_lag[j] = jtl[j];
  };

  auto finish_values = [&]() {
    res.x.assign(w.begin(), w.begin() + static_cast<long>(n_));
    res.lambda.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) res.lambda[i] = lam_[i] / sf_;
    res.z_lower.assign(n_, 0.0);
    res.z_upper.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      res.z_lower[j] = zl_[j] / sf_;
      res.z_upper[j] = zu_[j] / sf_;
    }
    res.objective_scaling = sf_;
    res.objective = cur.f;
    res.kkt_residual = kkt_residual(p_, res.x, res.lambda, res.z_lower, res.z_upper, sf_);
    double viol = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      viol = std::max({viol, cl_[i] - cur.c[i], cur.c[i] - cu_[i]});
    res.constraint_violation = viol;
    double gap = 0.0;
    for (std::size_t j = 0; j < N_; ++j) {
      if (fixed_[j]) continue;
      if (has_l_[j]) gap += zl_[j] * (w[j] - wl_[j]);
      if (has_u_[j]) gap += zu_[j] * (wu_[j] - w[j]);
    }
    res.duality_gap = gap / sf_;
  };

  for (;; ++iter) {
    constraint_values(w, cur.c, g);
    lagrangian_gradient();
    const double e0 = error(w, grad_lag, g, 0.0);

    if (o_.log) {
      char line[200];
      std::snprintf(line, sizeof line,
                    "iter=%d f=%.8e inf_pr=%.2e err=%.2e mu=%.1e reg=%.1e alpha=%.2e", iter,
                    cur.f, norm_inf(g), e0, mu, last_reg, last_alpha);
      o_.log(line);
    }

    if (e0 <= o_.tol_kkt) {
      finish_values();
      if (res.kkt_residual <= o_.tol_kkt) {
        status = Status::optimal;
        done = true;
        break;
      }
    }
    if (iter >= o_.max_iter) break;

    bool mu_changed = false;
    while (mu > o_.mu_min && error(w, grad_lag, g, mu) <= 10.0 * mu) {
      mu = std::max(o_.mu_min, o_.mu_decrease * mu);
      mu_changed = true;
    }
    if (mu_changed) {
      history.clear();
      nu = 1.0;
    }

    {
      const auto t = Clock::now();
      bool ok = true;
      try {
        p_.hessian(xpart(w), sf_, lam_, ws_, hess);
      } catch (const nlp::EvalError&) {
        ok = false;
      }
      eval_seconds_ += seconds_since(t);
      if (!ok) {
        status = Status::numerical_failure;
        break;
      }
    }

    Vec grad_phi(N_, 0.0);
    for (std::size_t j = 0; j < N_; ++j) {
      sigma[j] = 0.0;
      if (fixed_[j]) continue;
      grad_phi[j] = (j < n_ ? sf_ * cur.grad[j] : 0.0);
      if (has_l_[j]) {
        const double d = w[j] - wl_[j];
        sigma[j] += zl_[j] / d;
        grad_phi[j] -= mu / d;
      }
      if (has_u_[j]) {
        const double d = wu_[j] - w[j];
        sigma[j] += zu_[j] / d;
        grad_phi[j] += mu / d;
      }
    }

    // Inertia-corrected factorization.
    double delta_w = 0.0, delta_c = 0.0;
    assemble(cur.jac, hess, sigma, delta_w, delta_c);
    bool factored = factor_ok();
    if (!factored && factor_.inertia().zero > 0) {
      delta_c = 1e-8 * std::pow(mu, 0.25);
      assemble(cur.jac, hess, sigma, delta_w, delta_c);
      factored = factor_ok();
    }
    if (!factored) {
      delta_w = delta_w_last == 0.0 ? o_.reg_initial : std::max(1e-20, delta_w_last / 3.0);
      for (;;) {
        assemble(cur.jac, hess, sigma, delta_w, delta_c);
        if (factor_ok()) {
          factored = true;
          delta_w_last = delta_w;
          break;
        }
        delta_w *= delta_w_last == 0.0 ? o_.reg_growth_first : o_.reg_growth;
        if (delta_w > o_.reg_max) break;
      }
    }
    if (!factored) {
      status = Status::numerical_failure;
      break;
    }
    last_reg = delta_w;

    rhs.assign(N_ + m_, 0.0);
    for (std::size_t j = 0; j < N_; ++j)
      if (!fixed_[j]) rhs[j] = -(grad_phi[j] + jtl[j]);
    for (std::size_t i = 0; i < m_; ++i) rhs[N_ + i] = -g[i];
    factor_.solve(rhs);
    bool finite = true;
    for (double v : rhs) finite = finite && std::isfinite(v);
    if (!finite) {
      status = Status::numerical_failure;
      break;
    }
    const double tau = std::max(o_.fraction_to_boundary, 1.0 - mu);
    double alpha_max = 1.0, alpha_z = 1.0;
    // Takes the primal-dual step from a solved KKT right-hand side.
    auto set_step = [&](const Vec& sol) {
      for (std::size_t j = 0; j < N_; ++j) dw[j] = fixed_[j] ? 0.0 : sol[j];
      for (std::size_t i = 0; i < m_; ++i) dlam[i] = sol[N_ + i];
      alpha_max = alpha_z = 1.0;
      for (std::size_t j = 0; j < N_; ++j) {
        dzl[j] = dzu[j] = 0.0;
        if (has_l_[j]) {
          const double d = w[j] - wl_[j];
          dzl[j] = mu / d - zl_[j] - zl_[j] / d * dw[j];
          if (dw[j] < 0) alpha_max = std::min(alpha_max, -tau * d / dw[j]);
          if (dzl[j] < 0) alpha_z = std::min(alpha_z, -tau * zl_[j] / dzl[j]);
        }
        if (has_u_[j]) {
          const double d = wu_[j] - w[j];
          dzu[j] = mu / d - zu_[j] + zu_[j] / d * dw[j];
          if (dw[j] > 0) alpha_max = std::min(alpha_max, tau * d / dw[j]);
          if (dzu[j] < 0) alpha_z = std::min(alpha_z, -tau * zu_[j] / dzu[j]);
        }
      }
    };
    set_step(rhs);

    // Merit: barrier objective plus nu * |g|_1.
    double dphi = 0.0;
    for (std::size_t j = 0; j < N_; ++j) dphi += grad_phi[j] * dw[j];
    double curv = 0.0;
    for (std::size_t e = 0; e < hess.size(); ++e) {
      const auto r = cache_.hess_rows[e];
      const auto c = cache_.hess_cols[e];
      if (fixed_[r] || fixed_[c]) continue;
      curv += (r == c ? 1.0 : 2.0) * hess[e] * dw[r] * dw[c];
    }
    for (std::size_t j = 0; j < N_; ++j) curv += (sigma[j] + delta_w) * dw[j] * dw[j];
    const double theta0 = norm1(g);
    if (theta0 > 0) {
      const double nu_trial = (dphi + 0.5 * std::max(0.0, curv)) / (0.9 * theta0);
      if (nu < nu_trial) {
        nu = nu_trial + 1e-2 * std::abs(nu_trial);
        history.clear();
      }
    }
    const double slope = std::min(0.0, dphi - nu * theta0);
    const double merit0 = barrier(w, cur.f, mu) + nu * theta0;
    history.push_back(merit0);
    while (history.size() > 5) history.pop_front();
    const double reference = *std::max_element(history.begin(), history.end());

    double alpha = alpha_max;
    bool accepted = false;
    double f_trial = 0.0;
    Vec g_trial;
    for (int bt = 0; bt < 40; ++bt) {
      for (std::size_t j = 0; j < N_; ++j) wt[j] = w[j] + alpha * dw[j];
      if (eval_zero_order(wt, f_trial, ct)) {
        constraint_values(wt, ct, g_trial);
        const double merit = barrier(wt, f_trial, mu) + nu * norm1(g_trial);
        if (std::isfinite(merit) && merit <= reference + 1e-4 * alpha * slope) {
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Take the boundary-limited step anyway; a bounded number of such
      // steps lets the iteration escape merit plateaus.
      ++ls_fail_streak;
      alpha = alpha_max;
      for (std::size_t j = 0; j < N_; ++j) wt[j] = w[j] + alpha * dw[j];
      if (ls_fail_streak > 10 || !eval_zero_order(wt, f_trial, ct)) {
        finish_values();
        status = res.constraint_violation > o_.acceptable_tol ? Status::infeasible_point
                                                              : Status::numerical_failure;
        break;
      }
      history.clear();
    } else {
      ls_fail_streak = 0;
    }
    last_alpha = alpha;

    w = wt;
    for (std::size_t i = 0; i < m_; ++i) lam_[i] += alpha * dlam[i];
    constexpr double kappa_sigma = 1e10;
    for (std::size_t j = 0; j < N_; ++j) {
      if (has_l_[j]) {
        const double d = w[j] - wl_[j];
        zl_[j] = std::clamp(zl_[j] + alpha_z * dzl[j], mu / (kappa_sigma * d), kappa_sigma * mu / d);
      }
      if (has_u_[j]) {
        const double d = wu_[j] - w[j];
        zu_[j] = std::clamp(zu_[j] + alpha_z * dzu[j], mu / (kappa_sigma * d), kappa_sigma * mu / d);
      }
    }
    if (!eval_first_order(w, cur)) {
      status = Status::numerical_failure;
      break;
    }
  }

  if (!done) {
    finish_values();
    if (status == Status::iteration_limit && res.kkt_residual <= o_.acceptable_tol)
      status = Status::acceptable;
  }
  res.status = status;
  res.iterations = iter;
  res.mu = mu;
  res.eval_seconds = eval_seconds_;
  res.total_seconds = seconds_since(t_start);
  return res;
}

}  // namespace

IpmResult solve(const NlpProblem& problem, const std::optional<StartPoint>& start,
                const IpmOptions& opts) {
  if (!problem.finalized()) throw std::logic_error("ipm::solve requires a finalized problem");
  if (opts.warm_start_mode != WarmStartMode::cold && !start)
    throw std::invalid_argument("warm start requested without a start point");
  if (!(opts.fraction_to_boundary > 0 && opts.fraction_to_boundary < 1) || !(opts.tol_kkt > 0) ||
      !(opts.mu_init > 0) || !(opts.mu_min > 0))
    throw std::invalid_argument("invalid IpmOptions");
  Solver solver(problem, opts);
  return solver.run(start);
}

StartPoint warm_start_from(const IpmResult& base, const nlp::VariableSpace& space,
                           WarmStartMode mode) {
  if (base.x.size() != space.size())
    throw std::invalid_argument("warm start: base point has " + std::to_string(base.x.size()) +
                                " entries, variable space has " + std::to_string(space.size()));
  constexpr double kappa = 1e-4;
  StartPoint sp;
  sp.mode = mode;
  sp.x = base.x;
  for (std::size_t j = 0; j < space.size(); ++j) {
    const double l = space.lower(j);
    const double u = space.upper(j);
    double& v = sp.x[j];
    if (l == u) {
      v = l;
      continue;
    }
    const double width = u - l;
    const double pl = std::isfinite(width) ? kappa * width : kappa * std::max(1.0, std::abs(l));
    const double pu = std::isfinite(width) ? kappa * width : kappa * std::max(1.0, std::abs(u));
    if (std::isfinite(l) && v < l + pl) v = l + pl;
    if (std::isfinite(u) && v > u - pu) v = u - pu;
  }
  if (mode == WarmStartMode::primal_dual) {
    sp.lambda = base.lambda;
    sp.z_lower = base.z_lower;
    sp.z_upper = base.z_upper;
  } else {
    sp.z_lower.assign(space.size(), 0.0);
    sp.z_upper.assign(space.size(), 0.0);
    for (std::size_t j = 0; j < space.size(); ++j) {
      if (space.is_fixed(j)) continue;
      if (std::isfinite(space.lower(j))) sp.z_lower[j] = 1.0;
      if (std::isfinite(space.upper(j))) sp.z_upper[j] = 1.0;
    }
    sp.lambda.clear();
  }
  return sp;
}

double kkt_residual(const NlpProblem& problem, std::span<const double> x,
                    std::span<const double> lambda, std::span<const double> z_lower,
                    std::span<const double> z_upper, double sf) {
  const std::size_t n = problem.num_variables();
  const std::size_t m = problem.num_constraints();
  const auto& cache = problem.cache();
  Vec grad(n), c(m), cl(m), cu(m), jac(cache.jac_nnz());
  auto ws = problem.make_workspace();
  problem.gradient(x, grad);
  problem.residuals(x, c);
  problem.jacobian(x, ws, jac);
  problem.constraint_bounds(cl, cu);
  const auto& sp = problem.space();

  Vec stat(grad);
  for (std::size_t e = 0; e < jac.size(); ++e) stat[cache.jac_cols[e]] += jac[e] * lambda[cache.jac_rows[e]];
  double d_inf = 0.0, comp = 0.0, zsum = 0.0, lsum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (sp.is_fixed(j)) continue;
    d_inf = std::max(d_inf, std::abs(sf * (stat[j] - z_lower[j] + z_upper[j])));
    if (std::isfinite(sp.lower(j))) comp = std::max(comp, std::abs(sf * z_lower[j] * (x[j] - sp.lower(j))));
    if (std::isfinite(sp.upper(j))) comp = std::max(comp, std::abs(sf * z_upper[j] * (sp.upper(j) - x[j])));
    zsum += std::abs(z_lower[j]) + std::abs(z_upper[j]);
  }
  double p_inf = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    p_inf = std::max({p_inf, cl[i] - c[i], c[i] - cu[i]});
    lsum += std::abs(lambda[i]);
    if (cl[i] == cu[i]) continue;
    if (std::isfinite(cl[i])) comp = std::max(comp, std::abs(sf * std::max(-lambda[i], 0.0) * (c[i] - cl[i])));
    if (std::isfinite(cu[i])) comp = std::max(comp, std::abs(sf * std::max(lambda[i], 0.0) * (cu[i] - c[i])));
  }
  const double s_d =
      std::max(1.0, sf * (lsum + zsum) / (100.0 * static_cast<double>(std::max<std::size_t>(1, m + n))));
  const double s_c = std::max(1.0, sf * zsum / (100.0 * static_cast<double>(std::max<std::size_t>(1, n))));
  return std::max({d_inf / s_d, p_inf, comp / s_c});
}

}  // namespace scacopf::ipm
