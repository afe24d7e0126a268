#include "scacopf/opf/blocks.hpp"

#include <algorithm>

#include "scacopf/nlp/variable_space.hpp"
#include "scacopf/opf/flows.hpp"

namespace scacopf::opf {

using nlp::kInf;

// ---- FlowBlock ----------------------------------------------------------
//
// Row order per branch: p_from, q_from, p_to, q_to. Each row has five Jacobian
// entries (v_a, v_b, th_a, th_b, flow variable); the Hessian of the four rows
// shares one 4x4 lower triangle over (v_from, v_to, th_from, th_to).

void FlowBlock::bounds(std::span<double> lo, std::span<double> hi) const {
  std::fill(lo.begin(), lo.end(), 0.0);
  std::fill(hi.begin(), hi.end(), 0.0);
}

void FlowBlock::residuals(std::span<const double> x, std::span<double> c) const {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& it = items_[i];
    const auto f = branch_flow(x[it.v_from], x[it.v_to], x[it.th_from], x[it.th_to], *it.branch);
    c[4 * i + 0] = f.p_from - x[it.p_from];
    c[4 * i + 1] = f.q_from - x[it.q_from];
    c[4 * i + 2] = f.p_to - x[it.p_to];
    c[4 * i + 3] = f.q_to - x[it.q_to];
  }
}

std::vector<Entry> FlowBlock::jacobian_pattern() const {
  std::vector<Entry> pat;
  pat.reserve(20 * items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& it = items_[i];
    const std::size_t flow[4] = {it.p_from, it.q_from, it.p_to, it.q_to};
    for (std::size_t r = 0; r < 4; ++r) {
      const std::size_t row = 4 * i + r;
      const bool from = r < 2;
      pat.push_back({row, from ? it.v_from : it.v_to});
      pat.push_back({row, from ? it.v_to : it.v_from});
      pat.push_back({row, from ? it.th_from : it.th_to});
      pat.push_back({row, from ? it.th_to : it.th_from});
      pat.push_back({row, flow[r]});
    }
  }
  return pat;
}

void FlowBlock::jacobian_values(std::span<const double> x, std::span<double> v) const {
  std::size_t k = 0;
  for (const auto& it : items_) {
    for (std::size_t r = 0; r < 4; ++r) {
      const bool from = r < 2;
      const bool reactive = r % 2 == 1;
      const double va = x[from ? it.v_from : it.v_to];
      const double vb = x[from ? it.v_to : it.v_from];
      const double ta = x[from ? it.th_from : it.th_to];
      const double tb = x[from ? it.th_to : it.th_from];
      const auto t = flow_term(va, vb, ta, tb, *it.branch, reactive);
      v[k++] = 2.0 * t.a * va + vb * t.h;
      v[k++] = va * t.h;
      v[k++] = va * vb * t.dh;
      v[k++] = -va * vb * t.dh;
      v[k++] = -1.0;
    }
  }
}

std::vector<Entry> FlowBlock::hessian_pattern() const {
  std::vector<Entry> pat;
  pat.reserve(10 * items_.size());
  for (const auto& it : items_) {
    const std::size_t z[4] = {it.v_from, it.v_to, it.th_from, it.th_to};
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b <= a; ++b) pat.push_back({z[a], z[b]});
  }
  return pat;
}

void FlowBlock::hessian_values(std::span<const double> x, std::span<const double> m,
                               std::span<double> v) const {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& it = items_[i];
    // Local order (v_from, v_to, th_from, th_to).
    double h[4][4] = {};
    for (std::size_t r = 0; r < 4; ++r) {
      const double w = m[4 * i + r];
      if (w == 0.0) continue;
      const bool from = r < 2;
      const std::size_t ia = from ? 0 : 1, ib = from ? 1 : 0;
      const std::size_t ja = from ? 2 : 3, jb = from ? 3 : 2;
      const double va = x[from ? it.v_from : it.v_to];
      const double vb = x[from ? it.v_to : it.v_from];
      const double ta = x[from ? it.th_from : it.th_to];
      const double tb = x[from ? it.th_to : it.th_from];
      const auto t = flow_term(va, vb, ta, tb, *it.branch, r % 2 == 1);
      auto add = [&](std::size_t p, std::size_t q, double val) {
        if (p < q) std::swap(p, q);
        h[p][q] += w * val;
      };
      add(ia, ia, 2.0 * t.a);
      add(ia, ib, t.h);
      add(ia, ja, vb * t.dh);
      add(ia, jb, -vb * t.dh);
      add(ib, ja, va * t.dh);
      add(ib, jb, -va * t.dh);
      add(ja, ja, va * vb * t.d2h);
      add(ja, jb, -va * vb * t.d2h);
      add(jb, jb, va * vb * t.d2h);
    }
    std::size_t k = 10 * i;
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b <= a; ++b) v[k++] = h[a][b];
  }
}

// ---- ThermalBlock ---------------------------------------------------------

void ThermalBlock::bounds(std::span<double> lo, std::span<double> hi) const {
  std::fill(lo.begin(), lo.end(), 0.0);
  std::fill(hi.begin(), hi.end(), kInf);
}

void ThermalBlock::residuals(std::span<const double> x, std::span<double> c) const {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& it = items_[i];
    const double s = it.rating * x[it.v] + x[it.sigma];
    c[i] = s * s - x[it.p] * x[it.p] - x[it.q] * x[it.q];
  }
}

std::vector<Entry> ThermalBlock::jacobian_pattern() const {
  std::vector<Entry> pat;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& it = items_[i];
    pat.insert(pat.end(), {{i, it.v}, {i, it.sigma}, {i, it.p}, {i, it.q}});
  }
  return pat;
}

void ThermalBlock::jacobian_values(std::span<const double> x, std::span<double> v) const {
  std::size_t k = 0;
  for (const auto& it : items_) {
    const double s = it.rating * x[it.v] + x[it.sigma];
    v[k++] = 2.0 * it.rating * s;
    v[k++] = 2.0 * s;
    v[k++] = -2.0 * x[it.p];
    v[k++] = -2.0 * x[it.q];
  }
}

std::vector<Entry> ThermalBlock::hessian_pattern() const {
  std::vector<Entry> pat;
  for (const auto& it : items_)
    pat.insert(pat.end(), {{it.v, it.v}, {it.sigma, it.v}, {it.sigma, it.sigma}, {it.p, it.p}, {it.q, it.q}});
  return pat;
}

void ThermalBlock::hessian_values(std::span<const double>, std::span<const double> m,
                                  std::span<double> v) const {
  std::size_t k = 0;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const double w = m[i];
    const double r = items_[i].rating;
    v[k++] = 2.0 * r * r * w;
    v[k++] = 2.0 * r * w;
    v[k++] = 2.0 * w;
    v[k++] = -2.0 * w;
    v[k++] = -2.0 * w;
  }
}

// ---- BalanceBlock ---------------------------------------------------------

void BalanceBlock::bounds(std::span<double> lo, std::span<double> hi) const {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    lo[2 * i] = hi[2 * i] = items_[i].p_load;
    lo[2 * i + 1] = hi[2 * i + 1] = items_[i].q_load;
  }
}

void BalanceBlock::residuals(std::span<const double> x, std::span<double> c) const {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& it = items_[i];
    const double v2 = x[it.v] * x[it.v];
    double p = -it.g_shunt * v2 - x[it.sp_plus] + x[it.sp_minus];
    double q = it.b_shunt * v2 - x[it.sq_plus] + x[it.sq_minus];
    for (auto j : it.p_gen) p += x[j];
    for (auto j : it.p_flow) p -= x[j];
    for (auto j : it.q_gen) q += x[j];
    for (auto j : it.q_flow) q -= x[j];
    c[2 * i] = p;
    c[2 * i + 1] = q;
  }
}

std::vector<Entry> BalanceBlock::jacobian_pattern() const {
  std::vector<Entry> pat;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& it = items_[i];
    const std::size_t rp = 2 * i, rq = 2 * i + 1;
    pat.push_back({rp, it.v});
    pat.push_back({rp, it.sp_plus});
    pat.push_back({rp, it.sp_minus});
    for (auto j : it.p_gen) pat.push_back({rp, j});
    for (auto j : it.p_flow) pat.push_back({rp, j});
    pat.push_back({rq, it.v});
    pat.push_back({rq, it.sq_plus});
    pat.push_back({rq, it.sq_minus});
    for (auto j : it.q_gen) pat.push_back({rq, j});
    for (auto j : it.q_flow) pat.push_back({rq, j});
  }
  return pat;
}

void BalanceBlock::jacobian_values(std::span<const double> x, std::span<double> v) const {
  std::size_t k = 0;
  for (const auto& it : items_) {
    v[k++] = -2.0 * it.g_shunt * x[it.v];
    v[k++] = -1.0;
    v[k++] = 1.0;
    for (std::size_t j = 0; j < it.p_gen.size(); ++j) v[k++] = 1.0;
    for (std::size_t j = 0; j < it.p_flow.size(); ++j) v[k++] = -1.0;
    v[k++] = 2.0 * it.b_shunt * x[it.v];
    v[k++] = -1.0;
    v[k++] = 1.0;
    for (std::size_t j = 0; j < it.q_gen.size(); ++j) v[k++] = 1.0;
    for (std::size_t j = 0; j < it.q_flow.size(); ++j) v[k++] = -1.0;
  }
}

std::vector<Entry> BalanceBlock::hessian_pattern() const {
  std::vector<Entry> pat;
  for (const auto& it : items_) pat.push_back({it.v, it.v});
  return pat;
}

void BalanceBlock::hessian_values(std::span<const double>, std::span<const double> m,
                                  std::span<double> v) const {
  for (std::size_t i = 0; i < items_.size(); ++i)
    v[i] = -2.0 * items_[i].g_shunt * m[2 * i] + 2.0 * items_[i].b_shunt * m[2 * i + 1];
}

// ---- LinearBlock ----------------------------------------------------------

void LinearBlock::bounds(std::span<double> lo, std::span<double> hi) const {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    lo[i] = rows_[i].lo;
    hi[i] = rows_[i].hi;
  }
}

void LinearBlock::residuals(std::span<const double> x, std::span<double> c) const {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double s = 0.0;
    for (const auto& [j, a] : rows_[i].terms) s += a * x[j];
    c[i] = s;
  }
}

std::vector<Entry> LinearBlock::jacobian_pattern() const {
  std::vector<Entry> pat;
  for (std::size_t i = 0; i < rows_.size(); ++i)
    for (const auto& t : rows_[i].terms) pat.push_back({i, t.first});
  return pat;
}

void LinearBlock::jacobian_values(std::span<const double>, std::span<double> v) const {
  std::size_t k = 0;
  for (const auto& r : rows_)
    for (const auto& t : r.terms) v[k++] = t.second;
}

// ---- ProductCapBlock ------------------------------------------------------

void ProductCapBlock::bounds(std::span<double> lo, std::span<double> hi) const {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    lo[i] = -kInf;
    hi[i] = items_[i].cap;
  }
}

void ProductCapBlock::residuals(std::span<const double> x, std::span<double> c) const {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& it = items_[i];
    c[i] = x[it.x] * (it.c + it.sign * x[it.y]);
  }
}

std::vector<Entry> ProductCapBlock::jacobian_pattern() const {
  std::vector<Entry> pat;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    pat.push_back({i, items_[i].x});
    pat.push_back({i, items_[i].y});
  }
  return pat;
}

void ProductCapBlock::jacobian_values(std::span<const double> x, std::span<double> v) const {
  std::size_t k = 0;
  for (const auto& it : items_) {
    v[k++] = it.c + it.sign * x[it.y];
    v[k++] = it.sign * x[it.x];
  }
}

std::vector<Entry> ProductCapBlock::hessian_pattern() const {
  std::vector<Entry> pat;
  for (const auto& it : items_) pat.push_back({it.y, it.x});
  return pat;
}

void ProductCapBlock::hessian_values(std::span<const double>, std::span<const double> m,
                                     std::span<double> v) const {
  for (std::size_t i = 0; i < items_.size(); ++i) v[i] = items_[i].sign * m[i];
}

// ---- objectives -----------------------------------------------------------

double GenerationCostBlock::value(std::span<const double> x) const {
  double f = 0.0;
  for (const auto& it : items_) f += it.cost(x[it.p]);
  return f;
}

void GenerationCostBlock::add_gradient(std::span<const double> x, std::span<double> g) const {
  for (const auto& it : items_) g[it.p] += it.cost.derivative(x[it.p]);
}

std::vector<Entry> GenerationCostBlock::hessian_pattern() const {
  std::vector<Entry> pat;
  for (const auto& it : items_) pat.push_back({it.p, it.p});
  return pat;
}

void GenerationCostBlock::hessian_values(std::span<const double>, double w, std::span<double> v) const {
  for (std::size_t i = 0; i < items_.size(); ++i) v[i] = 2.0 * w * items_[i].cost.c2;
}

double QuadPenaltyBlock::value(std::span<const double> x) const {
  double f = 0.0;
  for (const auto& it : items_) f += (it.a1 + it.a2 * x[it.x]) * x[it.x];
  return weight_ * f;
}

void QuadPenaltyBlock::add_gradient(std::span<const double> x, std::span<double> g) const {
  for (const auto& it : items_) g[it.x] += weight_ * (it.a1 + 2.0 * it.a2 * x[it.x]);
}

std::vector<Entry> QuadPenaltyBlock::hessian_pattern() const {
  std::vector<Entry> pat;
  for (const auto& it : items_) pat.push_back({it.x, it.x});
  return pat;
}

void QuadPenaltyBlock::hessian_values(std::span<const double>, double w, std::span<double> v) const {
  for (std::size_t i = 0; i < items_.size(); ++i) v[i] = 2.0 * w * weight_ * items_[i].a2;
}

double SurrogateBlock::value(std::span<const double> x) const {
  double f = 0.0;
  for (const auto& it : items_) {
    const double s = x[it.p] * x[it.p] + x[it.q] * x[it.q];
    f += it.coefficient * s * s;
  }
  return weight_ * f;
}

void SurrogateBlock::add_gradient(std::span<const double> x, std::span<double> g) const {
  for (const auto& it : items_) {
    const double p = x[it.p], q = x[it.q];
    const double s = p * p + q * q;
    const double c = 4.0 * weight_ * it.coefficient * s;
    g[it.p] += c * p;
    g[it.q] += c * q;
  }
}

std::vector<Entry> SurrogateBlock::hessian_pattern() const {
  std::vector<Entry> pat;
  for (const auto& it : items_) pat.insert(pat.end(), {{it.p, it.p}, {it.q, it.p}, {it.q, it.q}});
  return pat;
}

void SurrogateBlock::hessian_values(std::span<const double> x, double w, std::span<double> v) const {
  std::size_t k = 0;
  for (const auto& it : items_) {
    const double p = x[it.p], q = x[it.q];
    const double s = p * p + q * q;
    const double c = 4.0 * w * weight_ * it.coefficient;
    v[k++] = c * (s + 2.0 * p * p);
    v[k++] = c * 2.0 * p * q;
    v[k++] = c * (s + 2.0 * q * q);
  }
}

double RegularizationBlock::value(std::span<const double> x) const {
  double f = 0.0;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const double d = x[vars_[i]] - ref_[i];
    f += d * d;
  }
  return 0.5 * rho_ * f;
}

void RegularizationBlock::add_gradient(std::span<const double> x, std::span<double> g) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) g[vars_[i]] += rho_ * (x[vars_[i]] - ref_[i]);
}

std::vector<Entry> RegularizationBlock::hessian_pattern() const {
  std::vector<Entry> pat;
  for (auto j : vars_) pat.push_back({j, j});
  return pat;
}

void RegularizationBlock::hessian_values(std::span<const double>, double w, std::span<double> v) const {
  std::fill(v.begin(), v.end(), w * rho_);
}

}  // namespace scacopf::opf
