#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "scacopf/nlp/problem.hpp"

namespace toy {

using scacopf::nlp::ConstraintBlock;
using scacopf::nlp::Entry;
using scacopf::nlp::ObjectiveBlock;

/// sum_i w_i (x_{v_i} - t_i)^2
class Squares : public ObjectiveBlock {
 public:
  Squares(std::vector<std::size_t> vars, std::vector<double> w, std::vector<double> t)
      : ObjectiveBlock("squares"), v_(std::move(vars)), w_(std::move(w)), t_(std::move(t)) {}
  double value(std::span<const double> x) const override {
    double f = 0;
    for (std::size_t i = 0; i < v_.size(); ++i) f += w_[i] * (x[v_[i]] - t_[i]) * (x[v_[i]] - t_[i]);
    return f;
  }
  void add_gradient(std::span<const double> x, std::span<double> g) const override {
    for (std::size_t i = 0; i < v_.size(); ++i) g[v_[i]] += 2 * w_[i] * (x[v_[i]] - t_[i]);
  }
  std::vector<Entry> hessian_pattern() const override {
    std::vector<Entry> p;
    for (auto v : v_) p.push_back({v, v});
    return p;
  }
  void hessian_values(std::span<const double>, double s, std::span<double> h) const override {
    for (std::size_t i = 0; i < v_.size(); ++i) h[i] = 2 * s * w_[i];
  }

 private:
  std::vector<std::size_t> v_;
  std::vector<double> w_, t_;
};

/// sum_i a_i x_{v_i}
class Linear : public ObjectiveBlock {
 public:
  Linear(std::vector<std::size_t> vars, std::vector<double> a)
      : ObjectiveBlock("linear"), v_(std::move(vars)), a_(std::move(a)) {}
  double value(std::span<const double> x) const override {
    double f = 0;
    for (std::size_t i = 0; i < v_.size(); ++i) f += a_[i] * x[v_[i]];
    return f;
  }
  void add_gradient(std::span<const double>, std::span<double> g) const override {
    for (std::size_t i = 0; i < v_.size(); ++i) g[v_[i]] += a_[i];
  }
  std::vector<Entry> hessian_pattern() const override { return {}; }
  void hessian_values(std::span<const double>, double, std::span<double>) const override {}

 private:
  std::vector<std::size_t> v_;
  std::vector<double> a_;
};

/// Single row lo <= x_i * x_j <= hi.
class Bilinear : public ConstraintBlock {
 public:
  Bilinear(std::size_t i, std::size_t j, double lo, double hi, double jac_error = 0.0)
      : ConstraintBlock("bilinear"), i_(i), j_(j), lo_(lo), hi_(hi), err_(jac_error) {}
  std::size_t rows() const override { return 1; }
  void bounds(std::span<double> l, std::span<double> u) const override {
    l[0] = lo_;
    u[0] = hi_;
  }
  void residuals(std::span<const double> x, std::span<double> c) const override { c[0] = x[i_] * x[j_]; }
  std::vector<Entry> jacobian_pattern() const override { return {{0, i_}, {0, j_}}; }
  void jacobian_values(std::span<const double> x, std::span<double> v) const override {
    v[0] = x[j_] + err_;
    v[1] = x[i_];
  }
  std::vector<Entry> hessian_pattern() const override { return {{j_, i_}}; }
  void hessian_values(std::span<const double>, std::span<const double> m, std::span<double> h) const override {
    h[0] = m[0];
  }

 private:
  std::size_t i_, j_;
  double lo_, hi_, err_;
};

/// Rows c_r = sum over entries (r, col, a) of a * x_col^2 / 2, arbitrary (possibly
/// duplicated) pattern; Hessian entries are diagonal.
class Scatter : public ConstraintBlock {
 public:
  struct Term {
    std::size_t row, col;
    double a;
  };
  Scatter(std::size_t rows, std::vector<Term> terms)
      : ConstraintBlock("scatter"), rows_(rows), t_(std::move(terms)) {}
  std::size_t rows() const override { return rows_; }
  void bounds(std::span<double> l, std::span<double> u) const override {
    for (std::size_t r = 0; r < rows_; ++r) l[r] = u[r] = 0.0;
  }
  void residuals(std::span<const double> x, std::span<double> c) const override {
    for (std::size_t r = 0; r < rows_; ++r) c[r] = 0;
    for (const auto& t : t_) c[t.row] += 0.5 * t.a * x[t.col] * x[t.col];
  }
  std::vector<Entry> jacobian_pattern() const override {
    std::vector<Entry> p;
    for (const auto& t : t_) p.push_back({t.row, t.col});
    return p;
  }
  void jacobian_values(std::span<const double> x, std::span<double> v) const override {
    for (std::size_t k = 0; k < t_.size(); ++k) v[k] = t_[k].a * x[t_[k].col];
  }
  std::vector<Entry> hessian_pattern() const override {
    std::vector<Entry> p;
    for (const auto& t : t_) p.push_back({t.col, t.col});
    return p;
  }
  void hessian_values(std::span<const double>, std::span<const double> m, std::span<double> h) const override {
    for (std::size_t k = 0; k < t_.size(); ++k) h[k] = m[t_[k].row] * t_[k].a;
  }

 private:
  std::size_t rows_;
  std::vector<Term> t_;
};

/// Produces NaN when x_i exceeds a threshold.
class Poisoned : public ObjectiveBlock {
 public:
  Poisoned(std::size_t i, double threshold) : ObjectiveBlock("poisoned"), i_(i), th_(threshold) {}
  double value(std::span<const double> x) const override { return x[i_] > th_ ? std::nan("") : 0.0; }
  void add_gradient(std::span<const double> x, std::span<double> g) const override {
    if (x[i_] > th_) g[i_] += std::nan("");
  }
  std::vector<Entry> hessian_pattern() const override { return {}; }
  void hessian_values(std::span<const double>, double, std::span<double>) const override {}

 private:
  std::size_t i_;
  double th_;
};

}  // namespace toy
