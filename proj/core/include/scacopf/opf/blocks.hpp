#pragma once

#include <cstddef>
#include <vector>

#include "scacopf/grid/network.hpp"
#include "scacopf/nlp/problem.hpp"

namespace scacopf::opf {

using nlp::ConstraintBlock;
using nlp::Entry;
using nlp::ObjectiveBlock;

/// Flow definition rows: flow(v, theta) - f = 0 for p/q at both terminals.
class FlowBlock final : public ConstraintBlock {
 public:
  struct Item {
    const grid::Branch* branch;
    std::size_t v_from, v_to, th_from, th_to;
    std::size_t p_from, q_from, p_to, q_to;
  };
  explicit FlowBlock(std::vector<Item> items) : ConstraintBlock("branch-flows"), items_(std::move(items)) {}

  std::size_t rows() const override { return 4 * items_.size(); }
  void bounds(std::span<double> lo, std::span<double> hi) const override;
  void residuals(std::span<const double> x, std::span<double> c) const override;
  std::vector<Entry> jacobian_pattern() const override;
  void jacobian_values(std::span<const double> x, std::span<double> v) const override;
  std::vector<Entry> hessian_pattern() const override;
  void hessian_values(std::span<const double> x, std::span<const double> m, std::span<double> v) const override;

 private:
  std::vector<Item> items_;
};

/// Squared thermal limits (R v + sigma)^2 - p^2 - q^2 >= 0, one row per terminal.
class ThermalBlock final : public ConstraintBlock {
 public:
  struct Item {
    double rating;
    std::size_t v, sigma, p, q;
  };
  explicit ThermalBlock(std::vector<Item> items) : ConstraintBlock("thermal-limits"), items_(std::move(items)) {}

  std::size_t rows() const override { return items_.size(); }
  void bounds(std::span<double> lo, std::span<double> hi) const override;
  void residuals(std::span<const double> x, std::span<double> c) const override;
  std::vector<Entry> jacobian_pattern() const override;
  void jacobian_values(std::span<const double> x, std::span<double> v) const override;
  std::vector<Entry> hessian_pattern() const override;
  void hessian_values(std::span<const double> x, std::span<const double> m, std::span<double> v) const override;

 private:
  std::vector<Item> items_;
};

/// Active and reactive balance per bus:
///   sum p_g - G_sh v^2 - sum p_flow - s+ + s- = P_D
///   sum q_g + B_sh v^2 - sum q_flow - s+ + s- = Q_D
class BalanceBlock final : public ConstraintBlock {
 public:
  struct Item {
    std::size_t v;
    double g_shunt, b_shunt, p_load, q_load;
    std::vector<std::size_t> p_gen, q_gen, p_flow, q_flow;
    std::size_t sp_plus, sp_minus, sq_plus, sq_minus;
  };
  explicit BalanceBlock(std::vector<Item> items) : ConstraintBlock("power-balance"), items_(std::move(items)) {}

  std::size_t rows() const override { return 2 * items_.size(); }
  void bounds(std::span<double> lo, std::span<double> hi) const override;
  void residuals(std::span<const double> x, std::span<double> c) const override;
  std::vector<Entry> jacobian_pattern() const override;
  void jacobian_values(std::span<const double> x, std::span<double> v) const override;
  std::vector<Entry> hessian_pattern() const override;
  void hessian_values(std::span<const double> x, std::span<const double> m, std::span<double> v) const override;

 private:
  std::vector<Item> items_;
};

/// Sparse linear rows lo <= sum a_j x_j <= hi.
class LinearBlock final : public ConstraintBlock {
 public:
  struct Row {
    std::vector<std::pair<std::size_t, double>> terms;
    double lo, hi;
  };
  LinearBlock(std::string name, std::vector<Row> rows) : ConstraintBlock(std::move(name)), rows_(std::move(rows)) {}

  std::size_t rows() const override { return rows_.size(); }
  void bounds(std::span<double> lo, std::span<double> hi) const override;
  void residuals(std::span<const double> x, std::span<double> c) const override;
  std::vector<Entry> jacobian_pattern() const override;
  void jacobian_values(std::span<const double> x, std::span<double> v) const override;
  std::vector<Entry> hessian_pattern() const override { return {}; }
  void hessian_values(std::span<const double>, std::span<const double>, std::span<double>) const override {}

 private:
  std::vector<Row> rows_;
};

/// Relaxed complementarity rows x * (c + s y) <= cap with s = +1 or -1.
class ProductCapBlock final : public ConstraintBlock {
 public:
  struct Item {
    std::size_t x, y;
    double c, sign, cap;
  };
  ProductCapBlock(std::string name, std::vector<Item> items)
      : ConstraintBlock(std::move(name)), items_(std::move(items)) {}

  std::size_t rows() const override { return items_.size(); }
  const std::vector<Item>& items() const { return items_; }
  void bounds(std::span<double> lo, std::span<double> hi) const override;
  void residuals(std::span<const double> x, std::span<double> c) const override;
  std::vector<Entry> jacobian_pattern() const override;
  void jacobian_values(std::span<const double> x, std::span<double> v) const override;
  std::vector<Entry> hessian_pattern() const override;
  void hessian_values(std::span<const double> x, std::span<const double> m, std::span<double> v) const override;

 private:
  std::vector<Item> items_;
};

/// sum_g c0 + c1 p + c2 p^2
class GenerationCostBlock final : public ObjectiveBlock {
 public:
  struct Item {
    std::size_t p;
    grid::QuadraticCost cost;
  };
  explicit GenerationCostBlock(std::vector<Item> items)
      : ObjectiveBlock("generation-cost"), items_(std::move(items)) {}

  double value(std::span<const double> x) const override;
  void add_gradient(std::span<const double> x, std::span<double> g) const override;
  std::vector<Entry> hessian_pattern() const override;
  void hessian_values(std::span<const double> x, double w, std::span<double> v) const override;

 private:
  std::vector<Item> items_;
};

/// weight * sum_i (a1_i x_i + a2_i x_i^2) over slack variables.
class QuadPenaltyBlock final : public ObjectiveBlock {
 public:
  struct Item {
    std::size_t x;
    double a1, a2;
  };
  QuadPenaltyBlock(std::string name, std::vector<Item> items, double weight = 1.0)
      : ObjectiveBlock(std::move(name)), items_(std::move(items)), weight_(weight) {}

  double value(std::span<const double> x) const override;
  void add_gradient(std::span<const double> x, std::span<double> g) const override;
  std::vector<Entry> hessian_pattern() const override;
  void hessian_values(std::span<const double> x, double w, std::span<double> v) const override;

 private:
  std::vector<Item> items_;
  double weight_;
};

/// weight * sum_k P_k (p_k^2 + q_k^2)^2
class SurrogateBlock final : public ObjectiveBlock {
 public:
  struct Item {
    std::size_t p, q;
    double coefficient;
  };
  SurrogateBlock(std::vector<Item> items, double weight)
      : ObjectiveBlock("recourse-surrogates"), items_(std::move(items)), weight_(weight) {}

  double value(std::span<const double> x) const override;
  void add_gradient(std::span<const double> x, std::span<double> g) const override;
  std::vector<Entry> hessian_pattern() const override;
  void hessian_values(std::span<const double> x, double w, std::span<double> v) const override;

 private:
  std::vector<Item> items_;
  double weight_;
};

/// 0.5 * rho * sum (x_i - ref_i)^2
class RegularizationBlock final : public ObjectiveBlock {
 public:
  RegularizationBlock(std::vector<std::size_t> vars, std::vector<double> ref, double rho)
      : ObjectiveBlock("regularization"), vars_(std::move(vars)), ref_(std::move(ref)), rho_(rho) {}

  double value(std::span<const double> x) const override;
  void add_gradient(std::span<const double> x, std::span<double> g) const override;
  std::vector<Entry> hessian_pattern() const override;
  void hessian_values(std::span<const double> x, double w, std::span<double> v) const override;

 private:
  std::vector<std::size_t> vars_;
  std::vector<double> ref_;
  double rho_;
};

}  // namespace scacopf::opf
