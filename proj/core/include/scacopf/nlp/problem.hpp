#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scacopf/nlp/variable_space.hpp"

namespace scacopf::nlp {

/// A structural nonzero. For Jacobian patterns `row` is block-local; Hessian
/// patterns use global indices and must lie in the lower triangle (row >= col)
/// after normalization, which finalize() performs.
struct Entry {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const Entry&, const Entry&) = default;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One additive term of the objective.
class ObjectiveBlock {
 public:
  explicit ObjectiveBlock(std::string name) : name_(std::move(name)) {}
  virtual ~ObjectiveBlock() = default;

  const std::string& name() const { return name_; }

  virtual double value(std::span<const double> x) const = 0;
  /// Adds this term's gradient into `grad` (dense, full dimension).
  virtual void add_gradient(std::span<const double> x, std::span<double> grad) const = 0;
  virtual std::vector<Entry> hessian_pattern() const = 0;
  /// Writes `weight` times the Hessian values in hessian_pattern() order.
  virtual void hessian_values(std::span<const double> x, double weight,
                              std::span<double> values) const = 0;

 private:
  std::string name_;
};

/// A group of constraint rows lower <= c(x) <= upper (equal bounds: equality).
class ConstraintBlock {
 public:
  explicit ConstraintBlock(std::string name) : name_(std::move(name)) {}
  virtual ~ConstraintBlock() = default;

  const std::string& name() const { return name_; }

  virtual std::size_t rows() const = 0;
  virtual void bounds(std::span<double> lower, std::span<double> upper) const = 0;
  virtual void residuals(std::span<const double> x, std::span<double> c) const = 0;
  virtual std::vector<Entry> jacobian_pattern() const = 0;
  virtual void jacobian_values(std::span<const double> x, std::span<double> values) const = 0;
  virtual std::vector<Entry> hessian_pattern() const = 0;
  /// Writes sum_r multipliers[r] * Hess c_r in hessian_pattern() order.
  virtual void hessian_values(std::span<const double> x, std::span<const double> multipliers,
                              std::span<double> values) const = 0;

 private:
  std::string name_;
};

/// Merged, sorted derivative patterns plus per-block slot arrays giving O(1)
/// access from a block's local nonzero to its merged position.
struct DerivativeCache {
  std::vector<std::size_t> jac_rows;
  std::vector<std::size_t> jac_cols;
  std::vector<std::size_t> hess_rows;
  std::vector<std::size_t> hess_cols;
  std::vector<std::vector<std::size_t>> jac_slots;       // per constraint block
  std::vector<std::vector<std::size_t>> obj_hess_slots;  // per objective block
  std::vector<std::vector<std::size_t>> con_hess_slots;  // per constraint block
  /// Total number of block-contributed nonzeros before merging.
  std::size_t zeta = 0;

  std::size_t jac_nnz() const { return jac_rows.size(); }
  std::size_t hess_nnz() const { return hess_rows.size(); }
};

/// Caller-owned scratch for evaluations, sized once from a finalized problem.
struct EvalWorkspace {
  std::vector<std::vector<double>> jac;
  std::vector<std::vector<double>> obj_hess;
  std::vector<std::vector<double>> con_hess;
};

struct EvalResult {
  double f = 0.0;
  std::vector<double> grad;
  std::vector<double> c;
  std::vector<double> jac;
  std::vector<double> hess;
};

class NlpProblem {
 public:
  explicit NlpProblem(VariableSpace space = {}) : space_(std::move(space)) {}

  NlpProblem(const NlpProblem&) = delete;
  NlpProblem& operator=(const NlpProblem&) = delete;
  NlpProblem(NlpProblem&&) noexcept = default;
  NlpProblem& operator=(NlpProblem&&) noexcept = default;

  VariableSpace& space() { return space_; }
  const VariableSpace& space() const { return space_; }
  std::size_t num_variables() const { return space_.size(); }
  std::size_t num_constraints() const { return num_rows_; }

  ObjectiveBlock& add_objective(std::unique_ptr<ObjectiveBlock> block);
  ConstraintBlock& add_constraints(std::unique_ptr<ConstraintBlock> block);

  std::size_t objective_block_count() const { return objectives_.size(); }
  std::size_t constraint_block_count() const { return constraints_.size(); }
  const ObjectiveBlock& objective_block(std::size_t i) const { return *objectives_[i]; }
  const ConstraintBlock& constraint_block(std::size_t i) const { return *constraints_[i]; }
  std::size_t row_offset(std::size_t block) const { return row_offsets_[block]; }

  /// Sorts and merges the derivative patterns and builds per-block slot arrays.
  /// Idempotent; afterwards no further blocks may be added.
  const DerivativeCache& finalize();
  bool finalized() const { return finalized_; }
  const DerivativeCache& cache() const;

  void constraint_bounds(std::span<double> lower, std::span<double> upper) const;

  EvalWorkspace make_workspace() const;

  double objective(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> grad) const;
  void residuals(std::span<const double> x, std::span<double> c) const;
  void jacobian(std::span<const double> x, EvalWorkspace& ws, std::span<double> values) const;
  /// Hessian of the Lagrangian sigma * f + lambda^T c in merged lower-triangular slots.
  void hessian(std::span<const double> x, double obj_scale, std::span<const double> lambda,
               EvalWorkspace& ws, std::span<double> values) const;

  /// Evaluates everything into `out` (resized on first use).
  void eval(std::span<const double> x, std::span<const double> lambda, double obj_scale,
            EvalWorkspace& ws, EvalResult& out) const;

 private:
  void require_finalized() const;

  VariableSpace space_;
  std::vector<std::unique_ptr<ObjectiveBlock>> objectives_;
  std::vector<std::unique_ptr<ConstraintBlock>> constraints_;
  std::vector<std::size_t> row_offsets_;
  std::size_t num_rows_ = 0;
  DerivativeCache cache_;
  bool finalized_ = false;
};

}  // namespace scacopf::nlp
