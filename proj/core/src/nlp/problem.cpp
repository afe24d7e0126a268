#include "scacopf/nlp/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace scacopf::nlp {

namespace {

// Merges every block pattern into one sorted, deduplicated pattern and
// returns, per block, the merged slot of each local entry.
std::vector<std::vector<std::size_t>> merge_patterns(
    const std::vector<std::vector<Entry>>& patterns, std::vector<std::size_t>& rows,
    std::vector<std::size_t>& cols) {
  struct Tagged {
    Entry e;
    std::size_t block;
    std::size_t local;
  };
  std::vector<Tagged> all;
  for (std::size_t b = 0; b < patterns.size(); ++b)
    for (std::size_t i = 0; i < patterns[b].size(); ++i) all.push_back({patterns[b][i], b, i});
  std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) {
    return std::pair(a.e.row, a.e.col) < std::pair(b.e.row, b.e.col);
  });

  std::vector<std::vector<std::size_t>> slots(patterns.size());
  for (std::size_t b = 0; b < patterns.size(); ++b) slots[b].resize(patterns[b].size());
  rows.clear();
  cols.clear();
  for (const auto& t : all) {
    if (rows.empty() || rows.back() != t.e.row || cols.back() != t.e.col) {
      rows.push_back(t.e.row);
      cols.push_back(t.e.col);
    }
    slots[t.block][t.local] = rows.size() - 1;
  }
  return slots;
}

void check_finite(std::span<const double> values, const std::string& block, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw EvalError("non-finite " + std::string(what) + " in block '" + block + "' at entry " +
                      std::to_string(i));
}

}  // namespace

ObjectiveBlock& NlpProblem::add_objective(std::unique_ptr<ObjectiveBlock> block) {
  if (finalized_) throw std::logic_error("cannot add objective blocks after finalize()");
  objectives_.push_back(std::move(block));
  return *objectives_.back();
}

ConstraintBlock& NlpProblem::add_constraints(std::unique_ptr<ConstraintBlock> block) {
  if (finalized_) throw std::logic_error("cannot add constraint blocks after finalize()");
  row_offsets_.push_back(num_rows_);
  num_rows_ += block->rows();
  constraints_.push_back(std::move(block));
  return *constraints_.back();
}

const DerivativeCache& NlpProblem::finalize() {
  if (finalized_) return cache_;
  const std::size_t n = space_.size();
  cache_ = {};

  std::vector<std::vector<Entry>> jac_patterns;
  for (std::size_t b = 0; b < constraints_.size(); ++b) {
    auto pat = constraints_[b]->jacobian_pattern();
    for (auto& e : pat) {
      if (e.row >= constraints_[b]->rows() || e.col >= n)
        throw std::out_of_range("Jacobian entry (" + std::to_string(e.row) + "," +
                                std::to_string(e.col) + ") outside block '" +
                                constraints_[b]->name() + "'");
      e.row += row_offsets_[b];
    }
    cache_.zeta += pat.size();
    jac_patterns.push_back(std::move(pat));
  }

  std::vector<std::vector<Entry>> hess_patterns;
  auto normalize = [&](std::vector<Entry> pat, const std::string& name) {
    for (auto& e : pat) {
      if (e.row >= n || e.col >= n)
        throw std::out_of_range("Hessian entry (" + std::to_string(e.row) + "," +
                                std::to_string(e.col) + ") outside dimension in block '" + name +
                                "'");
      if (e.row < e.col) std::swap(e.row, e.col);
    }
    cache_.zeta += pat.size();
    return pat;
  };
  for (const auto& ob : objectives_) hess_patterns.push_back(normalize(ob->hessian_pattern(), ob->name()));
  for (const auto& cb : constraints_)
    hess_patterns.push_back(normalize(cb->hessian_pattern(), cb->name()));

  cache_.jac_slots = merge_patterns(jac_patterns, cache_.jac_rows, cache_.jac_cols);
  auto hslots = merge_patterns(hess_patterns, cache_.hess_rows, cache_.hess_cols);
  cache_.obj_hess_slots.assign(std::make_move_iterator(hslots.begin()),
                               std::make_move_iterator(hslots.begin() + objectives_.size()));
  cache_.con_hess_slots.assign(std::make_move_iterator(hslots.begin() + objectives_.size()),
                               std::make_move_iterator(hslots.end()));
  finalized_ = true;
  return cache_;
}

const DerivativeCache& NlpProblem::cache() const {
  require_finalized();
  return cache_;
}

void NlpProblem::require_finalized() const {
  if (!finalized_) throw std::logic_error("NlpProblem used before finalize()");
}

void NlpProblem::constraint_bounds(std::span<double> lower, std::span<double> upper) const {
  for (std::size_t b = 0; b < constraints_.size(); ++b) {
    const auto off = row_offsets_[b];
    const auto r = constraints_[b]->rows();
    constraints_[b]->bounds(lower.subspan(off, r), upper.subspan(off, r));
  }
}

EvalWorkspace NlpProblem::make_workspace() const {
  require_finalized();
  EvalWorkspace ws;
  for (const auto& s : cache_.jac_slots) ws.jac.emplace_back(s.size());
  for (const auto& s : cache_.obj_hess_slots) ws.obj_hess.emplace_back(s.size());
  for (const auto& s : cache_.con_hess_slots) ws.con_hess.emplace_back(s.size());
  return ws;
}

double NlpProblem::objective(std::span<const double> x) const {
  double f = 0.0;
  for (const auto& ob : objectives_) {
    const double v = ob->value(x);
    if (!std::isfinite(v)) throw EvalError("non-finite objective value in block '" + ob->name() + "'");
    f += v;
  }
  return f;
}

void NlpProblem::gradient(std::span<const double> x, std::span<double> grad) const {
  std::fill(grad.begin(), grad.end(), 0.0);
  for (const auto& ob : objectives_) ob->add_gradient(x, grad);
  check_finite(grad, "objective", "gradient");
}

void NlpProblem::residuals(std::span<const double> x, std::span<double> c) const {
  for (std::size_t b = 0; b < constraints_.size(); ++b) {
    auto part = c.subspan(row_offsets_[b], constraints_[b]->rows());
    constraints_[b]->residuals(x, part);
    check_finite(part, constraints_[b]->name(), "residual");
  }
}

void NlpProblem::jacobian(std::span<const double> x, EvalWorkspace& ws,
                          std::span<double> values) const {
  require_finalized();
  std::fill(values.begin(), values.end(), 0.0);
  for (std::size_t b = 0; b < constraints_.size(); ++b) {
    auto& local = ws.jac[b];
    constraints_[b]->jacobian_values(x, local);
    check_finite(local, constraints_[b]->name(), "Jacobian value");
    const auto& slots = cache_.jac_slots[b];
    for (std::size_t i = 0; i < local.size(); ++i) values[slots[i]] += local[i];
  }
}

void NlpProblem::hessian(std::span<const double> x, double obj_scale,
                         std::span<const double> lambda, EvalWorkspace& ws,
                         std::span<double> values) const {
  require_finalized();
  std::fill(values.begin(), values.end(), 0.0);
  for (std::size_t b = 0; b < objectives_.size(); ++b) {
    auto& local = ws.obj_hess[b];
    if (local.empty()) continue;
    objectives_[b]->hessian_values(x, obj_scale, local);
    check_finite(local, objectives_[b]->name(), "Hessian value");
    const auto& slots = cache_.obj_hess_slots[b];
    for (std::size_t i = 0; i < local.size(); ++i) values[slots[i]] += local[i];
  }
  for (std::size_t b = 0; b < constraints_.size(); ++b) {
    auto& local = ws.con_hess[b];
    if (local.empty()) continue;
    constraints_[b]->hessian_values(x, lambda.subspan(row_offsets_[b], constraints_[b]->rows()),
                                    local);
    check_finite(local, constraints_[b]->name(), "Hessian value");
    const auto& slots = cache_.con_hess_slots[b];
    for (std::size_t i = 0; i < local.size(); ++i) values[slots[i]] += local[i];
  }
}

void NlpProblem::eval(std::span<const double> x, std::span<const double> lambda, double obj_scale,
                      EvalWorkspace& ws, EvalResult& out) const {
  require_finalized();
  out.grad.resize(num_variables());
  out.c.resize(num_rows_);
  out.jac.resize(cache_.jac_nnz());
  out.hess.resize(cache_.hess_nnz());
  out.f = objective(x);
  gradient(x, out.grad);
  residuals(x, out.c);
  jacobian(x, ws, out.jac);
  hessian(x, obj_scale, lambda, ws, out.hess);
}

}  // namespace scacopf::nlp
