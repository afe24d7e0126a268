#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scacopf/grid/network.hpp"
#include "scacopf/nlp/problem.hpp"
#include "scacopf/opf/penalty.hpp"

namespace scacopf::opf {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

/// Full state of one case. Generator vectors are indexed by network generator
/// index, branch vectors by network branch index; out-of-service entries are 0.
struct OperatingPoint {
  std::string case_id = std::string(grid::kBaseCaseId);
  std::vector<double> v, theta;
  std::vector<double> p, q;
  std::vector<double> sigma_from, sigma_to;
  std::vector<double> sp_plus, sp_minus, sq_plus, sq_minus;
  std::vector<double> rho_plus, rho_minus;
  std::vector<double> nu_plus, nu_minus;
  double delta = 0.0;
};

/// Zero-filled point with the network's dimensions.
OperatingPoint empty_point(const grid::Network& net, std::string case_id);

/// Which pair of injections a surrogate penalizes.
enum class SurrogateSite { generator, branch_from, branch_to };

/// One fourth-power recourse term P (p^2 + q^2)^2 in the master objective.
struct SurrogateTerm {
  std::size_t contingency = 0;
  SurrogateSite site = SurrogateSite::generator;
  std::size_t element = 0;
  double coefficient = 0.0;
};

/// Variable indices of one case problem (npos where absent).
struct CaseIndex {
  grid::CaseTopology topo;
  std::size_t reference_bus = 0;
  std::vector<std::size_t> v, theta;
  std::vector<std::size_t> p, q;
  std::vector<std::size_t> pf_from, qf_from, pf_to, qf_to;
  std::vector<std::size_t> sigma_from, sigma_to;
  std::vector<std::size_t> sp_plus, sp_minus, sq_plus, sq_minus;
  std::vector<std::size_t> rho_plus, rho_minus;
  std::vector<std::size_t> nu_plus, nu_minus;
  std::size_t delta = npos;
};

/// A built problem plus its index map and a default starting point. Blocks keep
/// pointers into the Network, which must outlive the problem.
struct CaseProblem {
  nlp::NlpProblem problem;
  CaseIndex index;
  std::vector<double> start;
};

/// Lowest bus id (numeric when both ids are integers) carrying a generator.
std::size_t reference_bus(const grid::Network& net);

/// Master problem: base-case ACOPF with generation cost, quadratic penalties
/// and (1 / |contingencies|) * sum of surrogate terms.
CaseProblem build_base_problem(const grid::Network& net, std::span<const SurrogateTerm> surrogates);

/// Relaxed contingency subproblem around the base point.
CaseProblem build_contingency_problem(const grid::Network& net, std::size_t contingency,
                                      const OperatingPoint& base, double epsilon = 1e-4);

/// Restricted contingency problem without coupling constraints. Mutations are
/// allowed until finalize(); variables are addressed by name or index.
class RestrictedCanvas {
 public:
  RestrictedCanvas(const grid::Network& net, std::size_t contingency, const OperatingPoint& base,
                   double regularization = 1e-6);

  const CaseIndex& index() const { return cp_.index; }
  nlp::NlpProblem& problem() { return cp_.problem; }
  const nlp::NlpProblem& problem() const { return cp_.problem; }
  std::vector<double>& start() { return cp_.start; }

  /// Index of a named variable; throws std::invalid_argument when unknown.
  std::size_t variable(std::string_view name) const;

  void fix(std::size_t var, double value);
  void fix(std::string_view name, double value) { fix(variable(name), value); }
  void set_bounds(std::size_t var, double lo, double hi);
  void set_bounds(std::string_view name, double lo, double hi) { set_bounds(variable(name), lo, hi); }
  /// Adds lo <= sum a_j x_j <= hi; takes effect at finalize().
  void add_linear_constraint(std::vector<std::pair<std::size_t, double>> terms, double lo, double hi);
  /// Exact drop response p_g = p0 + A_g delta.
  void add_response(std::size_t generator, double p0);

  std::size_t pending_constraints() const { return pending_.size(); }
  CaseProblem& finalize();
  bool finalized() const { return cp_.problem.finalized(); }

 private:
  const grid::Network& net_;
  CaseProblem cp_;
  std::vector<std::pair<std::vector<std::pair<std::size_t, double>>, std::pair<double, double>>> pending_;
};

/// Writes `pt` into a variable vector for `idx`; flows are recomputed from v and theta.
std::vector<double> to_vector(const grid::Network& net, const CaseIndex& idx, const OperatingPoint& pt);

/// Reads a variable vector back into a point (absent variables stay 0).
OperatingPoint to_point(const grid::Network& net, const CaseIndex& idx, std::span<const double> x,
                        std::string case_id);

/// Contingency point that keeps the base dispatch and voltages, delta = 0,
/// with flows recomputed and slacks set from the resulting residuals.
OperatingPoint copy_base_point(const grid::Network& net, const grid::CaseTopology& topo,
                               const OperatingPoint& base);

/// Sets thermal and balance slacks of `pt` to the smallest values consistent
/// with its v, theta, p, q in case `topo`.
void fill_slacks(const grid::Network& net, const grid::CaseTopology& topo, OperatingPoint& pt);

/// Sum of penalties of the stored slacks of one case.
struct CasePenalty {
  double thermal = 0.0;
  double active = 0.0;
  double reactive = 0.0;
  double total() const { return thermal + active + reactive; }
};
CasePenalty case_penalty(const grid::Network& net, const grid::CaseTopology& topo,
                         const OperatingPoint& pt, PenaltyMode mode);

double generation_cost(const grid::Network& net, const OperatingPoint& base);

}  // namespace scacopf::opf
