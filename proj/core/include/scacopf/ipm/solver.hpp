#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scacopf/nlp/problem.hpp"

namespace scacopf::ipm {

enum class WarmStartMode { cold, primal, primal_dual };

enum class Status { optimal, acceptable, infeasible_point, iteration_limit, numerical_failure };

std::string_view to_string(Status s);
std::string_view to_string(WarmStartMode m);

struct IpmOptions {
  double mu_init = 0.1;
  double mu_min = 1e-9;
  double tol_kkt = 1e-8;
  double acceptable_tol = 1e-6;
  int max_iter = 300;
  double fraction_to_boundary = 0.995;
  double mu_decrease = 0.2;
  double reg_initial = 1e-4;
  double reg_growth_first = 100.0;
  double reg_growth = 8.0;
  double reg_max = 1e20;
  WarmStartMode warm_start_mode = WarmStartMode::cold;
  /// Barrier parameter used for primal-dual warm starts.
  double mu_warm = 1e-5;
  /// Initial push of the cold start point into the bound interior.
  double bound_push = 1e-2;
  /// KKT dimension at which the sparse factorization takes over.
  std::size_t dense_threshold = 2000;
  /// Objective gradient scaling cap: sf = min(1, grad_scale_target / |grad f(x0)|_inf).
  double grad_scale_target = 100.0;
  /// Receives one line per iteration when set.
  std::function<void(std::string_view)> log;
};

/// A primal or primal-dual start. Multipliers follow the sign convention of
/// IpmResult; empty vectors mean "use defaults".
struct StartPoint {
  std::vector<double> x;
  std::vector<double> lambda;
  std::vector<double> z_lower;
  std::vector<double> z_upper;
  WarmStartMode mode = WarmStartMode::primal;
};

struct IpmResult {
  Status status = Status::numerical_failure;
  std::vector<double> x;
  /// Constraint multipliers for the Lagrangian f + lambda^T c; positive when the
  /// upper row bound is active, negative when the lower one is.
  std::vector<double> lambda;
  std::vector<double> z_lower;
  std::vector<double> z_upper;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double constraint_violation = 0.0;
  /// Sum of bound complementarity products in unscaled objective units.
  double duality_gap = 0.0;
  double objective_scaling = 1.0;
  int iterations = 0;
  double mu = 0.0;
  double eval_seconds = 0.0;
  double total_seconds = 0.0;

  bool converged() const { return status == Status::optimal || status == Status::acceptable; }
};

/// Solves min f(x) s.t. cl <= c(x) <= cu, xl <= x <= xu. Fixed variables
/// (xl == xu) stay at their value. The problem must be finalized.
IpmResult solve(const nlp::NlpProblem& problem, const std::optional<StartPoint>& start,
                const IpmOptions& opts = {});

/// Builds a start point for a problem with the same variable space as the one
/// `base` was solved on. Entries outside [lo, hi] (or on a bound) are moved inside
/// by 1e-4 * width. Throws std::invalid_argument on dimension mismatch.
StartPoint warm_start_from(const IpmResult& base, const nlp::VariableSpace& space,
                           WarmStartMode mode);

/// Optimality error of (x, lambda, z) on the objective-scaled problem
/// (f replaced by sf*f, multipliers by sf times themselves):
///   max( |sf (grad f + J^T lambda - z_L + z_U)|_inf / s_d,
///        |max(cl - c, c - cu, 0)|_inf,
///        |sf * complementarity|_inf / s_c )
/// where complementarity stacks z_L (x - xl), z_U (xu - x),
/// max(-lambda,0)(c - cl), max(lambda,0)(cu - c) over finite bounds of
/// non-fixed variables and inequality rows, and
/// s_d = max(1, sf (|lambda|_1 + |z|_1) / (100 (m + n))),
/// s_c = max(1, sf |z|_1 / (100 n)).
double kkt_residual(const nlp::NlpProblem& problem, std::span<const double> x,
                    std::span<const double> lambda, std::span<const double> z_lower,
                    std::span<const double> z_upper, double objective_scaling);

}  // namespace scacopf::ipm
