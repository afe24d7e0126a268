#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scacopf/nlp/problem.hpp"

namespace scacopf::nlp {

struct BlockCheck {
  std::string name;
  bool is_objective = false;
  /// Max relative error of first derivatives (gradient or Jacobian).
  double first_order = 0.0;
  /// Max relative error of the (multiplier-weighted) Hessian.
  double second_order = 0.0;
  bool passed = true;
};

struct DerivativeReport {
  std::vector<BlockCheck> blocks;
  double tolerance = 1e-6;

  bool passed() const;
  double max_error() const;
  std::string to_string() const;
};

/// Compares hand-coded derivatives of every block against central finite
/// differences with step 1e-6 * (1 + |x_i|). Relative error of an entry is
/// |analytic - fd| / max(1, |analytic|, |fd|). Constraint Hessians are
/// checked against differences of J^T lambda for multipliers drawn from `seed`.
DerivativeReport check_derivatives(const NlpProblem& problem, std::span<const double> x,
                                   std::uint64_t seed, double tolerance = 1e-6);

/// Random point strictly inside the variable bounds. Unbounded directions are
/// sampled near `center` (or a small offset from a one-sided bound).
std::vector<double> random_interior(const NlpProblem& problem, std::span<const double> center, std::uint64_t seed);

}  // namespace scacopf::nlp
