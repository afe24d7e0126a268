#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scacopf/grid/network.hpp"
#include "scacopf/ipm/solver.hpp"
#include "scacopf/opf/case_model.hpp"

namespace scacopf::recovery {

/// Raised when a production deviation lies outside the open response range.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A generator taking part in drop control.
struct ResponseUnit {
  double p0 = 0.0;
  double a = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
};

/// sum_g clip(p0 + a delta, p_min, p_max) - p0
double response_total(double delta, std::span<const ResponseUnit> units);

/// delta with response_total(delta) = x, by bisection on [lower, upper] to 1e-10
/// in x. Requires sum(p_min - p0) < x < sum(p_max - p0); x = 0 gives 0.
double delta_response(double x, std::span<const ResponseUnit> units, double lower, double upper);

/// Responding units (A > 0, in service) of case `topo` around `p_base`.
std::vector<ResponseUnit> response_units(const grid::Network& net, const grid::CaseTopology& topo,
                                         std::span<const double> p_base, std::vector<std::size_t>* generators = nullptr);

/// delta_response over the responding generators of `topo`, bracketed by delta_bounds.
double delta_response(double x, const grid::Network& net, const grid::CaseTopology& topo,
                      std::span<const double> p_base);

/// One canvas edit. `element` is a network generator index (p, q, response)
/// or bus index (v); fixes use `lo`.
struct Mutation {
  enum class Kind { fix, bounds, response };
  enum class Var { p, q, v, delta };
  Kind kind = Kind::fix;
  Var var = Var::p;
  std::size_t element = 0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Canvas variable name a mutation refers to, e.g. "p[G1]" or "delta".
std::string variable_name(const Mutation& m, const grid::Network& net);

enum class RegulatorDecision { lower_saturated, regulated, upper_saturated };

struct BusRegulation {
  std::size_t bus = 0;
  double eta = 0.0;
  RegulatorDecision decision = RegulatorDecision::regulated;
};

struct CrushPlan {
  double delta_hat = 0.0;
  double d_lower = 0.0;
  double d_upper = 0.0;
  bool delta_fixed = false;
  /// Drop-control partition (network generator indices).
  std::vector<std::size_t> saturated;
  std::vector<std::size_t> responding;
  /// In service but not responding (A = 0): held at base output.
  std::vector<std::size_t> held;
  std::vector<double> p_hat;
  std::vector<BusRegulation> regulators;
  std::vector<Mutation> mutations;
};

/// Frequency-drop part of the plan from an approximate contingency point.
CrushPlan crush_drop(const grid::Network& net, const grid::CaseTopology& topo, const opf::OperatingPoint& base,
                     const opf::OperatingPoint& approx);

/// Appends the voltage-regulator decisions for every controlled bus to `plan`.
void crush_vreg(const grid::Network& net, const grid::CaseTopology& topo, const opf::OperatingPoint& base,
                const opf::OperatingPoint& approx, double epsilon_q, CrushPlan& plan);

/// Applies the plan's mutations to a canvas.
void apply_plan(const CrushPlan& plan, const grid::Network& net, opf::RestrictedCanvas& canvas,
                const opf::OperatingPoint& base);

/// Point that satisfies every mutation of `plan`, built from `approx`.
opf::OperatingPoint planned_point(const grid::Network& net, const grid::CaseTopology& topo,
                                  const opf::OperatingPoint& base, const opf::OperatingPoint& approx,
                                  const CrushPlan& plan);

/// Sets rho and nu of a contingency point from the coupling equations.
void derive_coupling(const grid::Network& net, const grid::CaseTopology& topo, const opf::OperatingPoint& base,
                     opf::OperatingPoint& pt);

/// Largest of min(rho+, Pmax - p), min(rho-, p - Pmin), min(nu-, Qmax - q),
/// min(nu+, q - Qmin) over the case, plus the largest coupling-equation residual.
struct CouplingResiduals {
  double drop_complementarity = 0.0;
  double voltage_complementarity = 0.0;
  double drop_equation = 0.0;
  double voltage_equation = 0.0;
  double max() const;
};
CouplingResiduals coupling_residuals(const grid::Network& net, const grid::CaseTopology& topo,
                                     const opf::OperatingPoint& base, const opf::OperatingPoint& pt);

struct RecoveryOptions {
  double epsilon_q = 0.05;
  double regularization = 1e-6;
  ipm::IpmOptions ipm;
};

struct RecoveryResult {
  opf::OperatingPoint point;
  CrushPlan plan;
  ipm::Status status = ipm::Status::numerical_failure;
  int iterations = 0;
  bool retried = false;
  /// The solves failed and the copy-base point was returned.
  bool fallback = false;
  /// Largest power-flow constraint violation at the returned point.
  double constraint_violation = 0.0;
};

/// Crushes `approx` onto the exact coupling set of contingency k and re-solves.
RecoveryResult recover_feasible(const grid::Network& net, std::size_t contingency, const opf::OperatingPoint& base,
                                const opf::OperatingPoint& approx, const RecoveryOptions& opts = {});

}  // namespace scacopf::recovery
