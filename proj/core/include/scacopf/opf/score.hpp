#pragma once

#include <map>
#include <string>
#include <vector>

#include "scacopf/grid/network.hpp"
#include "scacopf/opf/case_model.hpp"
#include "scacopf/opf/penalty.hpp"

namespace scacopf::opf {

struct ContingencyScore {
  std::string id;
  bool present = false;
  CasePenalty penalty;
};

/// Objective f = generation cost + base penalties + weight * sum of contingency penalties.
struct ScoreBreakdown {
  PenaltyMode mode = PenaltyMode::piecewise;
  double generation_cost = 0.0;
  CasePenalty base_penalty;
  std::vector<ContingencyScore> contingencies;
  /// 1 / |contingencies| (0 when there are none).
  double contingency_weight = 0.0;
  double total = 0.0;
  /// Some contingency point was missing; its term is left out of `total`.
  bool partial = false;
  /// Bound and dimension findings (scoring proceeds regardless).
  std::vector<std::string> diagnostics;

  double contingency_total() const;
};

/// Scores stored slacks of the base point and of each contingency point
/// (keyed by contingency id).
ScoreBreakdown score_solution(const grid::Network& net, const OperatingPoint& base,
                              const std::map<std::string, OperatingPoint>& contingency_points,
                              PenaltyMode mode);

/// Variables outside their bounds in case `topo` (and negative slacks).
std::vector<std::string> bound_diagnostics(const grid::Network& net, const grid::CaseTopology& topo,
                                           const OperatingPoint& pt, double tol = 1e-6);

}  // namespace scacopf::opf
