#pragma once

#include "scacopf/grid/network.hpp"

namespace scacopf::opf {

/// Smooth penalty a1 x + a2 x^2 standing in for a two-bin piecewise curve.
struct QuadPenalty {
  double a1 = 0.0;
  double a2 = 0.0;

  double operator()(double x) const { return (a1 + a2 * x) * x; }
  double derivative(double x) const { return a1 + 2.0 * a2 * x; }
};

/// Matches the curve's slope at 0 and at the start of the second bin.
QuadPenalty quad_penalty_fit(const grid::PenaltyCurve& curve);

enum class PenaltyMode { piecewise, quadratic };

double evaluate_penalty(const grid::PenaltyCurve& curve, double x, PenaltyMode mode);

}  // namespace scacopf::opf
