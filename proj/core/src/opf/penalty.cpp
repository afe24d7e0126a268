#include "scacopf/opf/penalty.hpp"

namespace scacopf::opf {

QuadPenalty quad_penalty_fit(const grid::PenaltyCurve& curve) {
  return {curve.slope1, (curve.slope2 - curve.slope1) / (2.0 * curve.bin1_width)};
}

double evaluate_penalty(const grid::PenaltyCurve& curve, double x, PenaltyMode mode) {
  if (mode == PenaltyMode::piecewise) return curve(x);
  return quad_penalty_fit(curve)(x);
}

}  // namespace scacopf::opf
