#include "scacopf/opf/flows.hpp"

#include <cmath>

namespace scacopf::opf {

FlowTerm flow_term(double va, double vb, double ta, double tb, const grid::Branch& e, bool reactive) {
  const double g = e.g_series;
  const double b = e.b_series;
  const double c = std::cos(ta - tb);
  const double s = std::sin(ta - tb);
  FlowTerm f{};
  if (!reactive) {
    f.a = g;
    f.h = -(g * c + b * s);
    f.dh = g * s - b * c;
    f.d2h = g * c + b * s;
  } else {
    f.a = -(b + 0.5 * e.b_charge);
    f.h = b * c - g * s;
    f.dh = -b * s - g * c;
    f.d2h = -b * c + g * s;
  }
  f.value = f.a * va * va + va * vb * f.h;
  return f;
}

BranchFlow branch_flow(double v_from, double v_to, double theta_from, double theta_to,
                       const grid::Branch& e) {
  return {flow_term(v_from, v_to, theta_from, theta_to, e, false).value,
          flow_term(v_from, v_to, theta_from, theta_to, e, true).value,
          flow_term(v_to, v_from, theta_to, theta_from, e, false).value,
          flow_term(v_to, v_from, theta_to, theta_from, e, true).value};
}

}  // namespace scacopf::opf
