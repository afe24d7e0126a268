#pragma once

#include "scacopf/grid/network.hpp"

namespace scacopf::opf {

struct BranchFlow {
  double p_from = 0.0;
  double q_from = 0.0;
  double p_to = 0.0;
  double q_to = 0.0;
};

/// Pi-model flows leaving each terminal of `e`.
BranchFlow branch_flow(double v_from, double v_to, double theta_from, double theta_to,
                       const grid::Branch& e);

/// Flow leaving terminal a toward b as a v_a^2 + v_a v_b h(theta_a - theta_b).
/// `reactive` selects the q expression. Derivatives of h are returned too.
struct FlowTerm {
  double value;
  double a;     // coefficient of v_a^2
  double h;     // h(t)
  double dh;    // h'(t)
  double d2h;   // h''(t)
};

FlowTerm flow_term(double va, double vb, double ta, double tb, const grid::Branch& e, bool reactive);

}  // namespace scacopf::opf
