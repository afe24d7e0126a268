#pragma once

#include <random>
#include <vector>

#include "scacopf/nlp/check.hpp"

namespace sampling {

inline std::vector<double> random_interior(const scacopf::nlp::NlpProblem& p, const std::vector<double>& center,
                                           std::mt19937_64& rng) {
  return scacopf::nlp::random_interior(p, center, rng());
}

}  // namespace sampling
