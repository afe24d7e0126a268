#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scacopf/decomp/decomp.hpp"
#include "scacopf/exec/engine.hpp"
#include "scacopf/nlp/check.hpp"

namespace scacopf::cli {

enum ExitCode : int { kOk = 0, kLoadFailure = 1, kPartial = 2 };

struct RunConfig {
  std::filesystem::path network;
  std::filesystem::path out = ".";
  decomp::DecompParams params;
  std::size_t workers = 1;
  exec::Mode mode = exec::Mode::synchronous;
  /// Seconds; empty means unlimited.
  std::optional<double> budget_seconds;
  std::uint64_t seed = 1;
  bool verbose = false;
};

/// Throws std::invalid_argument naming the first out-of-range parameter.
void validate(const RunConfig& c);

int cmd_solve(const RunConfig& c, std::ostream& out, std::ostream& err);

/// Scores `files` (every solution_*.json in c.out when empty).
int cmd_score(const RunConfig& c, const std::vector<std::filesystem::path>& files, std::ostream& out,
              std::ostream& err);

int cmd_check(const RunConfig& c, std::ostream& out, std::ostream& err);

/// Relaxed subproblem of one contingency at the base point in
/// c.out/solution_base.json; writes relaxed_<id>.json.
int cmd_evaluate(const RunConfig& c, const std::string& id, std::ostream& out, std::ostream& err);

/// Feasibility recovery of one contingency from relaxed_<id>.json (evaluated
/// first when absent); writes solution_<id>.json.
int cmd_recover(const RunConfig& c, const std::string& id, std::ostream& out, std::ostream& err);

struct NamedReport {
  std::string problem;
  nlp::DerivativeReport report;
};

/// Derivative checks of the base problem (zero and random surrogate
/// coefficients), every contingency problem and a response canvas per
/// contingency, at `points` random interior points each. `base` must be a
/// base-case point of `net`.
std::vector<NamedReport> derivative_suite(const grid::Network& net, const opf::OperatingPoint& base, int points,
                                          std::uint64_t seed);

}  // namespace scacopf::cli
