#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scacopf/grid/network.hpp"
#include "scacopf/ipm/solver.hpp"
#include "scacopf/opf/case_model.hpp"
#include "scacopf/opf/score.hpp"
#include "scacopf/recovery/recovery.hpp"

namespace scacopf::decomp {

/// Fourth-power recourse model P (p^2 + q^2)^2 of one contingency, coupled to
/// the failing generator or to one terminal of the failing branch.
struct RecourseSurrogate {
  std::size_t contingency = 0;
  grid::ContingencyKind kind = grid::ContingencyKind::generator;
  /// Network generator or branch index.
  std::size_t element = 0;
  /// generator, branch_from or branch_to.
  opf::SurrogateSite site = opf::SurrogateSite::generator;
  double coefficient = 0.0;
  /// Zero injection at the last update with a positive penalty: P kept its
  /// previous value and the contingency is re-evaluated every pass.
  bool pinned = false;
};

using SurrogateTable = std::vector<RecourseSurrogate>;

/// One zero-coefficient surrogate per contingency.
SurrogateTable initial_surrogates(const grid::Network& net);

/// p^2 + q^2 at `site` of the surrogate's element in the base point.
double apparent_power_squared(const grid::Network& net, const RecourseSurrogate& s,
                              const opf::OperatingPoint& base, opf::SurrogateSite site);

/// P (p^2 + q^2)^2
inline double surrogate_formula(double coefficient, double p, double q) {
  const double a = p * p + q * q;
  return coefficient * a * a;
}

double surrogate_value(const grid::Network& net, const RecourseSurrogate& s, const opf::OperatingPoint& base);

/// Below this (p^2 + q^2)^2 the injection counts as zero.
inline constexpr double kZeroInjection = 1e-12;

/// Refits P so that surrogate_value(base) = r. Branch surrogates first move
/// to the terminal with the larger apparent power. At zero injection P is
/// left unchanged (reset to 0 when r = 0) and the surrogate is pinned. Throws std::invalid_argument
/// for negative or non-finite r.
void update_surrogate(const grid::Network& net, RecourseSurrogate& s, double r, const opf::OperatingPoint& base);

/// Master objective terms for the table (zero coefficients included).
std::vector<opf::SurrogateTerm> surrogate_terms(const SurrogateTable& table);

/// Contingency indices: the S_G largest generator and S_E largest branch
/// outages interleaved generator-first, then the rest in capacity order.
std::vector<std::size_t> prescreen(const grid::Network& net, std::size_t s_gen, std::size_t s_branch);

struct DecompParams {
  double epsilon = 1e-4;
  double epsilon_q = 0.05;
  double epsilon_r = 1e-2;
  /// Sweeps over the schedule; the first covers every contingency.
  int passes = 3;
  /// Cap on master solves across all passes.
  int max_iterations = 1000;
  std::size_t prescreen_gen = 4;
  std::size_t prescreen_branch = 4;
  /// Contingencies evaluated between master solves.
  std::size_t block_size = 1;
  ipm::IpmOptions ipm;
};

struct MasterResult {
  opf::OperatingPoint base;
  ipm::IpmResult ipm;
  /// Converged (possibly after a cold retry).
  bool ok = false;
  bool retried = false;
};

struct Evaluation {
  std::size_t contingency = 0;
  /// Relaxed recourse value r_k (quadratic penalties).
  double penalty = 0.0;
  ipm::Status status = ipm::Status::numerical_failure;
  int iterations = 0;
  double seconds = 0.0;
  /// The subproblem did not converge; `penalty` is the copy-base point's.
  bool fallback = false;
  /// Master snapshot the evaluation was computed against.
  std::uint64_t snapshot = 0;
  opf::OperatingPoint point;
};

struct UpdateRecord {
  std::size_t contingency = 0;
  int pass = 0;
  std::uint64_t snapshot = 0;
  double penalty = 0.0;
  double coefficient = 0.0;
  /// surrogate_value at the point of the update and at zero injection.
  double value_at_update = 0.0;
  double value_at_zero = 0.0;
  bool pinned = false;
};

struct PassRecord {
  int pass = 0;
  std::vector<std::size_t> schedule;
  /// Base point and snapshot of the first evaluation in the pass.
  opf::OperatingPoint base;
  std::uint64_t snapshot = 0;
  std::map<std::size_t, double> penalties;
};

struct DecompState {
  opf::OperatingPoint base;
  std::optional<MasterResult> master;
  /// Bumped on every completed master solve.
  std::uint64_t snapshot = 0;
  SurrogateTable surrogates;
  std::vector<double> latest_penalty;
  std::vector<char> evaluated;
  /// Master-solve counter at the latest evaluation of each contingency.
  std::vector<int> evaluated_at;
  int iteration = 0;
  int pass = 0;
  std::vector<PassRecord> passes;
  std::vector<UpdateRecord> updates;
  bool converged = false;
  bool master_failed = false;
  double master_seconds = 0.0;
  double master_eval_seconds = 0.0;
};

/// Problem-specific work of the decomposition; evaluate() must be safe to call
/// concurrently with itself and with solve_master().
class Driver {
 public:
  virtual ~Driver() = default;
  virtual const grid::Network& network() const = 0;
  virtual MasterResult solve_master(const SurrogateTable& table, const MasterResult* previous) const = 0;
  virtual Evaluation evaluate(std::size_t contingency, const opf::OperatingPoint& base) const = 0;
};

/// Relaxed-subproblem driver for a network.
class ScacopfDriver final : public Driver {
 public:
  ScacopfDriver(const grid::Network& net, DecompParams params) : net_(net), params_(std::move(params)) {}
  const grid::Network& network() const override { return net_; }
  MasterResult solve_master(const SurrogateTable& table, const MasterResult* previous) const override;
  Evaluation evaluate(std::size_t contingency, const opf::OperatingPoint& base) const override;

 private:
  const grid::Network& net_;
  DecompParams params_;
};

DecompState initial_state(const grid::Network& net);

/// Records a master solve in the state (bumps the snapshot).
void apply_master(DecompState& state, MasterResult result);

/// Stores r_k, refits the surrogate at `base` and logs the update.
void apply_evaluation(const grid::Network& net, DecompState& state, const Evaluation& e,
                      const opf::OperatingPoint& base);

/// Schedule of the next pass: the prescreen order for the first, afterwards
/// pinned contingencies and those with r_k above epsilon_r, highest first.
std::vector<std::size_t> next_schedule(const grid::Network& net, const DecompState& state, const DecompParams& p);

/// Every contingency evaluated and every latest r_k below epsilon_r.
bool is_converged(const DecompState& state, const DecompParams& p);

/// Starts pass `state.pass + 1` with `schedule`.
void begin_pass(DecompState& state, std::vector<std::size_t> schedule);

/// Callbacks of the block-incremental loop. `evaluate` returns one entry per
/// contingency of the block, in block order; empty entries (failed tasks) are
/// skipped. `stop`, when set, ends the loop early.
struct LoopHooks {
  std::function<MasterResult(const SurrogateTable&, const MasterResult*)> master;
  std::function<std::vector<std::optional<Evaluation>>(std::span<const std::size_t>, const opf::OperatingPoint&,
                                                       std::uint64_t snapshot, int pass)>
      evaluate;
  std::function<bool()> stop;
};

/// Block-incremental loop: master solve, evaluate a block against the current
/// base, refit surrogates, repeat. Blocks hold params.block_size contingencies.
DecompState run_block_loop(const grid::Network& net, const DecompParams& params, const LoopHooks& hooks);

/// run_block_loop with the driver's calls made in sequence.
DecompState solve_scacopf(const Driver& driver, const DecompParams& params);

struct ContingencyOutcome {
  std::size_t contingency = 0;
  opf::OperatingPoint point;
  double relaxed_penalty = 0.0;
  bool relaxed_available = false;
  recovery::RecoveryResult recovery;
  bool recovered = false;
  /// Recovery failed; the copy-base point is used.
  bool fallback = false;
};

struct Report {
  opf::OperatingPoint base;
  std::vector<ContingencyOutcome> contingencies;
  opf::ScoreBreakdown score;
  /// Quadratic-mode score of the same points.
  opf::ScoreBreakdown score_quadratic;
  bool partial = false;
  std::vector<std::string> warnings;
};

/// Evaluates (and with `recover`, crushes) every contingency at the state's
/// base point, then scores the bundle with piecewise penalties. Work is spread
/// over `threads` threads.
Report full_report(const grid::Network& net, const DecompState& state, const DecompParams& params, bool recover,
                   std::size_t threads = 1);

}  // namespace scacopf::decomp
