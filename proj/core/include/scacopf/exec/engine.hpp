#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scacopf/decomp/decomp.hpp"

namespace scacopf::exec {

enum class Mode { synchronous, asynchronous };

std::string_view to_string(Mode m);
/// Throws std::invalid_argument for anything but "sync"/"synchronous" or
/// "async"/"asynchronous".
Mode parse_mode(std::string_view s);

enum class MessageKind {
  init,
  evaluate_contingency,
  recourse_reply,
  recourse_failure,
  solve_start,
  solve_complete,
  finalize,
};

std::string_view to_string(MessageKind k);

/// One entry of the engine trace. Only the master context appends, so `seq`
/// is a total order.
struct Message {
  std::uint64_t seq = 0;
  /// Seconds since the engine started.
  double time = 0.0;
  std::string from, to;
  MessageKind kind = MessageKind::init;
  /// Base-point snapshot the payload refers to.
  std::uint64_t snapshot = 0;
  std::optional<std::size_t> contingency;
  int pass = 0;
  /// 1 for the first dispatch of a task, 2 after a reassignment.
  int attempt = 0;
  /// Replies: false when rejected as too stale (the task is dispatched again).
  bool applied = true;
};

struct EngineConfig {
  std::size_t workers = 1;
  Mode mode = Mode::synchronous;
  /// A task running longer than this is reassigned once, then failed.
  std::chrono::duration<double> stall_timeout = std::chrono::seconds(120);
  /// High-penalty replies (r >= epsilon_r) that trigger an asynchronous master re-solve.
  std::size_t max_pending = 4;
  /// Wall-clock budget; on expiry the engine returns the state reached so far.
  std::optional<std::chrono::duration<double>> budget;
  std::chrono::duration<double> poll_period = std::chrono::milliseconds(1);
  /// Asynchronous mode: replies more than this many snapshots old are rejected.
  std::optional<std::uint64_t> max_staleness;
  /// Fault injection: called by a worker before evaluating (contingency, attempt);
  /// returning true makes the worker hang until shutdown.
  std::function<bool(std::size_t, int)> stall;
};

struct RunResult {
  decomp::DecompState state;
  std::vector<Message> log;
  bool budget_expired = false;
  /// Tasks that failed after reassignment.
  std::size_t failures = 0;
  double seconds = 0.0;
};

/// Runs the block-incremental decomposition with `config.workers` worker
/// threads. Synchronous mode evaluates blocks of W contingencies against the
/// same base and applies replies in schedule order; asynchronous mode keeps
/// every worker busy and re-solves the master on a separate solver thread.
RunResult run(const EngineConfig& config, const decomp::Driver& driver, decomp::DecompParams params);

/// Newline-delimited JSON, one object per message:
/// {seq, time, from, to, kind, snapshot, contingency?}. Contingencies are
/// written by id.
std::string trace_ndjson(const std::vector<Message>& log, const grid::Network& net);

struct AuditResult {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Bookkeeping checks on a log: every dispatch answered by exactly one reply
/// or failure, and per pass each scheduled contingency settled exactly once
/// (one applied reply or one failure).
AuditResult audit(const std::vector<Message>& log, const decomp::DecompState& state);

/// Dispatches or replies logged strictly inside a SolveStart..SolveComplete window.
std::size_t overlapping_evaluations(const std::vector<Message>& log);

}  // namespace scacopf::exec
