#include "scacopf/exec/engine.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <json.hpp>

namespace scacopf::exec {

using decomp::DecompState;
using decomp::Evaluation;
using decomp::MasterResult;
using opf::OperatingPoint;

std::string_view to_string(Mode m) { return m == Mode::synchronous ? "sync" : "async"; }

Mode parse_mode(std::string_view s) {
  if (s == "sync" || s == "synchronous") return Mode::synchronous;
  if (s == "async" || s == "asynchronous") return Mode::asynchronous;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (expected sync or async)");
}

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::init: return "Init";
    case MessageKind::evaluate_contingency: return "EvaluateContingency";
    case MessageKind::recourse_reply: return "RecourseReply";
    case MessageKind::recourse_failure: return "RecourseFailure";
    case MessageKind::solve_start: return "SolveStart";
    case MessageKind::solve_complete: return "SolveComplete";
    case MessageKind::finalize: return "Finalize";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

struct Task {
  std::size_t contingency = 0;
  int pass = 0;
  int attempt = 1;
  std::uint64_t snapshot = 0;
  std::shared_ptr<const OperatingPoint> base;
  /// Position in the synchronous block.
  std::size_t slot = 0;
};

struct Reply {
  Task task;
  Evaluation eval;
  std::size_t worker = 0;
  bool failed = false;
};

std::string worker_name(std::size_t w) { return "worker-" + std::to_string(w); }

class WorkerPool {
 public:
  WorkerPool(const decomp::Driver& driver, const EngineConfig& cfg) : driver_(driver), cfg_(cfg) {}
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;
  ~WorkerPool() { shutdown(); }

  std::size_t spawn() {
    auto w = std::make_unique<Worker>();
    w->id = workers_.size();
    auto* raw = w.get();
    workers_.push_back(std::move(w));
    raw->thread = std::thread([this, raw] { loop(*raw); });
    return raw->id;
  }

  std::vector<std::size_t> alive() const {
    std::vector<std::size_t> out;
    for (const auto& w : workers_)
      if (!w->abandoned) out.push_back(w->id);
    return out;
  }

  std::optional<std::size_t> idle_worker() const {
    for (const auto& w : workers_)
      if (!w->abandoned && !w->busy) return w->id;
    return std::nullopt;
  }

  void dispatch(std::size_t id, Task t) {
    auto& w = *workers_.at(id);
    w.busy = true;
    w.started = Clock::now();
    w.current = t;
    {
      std::lock_guard lk(w.m);
      w.inbox = std::move(t);
    }
    w.cv.notify_one();
  }

  std::size_t in_flight() const {
    std::size_t n = 0;
    for (const auto& w : workers_) n += (!w->abandoned && w->busy);
    return n;
  }

  /// Waits up to `wait` for replies and returns all that arrived.
  std::vector<Reply> collect(std::chrono::duration<double> wait) {
    std::deque<Reply> got;
    {
      std::unique_lock lk(out_m_);
      out_cv_.wait_for(lk, wait, [&] { return !out_.empty(); });
      got.swap(out_);
    }
    std::vector<Reply> res;
    for (auto& r : got) {
      auto& w = *workers_[r.worker];
      if (w.abandoned) continue;
      w.busy = false;
      res.push_back(std::move(r));
    }
    return res;
  }

  /// Tasks running longer than the stall timeout. Their workers are abandoned
  /// and replaced.
  std::vector<std::pair<std::size_t, Task>> expire() {
    std::vector<std::pair<std::size_t, Task>> out;
    const auto now = Clock::now();
    const auto n = workers_.size();
    for (std::size_t i = 0; i < n; ++i) {
      auto& w = *workers_[i];
      if (w.abandoned || !w.busy || now - w.started < cfg_.stall_timeout) continue;
      {
        std::lock_guard lk(out_m_);
        w.abandoned = true;
      }
      w.busy = false;
      out.emplace_back(w.id, w.current);
      spawn();
    }
    return out;
  }

  /// Abandons every busy worker (budget expiry).
  void abandon_busy() {
    for (auto& w : workers_)
      if (w->busy && !w->abandoned) {
        std::lock_guard lk(out_m_);
        w->abandoned = true;
        w->busy = false;
      }
  }

  void shutdown() {
    if (stopping_.exchange(true)) return;
    for (auto& w : workers_) {
      std::lock_guard lk(w->m);
      w->cv.notify_all();
    }
    {
      std::lock_guard lk(stop_m_);
      stop_cv_.notify_all();
    }
    for (auto& w : workers_)
      if (w->thread.joinable()) w->thread.join();
  }

 private:
  struct Worker {
    std::size_t id = 0;
    std::thread thread;
    std::mutex m;
    std::condition_variable cv;
    std::optional<Task> inbox;
    // Master-side view.
    bool busy = false;
    bool abandoned = false;
    Clock::time_point started;
    Task current;
  };

  void loop(Worker& w) {
    for (;;) {
      Task t;
      {
        std::unique_lock lk(w.m);
        w.cv.wait(lk, [&] { return w.inbox.has_value() || stopping_; });
        if (!w.inbox) return;
        t = std::move(*w.inbox);
        w.inbox.reset();
      }
      if (cfg_.stall && cfg_.stall(t.contingency, t.attempt)) {
        std::unique_lock lk(stop_m_);
        stop_cv_.wait(lk, [&] { return stopping_.load(); });
        return;
      }
      Reply r;
      r.worker = w.id;
      try {
        r.eval = driver_.evaluate(t.contingency, *t.base);
      } catch (const std::exception&) {
        r.failed = true;
      }
      r.task = std::move(t);
      {
        std::lock_guard lk(out_m_);
        if (w.abandoned) continue;
        out_.push_back(std::move(r));
      }
      out_cv_.notify_all();
    }
  }

  const decomp::Driver& driver_;
  const EngineConfig& cfg_;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::mutex out_m_;
  std::condition_variable out_cv_;
  std::deque<Reply> out_;
  std::mutex stop_m_;
  std::condition_variable stop_cv_;
  std::atomic<bool> stopping_{false};
};

class Engine {
 public:
  Engine(const EngineConfig& cfg, const decomp::Driver& driver, decomp::DecompParams params)
      : cfg_(cfg), driver_(driver), net_(driver.network()), params_(std::move(params)), pool_(driver, cfg_) {
    if (cfg_.workers < 1) throw std::invalid_argument("engine needs at least one worker");
    if (!(cfg_.stall_timeout.count() > 0)) throw std::invalid_argument("stall timeout must be positive");
    if (!(cfg_.poll_period.count() > 0)) throw std::invalid_argument("poll period must be positive");
    if (cfg_.max_pending < 1) throw std::invalid_argument("max_pending must be at least 1");
    if (cfg_.budget && !(cfg_.budget->count() > 0)) throw std::invalid_argument("budget must be positive");
  }

  RunResult run() {
    for (std::size_t i = 0; i < cfg_.workers; ++i) {
      const auto w = pool_.spawn();
      log("master", worker_name(w), MessageKind::init, 0, std::nullopt, 0, 0);
    }
    RunResult out;
    out.state = cfg_.mode == Mode::synchronous ? run_sync() : run_async();
    for (auto w : pool_.alive()) log("master", worker_name(w), MessageKind::finalize, out.state.snapshot, std::nullopt, 0, 0);
    pool_.shutdown();
    out.log = std::move(log_);
    out.budget_expired = expired_;
    out.failures = failures_;
    out.seconds = elapsed();
    return out;
  }

 private:
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - t0_).count(); }

  bool over_budget() {
    if (!expired_ && cfg_.budget && elapsed() > cfg_.budget->count()) expired_ = true;
    return expired_;
  }

  void log(std::string from, std::string to, MessageKind kind, std::uint64_t snapshot,
           std::optional<std::size_t> contingency, int pass, int attempt, bool applied = true) {
    Message m;
    m.seq = log_.size();
    m.time = elapsed();
    m.from = std::move(from);
    m.to = std::move(to);
    m.kind = kind;
    m.snapshot = snapshot;
    m.contingency = contingency;
    m.pass = pass;
    m.attempt = attempt;
    m.applied = applied;
    log_.push_back(std::move(m));
  }

  void send(std::size_t worker, const Task& t) {
    log("master", worker_name(worker), MessageKind::evaluate_contingency, t.snapshot, t.contingency, t.pass, t.attempt);
    pool_.dispatch(worker, t);
  }

  /// First failure of a task: requeue at the front. Second: give up.
  /// Returns true when the task is settled as failed.
  bool fail(std::size_t worker, const Task& t, std::deque<Task>& queue) {
    log(worker_name(worker), "master", MessageKind::recourse_failure, t.snapshot, t.contingency, t.pass, t.attempt);
    if (t.attempt < 2) {
      auto again = t;
      again.attempt = t.attempt + 1;
      queue.push_front(std::move(again));
      return false;
    }
    ++failures_;
    return true;
  }

  DecompState run_sync() {
    auto params = params_;
    params.block_size = cfg_.workers;
    decomp::LoopHooks hooks;
    std::uint64_t solves = 0;
    hooks.master = [&](const decomp::SurrogateTable& table, const MasterResult* prev) {
      log("master", "solver", MessageKind::solve_start, solves, std::nullopt, 0, 0);
      auto r = driver_.solve_master(table, prev);
      ++solves;
      log("solver", "master", MessageKind::solve_complete, solves, std::nullopt, 0, 0);
      return r;
    };
    hooks.stop = [&] { return over_budget(); };
    hooks.evaluate = [&](std::span<const std::size_t> block, const OperatingPoint& base, std::uint64_t snapshot,
                         int pass) {
      std::vector<std::optional<Evaluation>> out(block.size());
      std::vector<std::optional<std::pair<std::size_t, Task>>> replied(block.size());
      auto shared = std::make_shared<const OperatingPoint>(base);
      std::deque<Task> queue;
      for (std::size_t i = 0; i < block.size(); ++i) queue.push_back({block[i], pass, 1, snapshot, shared, i});
      std::size_t settled = 0;
      while (settled < block.size()) {
        if (over_budget()) {
          pool_.abandon_busy();
          break;
        }
        while (!queue.empty()) {
          const auto w = pool_.idle_worker();
          if (!w) break;
          send(*w, queue.front());
          queue.pop_front();
        }
        for (auto& r : pool_.collect(cfg_.poll_period)) {
          if (r.failed) {
            settled += fail(r.worker, r.task, queue);
            continue;
          }
          replied[r.task.slot] = {r.worker, r.task};
          out[r.task.slot] = std::move(r.eval);
          ++settled;
        }
        for (auto& [w, t] : pool_.expire()) settled += fail(w, t, queue);
      }
      // Replies are applied, and logged, in schedule order.
      for (const auto& r : replied)
        if (r)
          log(worker_name(r->first), "master", MessageKind::recourse_reply, r->second.snapshot, r->second.contingency,
              r->second.pass, r->second.attempt);
      return out;
    };
    return decomp::run_block_loop(net_, params, hooks);
  }

  DecompState run_async() {
    const auto& p = params_;
    if (p.passes < 1 || p.max_iterations < 1)
      throw std::invalid_argument("passes and max_iterations must be at least 1");
    auto state = decomp::initial_state(net_);
    std::future<MasterResult> job;
    bool solving = false;
    std::size_t pending_high = 0, updates_since_solve = 0;
    std::shared_ptr<const OperatingPoint> base;

    auto start_solve = [&] {
      log("master", "solver", MessageKind::solve_start, state.snapshot, std::nullopt, state.pass, 0);
      std::optional<MasterResult> prev = state.master;
      job = std::async(std::launch::async, [this, table = state.surrogates, prev = std::move(prev)] {
        return driver_.solve_master(table, prev ? &*prev : nullptr);
      });
      solving = true;
      pending_high = 0;
      updates_since_solve = 0;
    };
    auto poll_solve = [&](bool wait) {
      if (!solving) return;
      if (!wait && job.wait_for(std::chrono::seconds(0)) != std::future_status::ready) return;
      decomp::apply_master(state, job.get());
      solving = false;
      base = std::make_shared<const OperatingPoint>(state.base);
      log("solver", "master", MessageKind::solve_complete, state.snapshot, std::nullopt, state.pass, 0);
    };

    start_solve();
    poll_solve(true);

    while (state.pass < p.passes && !state.converged && !over_budget()) {
      auto schedule = decomp::next_schedule(net_, state, p);
      if (schedule.empty()) {
        state.converged = decomp::is_converged(state, p);
        break;
      }
      decomp::begin_pass(state, schedule);
      std::deque<Task> queue;
      for (auto k : schedule) queue.push_back({k, state.pass, 1, 0, nullptr, 0});
      while ((!queue.empty() && !state.converged) || pool_.in_flight() > 0) {
        if (over_budget()) {
          pool_.abandon_busy();
          break;
        }
        while (!queue.empty() && !state.converged) {
          const auto w = pool_.idle_worker();
          if (!w) break;
          auto t = std::move(queue.front());
          queue.pop_front();
          t.snapshot = state.snapshot;
          t.base = base;
          send(*w, t);
        }
        for (auto& r : pool_.collect(cfg_.poll_period)) {
          if (r.failed) {
            fail(r.worker, r.task, queue);
            continue;
          }
          const bool fresh = !cfg_.max_staleness || state.snapshot - r.task.snapshot <= *cfg_.max_staleness;
          log(worker_name(r.worker), "master", MessageKind::recourse_reply, r.task.snapshot, r.task.contingency,
              r.task.pass, r.task.attempt, fresh);
          if (!fresh) {
            queue.push_front(r.task);
            continue;
          }
          r.eval.snapshot = r.task.snapshot;
          decomp::apply_evaluation(net_, state, r.eval, *r.task.base);
          ++updates_since_solve;
          if (r.eval.penalty >= p.epsilon_r) ++pending_high;
          state.converged = decomp::is_converged(state, p);
        }
        for (auto& [w, t] : pool_.expire()) fail(w, t, queue);
        poll_solve(false);
        if (!solving && pending_high >= cfg_.max_pending && state.iteration < p.max_iterations) start_solve();
      }
      if (expired_) break;
      // Pass boundary: the next schedule should see the updated base.
      poll_solve(true);
      if (updates_since_solve > 0 && !state.converged && state.iteration < p.max_iterations) {
        start_solve();
        poll_solve(true);
      }
    }
    poll_solve(true);
    return state;
  }

  const EngineConfig cfg_;
  const decomp::Driver& driver_;
  const grid::Network& net_;
  decomp::DecompParams params_;
  WorkerPool pool_;
  Clock::time_point t0_ = Clock::now();
  std::vector<Message> log_;
  bool expired_ = false;
  std::size_t failures_ = 0;
};

}  // namespace

RunResult run(const EngineConfig& config, const decomp::Driver& driver, decomp::DecompParams params) {
  Engine engine(config, driver, std::move(params));
  return engine.run();
}

std::string trace_ndjson(const std::vector<Message>& log, const grid::Network& net) {
  std::string out;
  for (const auto& m : log) {
    nlohmann::ordered_json j;
    j["seq"] = m.seq;
    j["time"] = m.time;
    j["from"] = m.from;
    j["to"] = m.to;
    j["kind"] = to_string(m.kind);
    j["snapshot"] = m.snapshot;
    if (m.contingency) j["contingency"] = net.contingencies.at(*m.contingency).id;
    out += j.dump();
    out += '\n';
  }
  return out;
}

AuditResult audit(const std::vector<Message>& log, const DecompState& state) {
  AuditResult res;
  auto problem = [&](std::string s) {
    res.ok = false;
    res.problems.push_back(std::move(s));
  };
  // Dispatch/answer balance per (worker, contingency, pass, attempt).
  std::map<std::tuple<std::string, std::size_t, int, int>, long> open;
  // Settlements per (pass, contingency).
  std::map<std::pair<int, std::size_t>, int> settled;
  for (const auto& m : log) {
    if (!m.contingency) continue;
    const auto k = *m.contingency;
    switch (m.kind) {
      case MessageKind::evaluate_contingency:
        ++open[{m.to, k, m.pass, m.attempt}];
        break;
      case MessageKind::recourse_reply:
        if (--open[{m.from, k, m.pass, m.attempt}] < 0) problem("reply without dispatch, seq " + std::to_string(m.seq));
        if (m.applied) ++settled[{m.pass, k}];
        break;
      case MessageKind::recourse_failure:
        if (--open[{m.from, k, m.pass, m.attempt}] < 0)
          problem("failure without dispatch, seq " + std::to_string(m.seq));
        if (m.attempt >= 2) ++settled[{m.pass, k}];
        break;
      default:
        break;
    }
  }
  for (const auto& [key, n] : open)
    if (n != 0) problem("unanswered dispatch of contingency " + std::to_string(std::get<1>(key)) + " to " + std::get<0>(key));
  for (const auto& pr : state.passes) {
    const bool truncated = state.converged && pr.pass == state.pass;
    for (auto k : pr.schedule) {
      const auto it = settled.find({pr.pass, k});
      const int n = it == settled.end() ? 0 : it->second;
      if (n > 1 || (n == 0 && !truncated))
        problem("pass " + std::to_string(pr.pass) + ": contingency " + std::to_string(k) + " settled " +
                std::to_string(n) + " times");
    }
  }
  for (const auto& [key, n] : settled) {
    const auto& [pass, k] = key;
    if (pass < 1 || pass > static_cast<int>(state.passes.size())) {
      problem("settlement in unknown pass " + std::to_string(pass));
      continue;
    }
    const auto& sched = state.passes[pass - 1].schedule;
    if (std::find(sched.begin(), sched.end(), k) == sched.end())
      problem("pass " + std::to_string(pass) + ": unscheduled contingency " + std::to_string(k) + " settled");
  }
  return res;
}

std::size_t overlapping_evaluations(const std::vector<Message>& log) {
  std::size_t n = 0;
  bool in_solve = false;
  for (const auto& m : log) {
    if (m.kind == MessageKind::solve_start) in_solve = true;
    else if (m.kind == MessageKind::solve_complete) in_solve = false;
    else if (in_solve && (m.kind == MessageKind::evaluate_contingency || m.kind == MessageKind::recourse_reply))
      ++n;
  }
  return n;
}

}  // namespace scacopf::exec
