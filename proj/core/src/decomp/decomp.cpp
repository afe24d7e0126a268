#include "scacopf/decomp/decomp.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include "scacopf/opf/flows.hpp"

namespace scacopf::decomp {

using grid::ContingencyKind;
using grid::Network;
using opf::OperatingPoint;
using opf::SurrogateSite;

SurrogateTable initial_surrogates(const Network& net) {
  SurrogateTable table;
  for (std::size_t k = 0; k < net.contingencies.size(); ++k) {
    const auto& c = net.contingencies[k];
    RecourseSurrogate s;
    s.contingency = k;
    s.kind = c.kind;
    s.element = c.element_index;
    s.site = c.kind == ContingencyKind::generator ? SurrogateSite::generator : SurrogateSite::branch_from;
    table.push_back(s);
  }
  return table;
}

double apparent_power_squared(const Network& net, const RecourseSurrogate& s, const OperatingPoint& base,
                              SurrogateSite site) {
  if (site == SurrogateSite::generator) {
    const double p = base.p.at(s.element), q = base.q.at(s.element);
    return p * p + q * q;
  }
  const auto& e = net.branches.at(s.element);
  const auto f = opf::branch_flow(base.v.at(e.from), base.v.at(e.to), base.theta.at(e.from), base.theta.at(e.to), e);
  return site == SurrogateSite::branch_from ? f.p_from * f.p_from + f.q_from * f.q_from
                                            : f.p_to * f.p_to + f.q_to * f.q_to;
}

double surrogate_value(const Network& net, const RecourseSurrogate& s, const OperatingPoint& base) {
  const double a = apparent_power_squared(net, s, base, s.site);
  return s.coefficient * a * a;
}

void update_surrogate(const Network& net, RecourseSurrogate& s, double r, const OperatingPoint& base) {
  if (!(r >= 0.0) || !std::isfinite(r))
    throw std::invalid_argument("recourse value must be finite and nonnegative, got " + std::to_string(r));
  if (s.kind == ContingencyKind::branch) {
    const double from = apparent_power_squared(net, s, base, SurrogateSite::branch_from);
    const double to = apparent_power_squared(net, s, base, SurrogateSite::branch_to);
    s.site = to > from ? SurrogateSite::branch_to : SurrogateSite::branch_from;
  }
  const double a = apparent_power_squared(net, s, base, s.site);
  const double denom = a * a;
  s.pinned = false;
  if (denom < kZeroInjection) {
    // P is undefined here; the previous coefficient keeps the injection near zero.
    if (r == 0.0) s.coefficient = 0.0;
    s.pinned = r > 0.0;
    return;
  }
  s.coefficient = r / denom;
}

std::vector<opf::SurrogateTerm> surrogate_terms(const SurrogateTable& table) {
  std::vector<opf::SurrogateTerm> out;
  out.reserve(table.size());
  for (const auto& s : table) out.push_back({s.contingency, s.site, s.element, s.coefficient});
  return out;
}

std::vector<std::size_t> prescreen(const Network& net, std::size_t s_gen, std::size_t s_branch) {
  std::vector<std::size_t> gens, branches;
  for (std::size_t k = 0; k < net.contingencies.size(); ++k)
    (net.contingencies[k].kind == ContingencyKind::generator ? gens : branches).push_back(k);
  auto elem = [&](std::size_t k) { return net.contingencies[k].element_index; };
  std::stable_sort(gens.begin(), gens.end(), [&](std::size_t a, std::size_t b) {
    const auto& ga = net.generators[elem(a)];
    const auto& gb = net.generators[elem(b)];
    if (ga.p_max != gb.p_max) return ga.p_max > gb.p_max;
    const double qa = ga.q_max - ga.q_min, qb = gb.q_max - gb.q_min;
    if (qa != qb) return qa > qb;
    return net.contingencies[a].id < net.contingencies[b].id;
  });
  std::stable_sort(branches.begin(), branches.end(), [&](std::size_t a, std::size_t b) {
    const double ra = net.branches[elem(a)].rate_base, rb = net.branches[elem(b)].rate_base;
    if (ra != rb) return ra > rb;
    return net.contingencies[a].id < net.contingencies[b].id;
  });
  s_gen = std::min(s_gen, gens.size());
  s_branch = std::min(s_branch, branches.size());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::max(s_gen, s_branch); ++i) {
    if (i < s_gen) out.push_back(gens[i]);
    if (i < s_branch) out.push_back(branches[i]);
  }
  // Remaining outages: generators then branches, each in capacity order.
  out.insert(out.end(), gens.begin() + static_cast<long>(s_gen), gens.end());
  out.insert(out.end(), branches.begin() + static_cast<long>(s_branch), branches.end());
  return out;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

}  // namespace

MasterResult ScacopfDriver::solve_master(const SurrogateTable& table, const MasterResult* previous) const {
  const auto terms = surrogate_terms(table);
  auto cp = opf::build_base_problem(net_, terms);
  MasterResult out;
  if (previous && previous->ipm.x.size() == cp.problem.num_variables()) {
    auto opts = params_.ipm;
    opts.warm_start_mode = ipm::WarmStartMode::primal_dual;
    out.ipm = ipm::solve(cp.problem, ipm::warm_start_from(previous->ipm, cp.problem.space(), opts.warm_start_mode),
                         opts);
    if (out.ipm.converged()) {
      out.ok = true;
      out.base = opf::to_point(net_, cp.index, out.ipm.x, std::string(grid::kBaseCaseId));
      return out;
    }
    out.retried = true;
  }
  auto opts = params_.ipm;
  opts.warm_start_mode = ipm::WarmStartMode::cold;
  auto cold = ipm::solve(cp.problem, ipm::StartPoint{cp.start, {}, {}, {}, ipm::WarmStartMode::cold}, opts);
  cold.total_seconds += out.ipm.total_seconds;
  cold.eval_seconds += out.ipm.eval_seconds;
  // After a failed warm attempt keep whichever iterate is closer to feasible.
  if (!out.retried || cold.converged() || cold.constraint_violation <= out.ipm.constraint_violation)
    out.ipm = std::move(cold);
  out.ok = out.ipm.converged();
  out.base = opf::to_point(net_, cp.index, out.ipm.x, std::string(grid::kBaseCaseId));
  return out;
}

Evaluation ScacopfDriver::evaluate(std::size_t k, const OperatingPoint& base) const {
  const auto t0 = std::chrono::steady_clock::now();
  Evaluation e;
  e.contingency = k;
  const auto topo = grid::apply_contingency(net_, k);
  try {
    auto cp = opf::build_contingency_problem(net_, k, base, params_.epsilon);
    auto opts = params_.ipm;
    opts.warm_start_mode = ipm::WarmStartMode::cold;
    auto r = ipm::solve(cp.problem, ipm::StartPoint{cp.start, {}, {}, {}, ipm::WarmStartMode::cold}, opts);
    e.status = r.status;
    e.iterations = r.iterations;
    if (r.converged()) {
      e.point = opf::to_point(net_, cp.index, r.x, net_.contingencies[k].id);
      e.penalty = opf::case_penalty(net_, topo, e.point, opf::PenaltyMode::quadratic).total();
    } else {
      e.fallback = true;
    }
  } catch (const std::exception&) {
    e.fallback = true;
  }
  if (e.fallback) {
    e.point = opf::copy_base_point(net_, topo, base);
    e.penalty = opf::case_penalty(net_, topo, e.point, opf::PenaltyMode::quadratic).total();
  }
  e.seconds = seconds_since(t0);
  return e;
}

DecompState initial_state(const Network& net) {
  DecompState s;
  s.base = opf::empty_point(net, std::string(grid::kBaseCaseId));
  s.surrogates = initial_surrogates(net);
  const auto n = net.contingencies.size();
  s.latest_penalty.assign(n, 0.0);
  s.evaluated.assign(n, 0);
  s.evaluated_at.assign(n, -1);
  return s;
}

void apply_master(DecompState& state, MasterResult result) {
  ++state.iteration;
  ++state.snapshot;
  state.master_seconds += result.ipm.total_seconds;
  state.master_eval_seconds += result.ipm.eval_seconds;
  if (!result.ok) state.master_failed = true;
  // A failed solve only replaces the base when nothing better exists.
  if (result.ok || !state.master || !state.master->ok) state.base = result.base;
  state.master = std::move(result);
}

void apply_evaluation(const Network& net, DecompState& state, const Evaluation& e, const OperatingPoint& base) {
  const auto k = e.contingency;
  auto& s = state.surrogates.at(k);
  update_surrogate(net, s, e.penalty, base);
  state.latest_penalty[k] = e.penalty;
  state.evaluated[k] = 1;
  state.evaluated_at[k] = state.iteration;
  UpdateRecord rec;
  rec.contingency = k;
  rec.pass = state.pass;
  rec.snapshot = e.snapshot;
  rec.penalty = e.penalty;
  rec.coefficient = s.coefficient;
  rec.value_at_update = surrogate_value(net, s, base);
  rec.value_at_zero = surrogate_formula(s.coefficient, 0.0, 0.0);
  rec.pinned = s.pinned;
  state.updates.push_back(rec);
  if (!state.passes.empty() && state.passes.back().pass == state.pass) state.passes.back().penalties[k] = e.penalty;
}

std::vector<std::size_t> next_schedule(const Network& net, const DecompState& state, const DecompParams& p) {
  if (state.pass == 0) return prescreen(net, p.prescreen_gen, p.prescreen_branch);
  std::vector<std::size_t> unevaluated, hot;
  for (auto k : prescreen(net, p.prescreen_gen, p.prescreen_branch)) {
    if (!state.evaluated[k])
      unevaluated.push_back(k);
    else if (state.latest_penalty[k] >= p.epsilon_r || state.surrogates[k].pinned)
      hot.push_back(k);
  }
  std::stable_sort(hot.begin(), hot.end(),
                   [&](std::size_t a, std::size_t b) { return state.latest_penalty[a] > state.latest_penalty[b]; });
  unevaluated.insert(unevaluated.end(), hot.begin(), hot.end());
  return unevaluated;
}

bool is_converged(const DecompState& state, const DecompParams& p) {
  for (std::size_t k = 0; k < state.evaluated.size(); ++k)
    if (!state.evaluated[k] || state.latest_penalty[k] >= p.epsilon_r) return false;
  return true;
}

void begin_pass(DecompState& state, std::vector<std::size_t> schedule) {
  ++state.pass;
  PassRecord rec;
  rec.pass = state.pass;
  rec.schedule = std::move(schedule);
  rec.base = state.base;
  rec.snapshot = state.snapshot;
  state.passes.push_back(std::move(rec));
}

DecompState run_block_loop(const Network& net, const DecompParams& params, const LoopHooks& hooks) {
  if (params.passes < 1 || params.max_iterations < 1 || params.block_size < 1)
    throw std::invalid_argument("passes, max_iterations and block_size must be at least 1");
  auto state = initial_state(net);
  auto stop = [&] { return hooks.stop && hooks.stop(); };
  apply_master(state, hooks.master(state.surrogates, nullptr));
  bool stale = false;
  auto refresh = [&] {
    if (!stale) return true;
    if (state.iteration >= params.max_iterations || stop()) return false;
    apply_master(state, hooks.master(state.surrogates, &*state.master));
    stale = false;
    return true;
  };
  while (state.pass < params.passes && !state.converged) {
    auto schedule = next_schedule(net, state, params);
    if (schedule.empty()) {
      state.converged = is_converged(state, params);
      break;
    }
    if (!refresh()) break;
    begin_pass(state, schedule);
    for (std::size_t i = 0; i < schedule.size() && !state.converged; i += params.block_size) {
      if (!refresh() || stop()) return state;
      const auto base = state.base;
      const auto end = std::min(schedule.size(), i + params.block_size);
      const std::span<const std::size_t> block(schedule.data() + i, end - i);
      auto results = hooks.evaluate(block, base, state.snapshot, state.pass);
      for (auto& e : results) {
        if (!e) continue;
        e->snapshot = state.snapshot;
        apply_evaluation(net, state, *e, base);
      }
      stale = true;
      state.converged = is_converged(state, params);
    }
  }
  if (stale && !state.converged && state.iteration < params.max_iterations && !stop())
    apply_master(state, hooks.master(state.surrogates, &*state.master));
  return state;
}

DecompState solve_scacopf(const Driver& driver, const DecompParams& params) {
  LoopHooks hooks;
  hooks.master = [&](const SurrogateTable& t, const MasterResult* prev) { return driver.solve_master(t, prev); };
  hooks.evaluate = [&](std::span<const std::size_t> block, const OperatingPoint& base, std::uint64_t, int) {
    std::vector<std::optional<Evaluation>> out;
    for (auto k : block) out.emplace_back(driver.evaluate(k, base));
    return out;
  };
  return run_block_loop(driver.network(), params, hooks);
}

Report full_report(const Network& net, const DecompState& state, const DecompParams& params, bool recover,
                   std::size_t threads) {
  Report rep;
  rep.base = state.base;
  const auto n = net.contingencies.size();
  rep.contingencies.resize(n);
  ScacopfDriver driver(net, params);
  auto work = [&](std::size_t k) {
    auto& out = rep.contingencies[k];
    out.contingency = k;
    const auto topo = grid::apply_contingency(net, k);
    auto e = driver.evaluate(k, state.base);
    out.relaxed_available = !e.fallback;
    out.relaxed_penalty = e.penalty;
    out.point = e.point;
    if (!recover) return;
    recovery::RecoveryOptions ro;
    ro.epsilon_q = params.epsilon_q;
    ro.ipm = params.ipm;
    try {
      out.recovery = recovery::recover_feasible(net, k, state.base, e.point, ro);
      out.recovered = true;
      out.fallback = out.recovery.fallback;
      out.point = out.recovery.point;
    } catch (const std::exception&) {
      out.fallback = true;
      out.point = opf::copy_base_point(net, topo, state.base);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t k = 0; k < n; ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) work(k);
      });
    for (auto& t : pool) t.join();
  }
  std::map<std::string, OperatingPoint> points;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& c = rep.contingencies[k];
    points.emplace(net.contingencies[k].id, c.point);
    if (c.fallback) rep.warnings.push_back("contingency " + net.contingencies[k].id + ": recovery fell back to the base copy");
    else if (!c.relaxed_available)
      rep.warnings.push_back("contingency " + net.contingencies[k].id + ": relaxed subproblem did not converge");
  }
  rep.score = opf::score_solution(net, state.base, points, opf::PenaltyMode::piecewise);
  rep.score_quadratic = opf::score_solution(net, state.base, points, opf::PenaltyMode::quadratic);
  for (std::size_t k = 0; k < n; ++k)
    if (!state.evaluated.empty() && !state.evaluated[k]) {
      rep.partial = true;
      rep.warnings.push_back("contingency " + net.contingencies[k].id + " was never evaluated by the decomposition");
    }
  if (state.master_failed && (!state.master || !state.master->ok)) {
    rep.partial = true;
    rep.warnings.push_back("final master solve did not converge");
  }
  return rep;
}

}  // namespace scacopf::decomp
