#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "scacopf/opf/solution_io.hpp"

namespace scacopf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string site_name(opf::SurrogateSite s) {
  switch (s) {
    case opf::SurrogateSite::generator: return "generator";
    case opf::SurrogateSite::branch_from: return "branch_from";
    case opf::SurrogateSite::branch_to: return "branch_to";
  }
  return "?";
}

decomp::DecompParams with_logging(const RunConfig& c, std::ostream& err) {
  auto p = c.params;
  if (c.verbose) p.ipm.log = [&err](std::string_view line) { err << line << '\n'; };
  return p;
}

// Loads the network and validates the config; prints the reason on failure.
std::optional<grid::Network> load(const RunConfig& c, std::ostream& err) {
  try {
    validate(c);
    return grid::load_network(c.network);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return std::nullopt;
  }
}

std::optional<std::size_t> find_contingency(const grid::Network& net, const std::string& id, std::ostream& err) {
  auto k = net.contingency_index(id);
  if (!k) err << "error: unknown contingency '" << id << "'\n";
  return k;
}

void print_breakdown(const opf::ScoreBreakdown& s, std::ostream& out) {
  const char* mode = s.mode == opf::PenaltyMode::piecewise ? "piecewise" : "quadratic";
  out << "objective (" << mode << "): " << fmt(s.total) << '\n';
  out << "  generation cost:    " << fmt(s.generation_cost) << '\n';
  out << "  base penalty:       " << fmt(s.base_penalty.total()) << "  (thermal " << fmt(s.base_penalty.thermal)
      << ", active " << fmt(s.base_penalty.active) << ", reactive " << fmt(s.base_penalty.reactive) << ")\n";
  out << "  contingency weight: " << fmt(s.contingency_weight) << '\n';
  out << "  contingency sum:    " << fmt(s.contingency_total()) << '\n';
  for (const auto& c : s.contingencies) {
    out << "    " << c.id << ": ";
    if (c.present)
      out << fmt(c.penalty.total()) << "  (thermal " << fmt(c.penalty.thermal) << ", active " << fmt(c.penalty.active)
          << ", reactive " << fmt(c.penalty.reactive) << ")\n";
    else
      out << "missing\n";
  }
}

opf::OperatingPoint read_base(const grid::Network& net, const RunConfig& c) {
  return opf::load_solution(net, c.out / opf::solution_file_name(grid::kBaseCaseId));
}

}  // namespace

void validate(const RunConfig& c) {
  const auto& p = c.params;
  if (!(p.epsilon >= 0.0)) throw std::invalid_argument("--epsilon must be >= 0");
  if (!(p.epsilon_q > 0.0)) throw std::invalid_argument("--epsilon-q must be > 0");
  if (!(p.epsilon_r >= 0.0)) throw std::invalid_argument("--epsilon-r must be >= 0");
  if (p.passes < 1) throw std::invalid_argument("--passes must be >= 1");
  if (c.workers < 1) throw std::invalid_argument("--workers must be >= 1");
  if (c.budget_seconds && !(*c.budget_seconds > 0.0)) throw std::invalid_argument("--budget-seconds must be > 0");
}

int cmd_solve(const RunConfig& c, std::ostream& out, std::ostream& err) {
  auto net = load(c, err);
  if (!net) return kLoadFailure;
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) {
    err << "error: cannot create " << c.out << ": " << ec.message() << '\n';
    return kLoadFailure;
  }
  const auto params = with_logging(c, err);
  decomp::ScacopfDriver driver(*net, params);
  exec::EngineConfig ec_cfg;
  ec_cfg.workers = c.workers;
  ec_cfg.mode = c.mode;
  if (c.budget_seconds) ec_cfg.budget = std::chrono::duration<double>(*c.budget_seconds);
  const auto t0 = std::chrono::steady_clock::now();
  const auto run = exec::run(ec_cfg, driver, params);
  const auto report = decomp::full_report(*net, run.state, params, true, c.workers);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto& s = run.state;
  opf::write_file_atomic(c.out / opf::solution_file_name(grid::kBaseCaseId),
                         opf::solution_to_json(*net, report.base, &report.score.base_penalty));
  for (std::size_t k = 0; k < net->contingencies.size(); ++k) {
    const auto& pen = report.score.contingencies[k].penalty;
    opf::write_file_atomic(c.out / opf::solution_file_name(net->contingencies[k].id),
                           opf::solution_to_json(*net, report.contingencies[k].point, &pen));
  }

  json doc;
  doc["objective"] = report.score.total;
  doc["score"] = json::parse(opf::breakdown_to_json(report.score));
  doc["score_quadratic"] = json::parse(opf::breakdown_to_json(report.score_quadratic));
  doc["partial"] = report.partial || run.budget_expired || run.failures > 0;
  doc["warnings"] = report.warnings;
  doc["mode"] = std::string(exec::to_string(c.mode));
  doc["workers"] = c.workers;
  doc["passes"] = s.pass;
  doc["master_solves"] = s.iteration;
  doc["converged"] = s.converged;
  doc["budget_expired"] = run.budget_expired;
  doc["failed_tasks"] = run.failures;
  doc["decomposition_seconds"] = run.seconds;
  doc["seconds"] = seconds;
  doc["master_seconds"] = s.master_seconds;
  doc["master_evaluation_seconds"] = s.master_eval_seconds;
  doc["master_evaluation_share"] = s.master_seconds > 0.0 ? s.master_eval_seconds / s.master_seconds : 0.0;
  json table = json::array();
  for (const auto& r : s.surrogates) {
    table.push_back({{"contingency", net->contingencies[r.contingency].id},
                     {"site", site_name(r.site)},
                     {"coefficient", r.coefficient},
                     {"pinned", r.pinned},
                     {"latest_penalty", s.latest_penalty[r.contingency]},
                     {"evaluated", s.evaluated[r.contingency] != 0}});
  }
  doc["surrogates"] = std::move(table);
  json cs = json::array();
  for (const auto& o : report.contingencies) {
    cs.push_back({{"id", net->contingencies[o.contingency].id},
                  {"relaxed_penalty", o.relaxed_penalty},
                  {"relaxed_converged", o.relaxed_available},
                  {"recovered", o.recovered},
                  {"fallback", o.fallback},
                  {"recovery_status", std::string(ipm::to_string(o.recovery.status))},
                  {"constraint_violation", o.recovery.constraint_violation}});
  }
  doc["contingencies"] = std::move(cs);
  opf::write_file_atomic(c.out / "report.json", doc.dump(2) + "\n");
  opf::write_file_atomic(c.out / "trace.ndjson", exec::trace_ndjson(run.log, *net));

  out << "objective: " << fmt(report.score.total) << '\n';
  out << "quadratic: " << fmt(report.score_quadratic.total) << '\n';
  out << "passes: " << s.pass << "  master solves: " << s.iteration << "  converged: " << (s.converged ? "yes" : "no")
      << "  seconds: " << fmt(seconds) << '\n';
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  if (doc["partial"].get<bool>()) {
    if (run.budget_expired) err << "warning: time budget expired\n";
    if (run.failures) err << "warning: " << run.failures << " evaluation task(s) failed\n";
    return kPartial;
  }
  return kOk;
}

int cmd_score(const RunConfig& c, const std::vector<fs::path>& files_in, std::ostream& out, std::ostream& err) {
  auto net = load(c, err);
  if (!net) return kLoadFailure;
  auto files = files_in;
  if (files.empty()) {
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(c.out, ec)) {
      const auto name = entry.path().filename().string();
      if (entry.is_regular_file() && name.starts_with("solution_") && name.ends_with(".json"))
        files.push_back(entry.path());
    }
    if (ec) {
      err << "error: cannot list " << c.out << ": " << ec.message() << '\n';
      return kLoadFailure;
    }
    std::sort(files.begin(), files.end());
  }
  std::optional<opf::OperatingPoint> base;
  std::map<std::string, opf::OperatingPoint> points;
  try {
    for (const auto& f : files) {
      auto pt = opf::load_solution(*net, f);
      if (pt.case_id == grid::kBaseCaseId) {
        if (base) throw opf::SolutionError("two base-case solutions given");
        base = std::move(pt);
      } else {
        auto id = pt.case_id;
        if (!points.emplace(id, std::move(pt)).second) throw opf::SolutionError("two solutions for case '" + id + "'");
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kLoadFailure;
  }
  if (!base) {
    err << "error: no base-case solution among the inputs\n";
    return kLoadFailure;
  }
  const auto pw = opf::score_solution(*net, *base, points, opf::PenaltyMode::piecewise);
  const auto qd = opf::score_solution(*net, *base, points, opf::PenaltyMode::quadratic);
  print_breakdown(pw, out);
  print_breakdown(qd, out);
  for (const auto& d : pw.diagnostics) out << "diagnostic: " << d << '\n';
  return pw.partial ? kPartial : kOk;
}

std::vector<NamedReport> derivative_suite(const grid::Network& net, const opf::OperatingPoint& base, int points,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<NamedReport> out;
  auto sample = [&](const std::string& name, const opf::CaseProblem& cp) {
    for (int i = 0; i < points; ++i) {
      const auto x = nlp::random_interior(cp.problem, cp.start, rng());
      out.push_back({name, nlp::check_derivatives(cp.problem, x, rng())});
    }
  };
  sample("base", opf::build_base_problem(net, {}));
  if (!net.contingencies.empty()) {
    std::uniform_real_distribution<double> coef(0.1, 10.0);
    std::vector<opf::SurrogateTerm> terms;
    for (const auto& s : decomp::initial_surrogates(net)) terms.push_back({s.contingency, s.site, s.element, coef(rng)});
    // Exercise the to-side site as well.
    for (auto& t : terms)
      if (t.site == opf::SurrogateSite::branch_from && t.contingency % 2) t.site = opf::SurrogateSite::branch_to;
    sample("base+surrogates", opf::build_base_problem(net, terms));
  }
  for (std::size_t k = 0; k < net.contingencies.size(); ++k) {
    const auto& id = net.contingencies[k].id;
    sample("contingency " + id, opf::build_contingency_problem(net, k, base));
    opf::RestrictedCanvas canvas(net, k, base);
    const auto topo = grid::apply_contingency(net, k);
    for (auto g : topo.generators)
      if (net.generators[g].drop_const > 0.0) canvas.add_response(g, base.p[g]);
    sample("canvas " + id, canvas.finalize());
  }
  return out;
}

int cmd_check(const RunConfig& c, std::ostream& out, std::ostream& err) {
  auto net = load(c, err);
  if (!net) return kLoadFailure;
  bool ok = true;
  auto row = [&](bool pass, const std::string& name, const std::string& detail) {
    ok = ok && pass;
    out << (pass ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
  };

  const auto params = with_logging(c, err);
  decomp::ScacopfDriver driver(*net, params);
  const auto master = driver.solve_master(decomp::initial_surrogates(*net), nullptr);
  row(master.ok, "base ACOPF", std::string(ipm::to_string(master.ipm.status)));

  // Derivatives, worst point per problem.
  std::map<std::string, nlp::DerivativeReport> worst;
  std::vector<std::string> order;
  for (auto& r : derivative_suite(*net, master.base, 10, c.seed)) {
    auto it = worst.find(r.problem);
    if (it == worst.end()) {
      order.push_back(r.problem);
      worst.emplace(r.problem, std::move(r.report));
    } else if (it->second.passed() && (!r.report.passed() || r.report.max_error() > it->second.max_error())) {
      it->second = std::move(r.report);
    }
  }
  for (const auto& name : order) {
    const auto& rep = worst.at(name);
    row(rep.passed(), "derivatives " + name, "max rel err " + fmt(rep.max_error()));
    if (!rep.passed()) out << rep.to_string();
  }

  // Quadratic penalty fit matches the curve's slopes.
  for (const auto* curve : {&net->penalty_s, &net->penalty_p, &net->penalty_q}) {
    const auto fit = opf::quad_penalty_fit(*curve);
    const double e0 = std::abs(fit.derivative(0.0) - curve->slope1) / curve->slope1;
    const double e1 = std::abs(fit.derivative(curve->bin1_width) - curve->slope2) / curve->slope2;
    row(e0 < 1e-12 && e1 < 1e-12, "penalty fit", "slope errors " + fmt(e0) + ", " + fmt(e1));
  }

  std::mt19937_64 rng(c.seed);
  // Drop response hits its target.
  double worst_delta = 0.0;
  for (std::size_t k = 0; k < net->contingencies.size(); ++k) {
    const auto topo = grid::apply_contingency(*net, k);
    const auto units = recovery::response_units(*net, topo, master.base.p);
    if (units.empty()) continue;
    double lo = 0.0, hi = 0.0;
    for (const auto& u : units) {
      lo += u.p_min - u.p0;
      hi += u.p_max - u.p0;
    }
    std::uniform_real_distribution<double> x(lo, hi);
    for (int i = 0; i < 20; ++i) {
      const double target = x(rng);
      const double d = recovery::delta_response(target, *net, topo, master.base.p);
      worst_delta = std::max(worst_delta, std::abs(recovery::response_total(d, units) - target));
    }
  }
  row(worst_delta <= 1e-9, "drop response", "max |response - target| " + fmt(worst_delta));

  // Surrogate refit reproduces r and vanishes at zero injection.
  double worst_fit = 0.0;
  auto zero = master.base;
  std::fill(zero.p.begin(), zero.p.end(), 0.0);
  std::fill(zero.q.begin(), zero.q.end(), 0.0);
  std::fill(zero.v.begin(), zero.v.end(), 0.0);
  std::uniform_real_distribution<double> rdist(0.0, 1e3);
  bool zero_ok = true;
  for (auto s : decomp::initial_surrogates(*net)) {
    const double r = rdist(rng);
    decomp::update_surrogate(*net, s, r, master.base);
    if (s.pinned) continue;
    worst_fit = std::max(worst_fit, std::abs(decomp::surrogate_value(*net, s, master.base) - r) / std::max(1.0, r));
    zero_ok = zero_ok && decomp::surrogate_value(*net, s, zero) == 0.0;
  }
  row(worst_fit <= 1e-10 && zero_ok, "surrogate refit", "max rel err " + fmt(worst_fit));

  // Copy-base points are feasible for the relaxed subproblems at epsilon = 0.
  double worst_violation = 0.0;
  for (std::size_t k = 0; k < net->contingencies.size(); ++k) {
    auto cp = opf::build_contingency_problem(*net, k, master.base, 0.0);
    std::vector<double> r(cp.problem.num_constraints()), lo(r.size()), hi(r.size());
    cp.problem.residuals(cp.start, r);
    cp.problem.constraint_bounds(lo, hi);
    for (std::size_t i = 0; i < r.size(); ++i)
      worst_violation = std::max({worst_violation, lo[i] - r[i], r[i] - hi[i]});
  }
  row(worst_violation <= 1e-8, "copy-base feasibility", "max violation " + fmt(worst_violation));
  return ok ? kOk : kLoadFailure;
}

int cmd_evaluate(const RunConfig& c, const std::string& id, std::ostream& out, std::ostream& err) {
  auto net = load(c, err);
  if (!net) return kLoadFailure;
  const auto k = find_contingency(*net, id, err);
  if (!k) return kLoadFailure;
  opf::OperatingPoint base;
  try {
    base = read_base(*net, c);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kLoadFailure;
  }
  decomp::ScacopfDriver driver(*net, with_logging(c, err));
  const auto e = driver.evaluate(*k, base);
  const auto topo = grid::apply_contingency(*net, *k);
  const auto pen = opf::case_penalty(*net, topo, e.point, opf::PenaltyMode::quadratic);
  opf::write_file_atomic(c.out / ("relaxed_" + id + ".json"), opf::solution_to_json(*net, e.point, &pen));
  out << "contingency: " << id << '\n';
  out << "status: " << ipm::to_string(e.status) << "  iterations: " << e.iterations << '\n';
  out << "relaxed penalty: " << fmt(e.penalty) << '\n';
  if (e.fallback) {
    err << "warning: subproblem did not converge; the copy-base point was written\n";
    return kPartial;
  }
  return kOk;
}

int cmd_recover(const RunConfig& c, const std::string& id, std::ostream& out, std::ostream& err) {
  auto net = load(c, err);
  if (!net) return kLoadFailure;
  const auto k = find_contingency(*net, id, err);
  if (!k) return kLoadFailure;
  const auto params = with_logging(c, err);
  opf::OperatingPoint base, approx;
  try {
    base = read_base(*net, c);
    const auto relaxed = c.out / ("relaxed_" + id + ".json");
    if (fs::exists(relaxed)) {
      approx = opf::load_solution(*net, relaxed);
      if (approx.case_id != id) throw opf::SolutionError(relaxed.string() + " holds case '" + approx.case_id + "'");
    } else {
      approx = decomp::ScacopfDriver(*net, params).evaluate(*k, base).point;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kLoadFailure;
  }
  recovery::RecoveryOptions ro;
  ro.epsilon_q = params.epsilon_q;
  ro.ipm = params.ipm;
  const auto r = recovery::recover_feasible(*net, *k, base, approx, ro);
  const auto topo = grid::apply_contingency(*net, *k);
  const auto pen = opf::case_penalty(*net, topo, r.point, opf::PenaltyMode::piecewise);
  opf::write_file_atomic(c.out / opf::solution_file_name(id), opf::solution_to_json(*net, r.point, &pen));
  const auto res = recovery::coupling_residuals(*net, topo, base, r.point);
  out << "contingency: " << id << '\n';
  out << "status: " << ipm::to_string(r.status) << "  iterations: " << r.iterations << (r.retried ? " (retried)" : "")
      << '\n';
  out << "penalty: " << fmt(pen.total()) << '\n';
  out << "complementarity residual: " << fmt(res.max()) << '\n';
  out << "constraint violation: " << fmt(r.constraint_violation) << '\n';
  if (r.fallback) {
    err << "warning: recovery fell back to the base copy\n";
    return kPartial;
  }
  return kOk;
}

}  // namespace scacopf::cli
