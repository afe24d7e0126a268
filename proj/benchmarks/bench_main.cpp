#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "scacopf/decomp/decomp.hpp"
#include "scacopf/exec/engine.hpp"
#include "scacopf/recovery/recovery.hpp"

using namespace scacopf;

namespace {

const grid::Network& case14() {
  static const auto net = grid::load_network(std::string(SCACOPF_DATA_DIR) + "/case14.json");
  return net;
}

const opf::OperatingPoint& case14_base() {
  static const auto base = [] {
    decomp::ScacopfDriver driver(case14(), {});
    return driver.solve_master(decomp::initial_surrogates(case14()), nullptr).base;
  }();
  return base;
}

void BM_MasterEval(benchmark::State& state) {
  const auto& net = case14();
  auto table = decomp::initial_surrogates(net);
  for (auto& s : table) s.coefficient = 1.0;
  auto terms = decomp::surrogate_terms(table);
  auto cp = opf::build_base_problem(net, terms);
  auto ws = cp.problem.make_workspace();
  std::vector<double> lambda(cp.problem.num_constraints(), 0.5);
  nlp::EvalResult out;
  for (auto _ : state) {
    cp.problem.eval(cp.start, lambda, 1.0, ws, out);
    benchmark::DoNotOptimize(out.f);
  }
}
BENCHMARK(BM_MasterEval);

void BM_MasterSolve(benchmark::State& state) {
  const auto& net = case14();
  decomp::ScacopfDriver driver(net, {});
  const auto table = decomp::initial_surrogates(net);
  for (auto _ : state) benchmark::DoNotOptimize(driver.solve_master(table, nullptr).ok);
}
BENCHMARK(BM_MasterSolve)->Unit(benchmark::kMillisecond);

void BM_ContingencyEvaluate(benchmark::State& state) {
  const auto& net = case14();
  decomp::ScacopfDriver driver(net, {});
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(driver.evaluate(k, case14_base()).penalty);
}
BENCHMARK(BM_ContingencyEvaluate)->Arg(0)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Recover(benchmark::State& state) {
  const auto& net = case14();
  decomp::ScacopfDriver driver(net, {});
  const auto approx = driver.evaluate(0, case14_base()).point;
  for (auto _ : state) benchmark::DoNotOptimize(recovery::recover_feasible(net, 0, case14_base(), approx).status);
}
BENCHMARK(BM_Recover)->Unit(benchmark::kMillisecond);

void BM_DeltaResponse(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<recovery::ResponseUnit> units(static_cast<std::size_t>(state.range(0)));
  double lo = 0, hi = 0, lo_sum = 0, hi_sum = 0;
  for (auto& r : units) {
    r = {u(rng), 1.0 + u(rng), 0.0, 1.0};
    lo = std::min(lo, -r.p0 / r.a);
    hi = std::max(hi, (1.0 - r.p0) / r.a);
    lo_sum -= r.p0;
    hi_sum += 1.0 - r.p0;
  }
  const double x = 0.3 * lo_sum + 0.7 * hi_sum;
  for (auto _ : state) benchmark::DoNotOptimize(recovery::delta_response(x, units, lo, hi));
}
BENCHMARK(BM_DeltaResponse)->Arg(4)->Arg(64);

void BM_Decomposition(benchmark::State& state) {
  const auto& net = case14();
  decomp::DecompParams p;
  p.passes = 1;
  decomp::ScacopfDriver driver(net, p);
  exec::EngineConfig c;
  c.workers = static_cast<std::size_t>(state.range(0));
  c.mode = state.range(1) ? exec::Mode::asynchronous : exec::Mode::synchronous;
  for (auto _ : state) benchmark::DoNotOptimize(exec::run(c, driver, p).state.iteration);
}
BENCHMARK(BM_Decomposition)->Args({1, 0})->Args({4, 0})->Args({4, 1})->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
