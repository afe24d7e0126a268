#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <cstring>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "../support/fake_driver.hpp"
#include "scacopf/decomp/decomp.hpp"
#include "scacopf/exec/engine.hpp"

using namespace scacopf;
using namespace std::chrono_literals;

namespace {

const std::string kData = SCACOPF_DATA_DIR;

grid::Network case14() { return grid::load_network(kData + "/case14.json"); }

void expect_same_tables(const decomp::SurrogateTable& a, const decomp::SurrogateTable& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    // Bitwise: no tolerance.
    EXPECT_EQ(std::memcmp(&a[k].coefficient, &b[k].coefficient, sizeof(double)), 0) << k;
    EXPECT_EQ(a[k].site, b[k].site) << k;
    EXPECT_EQ(a[k].pinned, b[k].pinned) << k;
  }
}

std::string shape(const std::vector<exec::Message>& log) {
  std::ostringstream os;
  for (const auto& m : log) {
    os << m.seq << ' ' << m.from << ' ' << m.to << ' ' << exec::to_string(m.kind) << ' ' << m.snapshot << ' '
       << (m.contingency ? static_cast<long>(*m.contingency) : -1) << ' ' << m.pass << ' ' << m.attempt << '\n';
  }
  return os.str();
}

}  // namespace

TEST(Mode, Parse) {
  EXPECT_EQ(exec::parse_mode("sync"), exec::Mode::synchronous);
  EXPECT_EQ(exec::parse_mode("asynchronous"), exec::Mode::asynchronous);
  EXPECT_THROW(exec::parse_mode("fast"), std::invalid_argument);
}

TEST(Engine, RejectsBadConfig) {
  auto net = case14();
  fake::Driver driver(net);
  exec::EngineConfig c;
  c.workers = 0;
  EXPECT_THROW(exec::run(c, driver, {}), std::invalid_argument);
  c.workers = 1;
  c.stall_timeout = 0s;
  EXPECT_THROW(exec::run(c, driver, {}), std::invalid_argument);
}

TEST(Sync, SingleWorkerMatchesSequentialOnFake) {
  auto net = case14();
  fake::Driver driver(net);
  decomp::DecompParams p;
  p.passes = 4;
  const auto seq = decomp::solve_scacopf(driver, p);
  exec::EngineConfig c;
  const auto res = exec::run(c, driver, p);
  expect_same_tables(res.state.surrogates, seq.surrogates);
  EXPECT_EQ(res.state.iteration, seq.iteration);
  ASSERT_EQ(res.state.updates.size(), seq.updates.size());
  for (std::size_t i = 0; i < seq.updates.size(); ++i)
    EXPECT_EQ(res.state.updates[i].contingency, seq.updates[i].contingency);
  EXPECT_TRUE(exec::audit(res.log, res.state).ok);
}

TEST(Sync, SingleWorkerMatchesSequentialOnHedge) {
  const auto net = grid::load_network(kData + "/hedge3.json");
  decomp::DecompParams p;
  p.passes = 3;
  decomp::ScacopfDriver driver(net, p);
  const auto seq = decomp::solve_scacopf(driver, p);
  const auto res = exec::run({}, driver, p);
  expect_same_tables(res.state.surrogates, seq.surrogates);
  EXPECT_EQ(res.state.base.p, seq.base.p);
}

TEST(Sync, TraceIsDeterministic) {
  auto net = case14();
  fake::Driver driver(net, 200us);
  decomp::DecompParams p;
  p.passes = 2;
  exec::EngineConfig c;
  c.workers = 3;
  const auto a = exec::run(c, driver, p);
  const auto b = exec::run(c, driver, p);
  EXPECT_EQ(shape(a.log), shape(b.log));
  expect_same_tables(a.state.surrogates, b.state.surrogates);
}

TEST(Sync, BlocksOfWorkerCount) {
  auto net = case14();
  fake::Driver driver(net);
  decomp::DecompParams p;
  p.passes = 1;
  exec::EngineConfig c;
  c.workers = 4;
  const auto res = exec::run(c, driver, p);
  // One initial master, one per block of 4 after the first, one final.
  EXPECT_EQ(res.state.iteration, 1 + 5 + 1);
  EXPECT_TRUE(exec::audit(res.log, res.state).ok);
}

TEST(Async, EvaluatesEachContingencyOncePerPass) {
  auto net = case14();
  fake::Driver driver(net, 500us, 5ms);
  decomp::DecompParams p;
  p.passes = 3;
  exec::EngineConfig c;
  c.workers = 4;
  c.mode = exec::Mode::asynchronous;
  const auto res = exec::run(c, driver, p);
  const auto a = exec::audit(res.log, res.state);
  for (const auto& s : a.problems) ADD_FAILURE() << s;
  EXPECT_EQ(res.state.pass, 3);
  EXPECT_GE(exec::overlapping_evaluations(res.log), 1u);
  for (auto e : res.state.evaluated) EXPECT_TRUE(e);
  bool stale = false;
  for (const auto& u : res.state.updates) stale = stale || u.snapshot < res.state.snapshot - 1;
  EXPECT_TRUE(stale);
  for (const auto& s : res.state.surrogates) EXPECT_GE(s.coefficient, 0.0);
}

TEST(Async, StaleRepliesCanBeRejected) {
  auto net = case14();
  // Solves finish while evaluations are in flight.
  fake::Driver driver(net, 3ms, 1ms);
  decomp::DecompParams p;
  p.passes = 2;
  exec::EngineConfig c;
  c.workers = 4;
  c.mode = exec::Mode::asynchronous;
  c.max_staleness = 0;
  c.max_pending = 1;
  const auto res = exec::run(c, driver, p);
  EXPECT_TRUE(exec::audit(res.log, res.state).ok);
  std::size_t rejected = 0;
  for (const auto& m : res.log) rejected += m.kind == exec::MessageKind::recourse_reply && !m.applied;
  EXPECT_GT(rejected, 0u);
}

TEST(Stall, FirstAttemptIsReassigned) {
  auto net = case14();
  fake::Driver driver(net);
  for (auto mode : {exec::Mode::synchronous, exec::Mode::asynchronous}) {
    decomp::DecompParams p;
    p.passes = 1;
    exec::EngineConfig c;
    c.workers = 2;
    c.mode = mode;
    c.stall_timeout = 20ms;
    c.stall = [](std::size_t k, int attempt) { return k == 3 && attempt == 1; };
    const auto res = exec::run(c, driver, p);
    EXPECT_EQ(res.failures, 0u);
    EXPECT_TRUE(res.state.evaluated[3]);
    EXPECT_TRUE(exec::audit(res.log, res.state).ok);
    std::size_t failures = 0;
    for (const auto& m : res.log) failures += m.kind == exec::MessageKind::recourse_failure;
    EXPECT_EQ(failures, 1u);
  }
}

TEST(Stall, SecondStallFailsTheTask) {
  auto net = case14();
  fake::Driver driver(net);
  for (auto mode : {exec::Mode::synchronous, exec::Mode::asynchronous}) {
    decomp::DecompParams p;
    p.passes = 1;
    exec::EngineConfig c;
    c.workers = 1;
    c.mode = mode;
    c.stall_timeout = 10ms;
    c.stall = [](std::size_t k, int) { return k == 5; };
    const auto res = exec::run(c, driver, p);
    EXPECT_EQ(res.failures, 1u);
    EXPECT_FALSE(res.state.evaluated[5]);
    EXPECT_TRUE(exec::audit(res.log, res.state).ok);
  }
}

TEST(Stall, RandomizedFaultTrialsNeverDeadlock) {
  auto net = case14();
  fake::Driver driver(net, 50us);
  std::mt19937_64 rng(20240517);
  for (int trial = 0; trial < 100; ++trial) {
    decomp::DecompParams p;
    p.passes = 2;
    exec::EngineConfig c;
    c.workers = 4;
    c.mode = trial % 4 == 0 ? exec::Mode::synchronous : exec::Mode::asynchronous;
    c.stall_timeout = 5ms;
    c.max_pending = 1 + trial % 4;
    const double rate = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
    const auto seed = rng();
    auto local = std::make_shared<std::mt19937_64>(seed);
    auto m = std::make_shared<std::mutex>();
    c.stall = [=](std::size_t, int) {
      std::lock_guard lk(*m);
      return std::uniform_real_distribution<double>(0.0, 1.0)(*local) < rate;
    };
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = exec::run(c, driver, p);
    EXPECT_LT(std::chrono::steady_clock::now() - t0, 10s) << trial;
    const auto a = exec::audit(res.log, res.state);
    EXPECT_TRUE(a.ok) << "trial " << trial << ": " << (a.problems.empty() ? "" : a.problems.front());
    EXPECT_EQ(res.log.back().kind, exec::MessageKind::finalize);
  }
}

TEST(Budget, ExpiryReturnsEarly) {
  auto net = case14();
  fake::Driver driver(net, 20ms);
  for (auto mode : {exec::Mode::synchronous, exec::Mode::asynchronous}) {
    decomp::DecompParams p;
    p.passes = 10;
    exec::EngineConfig c;
    c.workers = 2;
    c.mode = mode;
    c.budget = 100ms;
    const auto res = exec::run(c, driver, p);
    EXPECT_TRUE(res.budget_expired);
    EXPECT_LT(res.seconds, 1.0);
    EXPECT_GE(res.state.iteration, 1);
  }
}

TEST(Trace, NdjsonRecords) {
  auto net = case14();
  fake::Driver driver(net);
  decomp::DecompParams p;
  p.passes = 1;
  exec::EngineConfig c;
  c.workers = 2;
  const auto res = exec::run(c, driver, p);
  std::istringstream in(exec::trace_ndjson(res.log, net));
  std::string line;
  std::size_t n = 0;
  std::set<std::string> kinds;
  double last = -1;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("seq").get<std::size_t>(), n);
    EXPECT_GE(j.at("time").get<double>(), last);
    last = j.at("time").get<double>();
    for (const char* key : {"from", "to", "kind", "snapshot"}) EXPECT_TRUE(j.contains(key)) << key;
    kinds.insert(j.at("kind").get<std::string>());
    if (j.contains("contingency")) EXPECT_TRUE(net.contingency_index(j.at("contingency").get<std::string>()));
    ++n;
  }
  EXPECT_EQ(n, res.log.size());
  for (const char* k : {"Init", "EvaluateContingency", "RecourseReply", "SolveStart", "SolveComplete", "Finalize"})
    EXPECT_TRUE(kinds.count(k)) << k;
}
