#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"

using namespace scacopf;

int main(int argc, char** argv) {
  CLI::App app{"Security-constrained AC optimal power flow solver"};
  app.require_subcommand(1);

  cli::RunConfig cfg;
  std::string mode = "sync";
  double budget = 0.0;
  auto& p = cfg.params;

  app.add_option("--network", cfg.network, "Network JSON file")->check(CLI::ExistingFile);
  app.add_option("--out", cfg.out, "Output directory (solution_*.json, report.json, trace.ndjson)")
      ->capture_default_str();
  app.add_option("--workers", cfg.workers, "Worker threads evaluating contingencies")->capture_default_str();
  app.add_option("--mode", mode, "sync or async scheduling")->capture_default_str();
  app.add_option("--budget-seconds", budget, "Wall-clock budget for the decomposition; 0 = unlimited")
      ->capture_default_str();
  // Complementarity relaxation of the contingency subproblems.
  app.add_option("--epsilon", p.epsilon, "Complementarity relaxation of the subproblems")->capture_default_str();
  // Artifact default: voltage-regulation dead band used when crushing.
  app.add_option("--epsilon-q", p.epsilon_q, "Reactive tolerance for voltage-regulator decisions")
      ->capture_default_str();
  // Artifact default: a contingency with r_k below this is considered settled.
  app.add_option("--epsilon-r", p.epsilon_r, "Recourse penalty below which a contingency is settled")
      ->capture_default_str();
  // Artifact default.
  app.add_option("--passes", p.passes, "Sweeps over the contingency schedule")->capture_default_str();
  // Artifact defaults: 4 + 4 prescreened outages.
  app.add_option("--prescreen-gen", p.prescreen_gen, "Largest generator outages evaluated first")
      ->capture_default_str();
  app.add_option("--prescreen-branch", p.prescreen_branch, "Largest branch outages evaluated first")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "Seed for the randomized checks")->capture_default_str();
  app.add_flag("-v,--verbose", cfg.verbose, "Print solver iterations to stderr");

  auto* solve = app.add_subcommand("solve", "Decompose, recover every contingency, write solutions and report");
  auto* score = app.add_subcommand("score", "Score solution files (default: every solution_*.json in --out)");
  std::vector<std::filesystem::path> files;
  score->add_option("files", files, "Solution files");
  auto* check = app.add_subcommand("check", "Derivative and invariant checks on the network's models");
  std::string id;
  auto* evaluate = app.add_subcommand("evaluate-contingency", "Relaxed subproblem at the base solution in --out");
  evaluate->add_option("id", id, "Contingency id")->required();
  auto* recover = app.add_subcommand("recover", "Feasibility recovery of one contingency");
  recover->add_option("id", id, "Contingency id")->required();
  for (auto* sub : {solve, score, check, evaluate, recover}) sub->fallthrough();

  try {
    app.parse(argc, argv);
    cfg.mode = exec::parse_mode(mode);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kLoadFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kLoadFailure;
  }
  if (cfg.network.empty()) {
    std::cerr << "error: --network is required\n";
    return cli::kLoadFailure;
  }
  if (budget > 0.0) cfg.budget_seconds = budget;

  try {
    if (*solve) return cli::cmd_solve(cfg, std::cout, std::cerr);
    if (*score) return cli::cmd_score(cfg, files, std::cout, std::cerr);
    if (*check) return cli::cmd_check(cfg, std::cout, std::cerr);
    if (*evaluate) return cli::cmd_evaluate(cfg, id, std::cout, std::cerr);
    if (*recover) return cli::cmd_recover(cfg, id, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kLoadFailure;
  }
  return cli::kLoadFailure;
}
