// Copyright 2026 The nsdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nsdp/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
  CLI::App app{"Approximate value/policy iteration with non-stationary policies"};
  app.require_subcommand(1);

  nsdp::RunConfig run;
  std::size_t m = 0;
  auto *run_cmd = app.add_subcommand("run", "run one algorithm and check its bounds");
  run_cmd->add_option("--mdp", run.mdp, "chain, random, or path to an MDP JSON file")->capture_default_str();
  run_cmd->add_option("--n", run.n_states, "number of states for chain/random")->capture_default_str();
  run_cmd->add_option("--actions", run.n_actions, "number of actions for random")->capture_default_str();
  run_cmd->add_option("--gamma", run.gamma, "discount factor")->capture_default_str();
  run_cmd->add_option("--eps", run.epsilon, "error bound epsilon")->capture_default_str();
  run_cmd->add_option("--alg", run.algorithm, "avi, api, ns-api-growing or ns-api-fixed")->capture_default_str();
  run_cmd->add_option("--K", run.K, "number of iterations")->capture_default_str();
  auto *m_opt = run_cmd->add_option("--m", m, "period for ns-api-fixed");
  run_cmd->add_option("--errors", run.errors, "zero, uniform or adversarial")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "seed for random MDPs and errors")->capture_default_str();
  run_cmd->add_option("--tie", run.tie, "lowest, highest or adversarial")->capture_default_str();
  run_cmd->add_option("--out", run.out, "output directory")->capture_default_str();

  nsdp::TightnessConfig tight;
  std::string tight_out;
  auto *tight_cmd = app.add_subcommand("tightness", "reproduce the tight loss on the chain MDP");
  tight_cmd->add_option("--n", tight.n, "chain length")->capture_default_str();
  tight_cmd->add_option("--gamma", tight.gamma, "discount factor")->capture_default_str();
  tight_cmd->add_option("--eps", tight.epsilon, "error bound epsilon")->capture_default_str();
  tight_cmd->add_option("--K", tight.K, "number of iterations")->capture_default_str();
  auto *tight_out_opt = tight_cmd->add_option("--out", tight_out, "directory for tightness.json");

  nsdp::SweepConfig sweep;
  auto *sweep_cmd = app.add_subcommand("sweep", "check every bound on an ensemble of random MDPs");
  sweep_cmd->add_option("--count", sweep.count, "number of random MDPs")->capture_default_str();
  sweep_cmd->add_option("--min-states", sweep.min_states)->capture_default_str();
  sweep_cmd->add_option("--max-states", sweep.max_states)->capture_default_str();
  sweep_cmd->add_option("--min-actions", sweep.min_actions)->capture_default_str();
  sweep_cmd->add_option("--max-actions", sweep.max_actions)->capture_default_str();
  sweep_cmd->add_option("--seed", sweep.seed)->capture_default_str();
  sweep_cmd->add_option("--gammas", sweep.gammas, "discount grid")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--epsilons", sweep.epsilons, "error-bound grid")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--algs", sweep.algorithms, "algorithms to run")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--K", sweep.K, "iterations per run")->capture_default_str();
  sweep_cmd->add_option("--m", sweep.m, "period for ns-api-fixed (0: ceil(1/(1-gamma)))")->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out, "output directory")->capture_default_str();

  std::string validate_path;
  auto *validate_cmd = app.add_subcommand("validate", "check an MDP file");
  validate_cmd->add_option("path", validate_path, "MDP JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return nsdp::kExitUsage;
  }

  if (run_cmd->parsed()) {
    if (m_opt->count() > 0) run.m = m;
    return nsdp::cmd_run(run, std::cout, std::cerr);
  }
  if (tight_cmd->parsed()) {
    if (tight_out_opt->count() > 0) tight.out = tight_out;
    return nsdp::cmd_tightness(tight, std::cout, std::cerr);
  }
  if (sweep_cmd->parsed()) return nsdp::cmd_sweep(sweep, std::cout, std::cerr);
  return nsdp::cmd_validate(validate_path, std::cout, std::cerr);
}
