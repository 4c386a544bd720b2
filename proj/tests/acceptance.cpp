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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include "nsdp/algorithms.hpp"
#include "nsdp/bounds.hpp"
#include "nsdp/counterexample.hpp"
#include "nsdp/experiment.hpp"
#include "nsdp/policy_eval.hpp"
#include "nsdp/random_mdp.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <unistd.h>

namespace {

using namespace nsdp;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool cond, const std::string &what) {
    if (!cond && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// 1. Chain tightness for AVI.
Outcome tightness() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto rep = chain::verify_tightness(50, 0.9, 0.1, 40);
  const double elapsed = seconds_since(t0);
  o.require(rep.values_match, rep.first_failure.value_or("v_k mismatch"));
  for (const auto &row : rep.rows) {
    const double expect = 2.0 * (0.9 - std::pow(0.9, double(row.k + 1))) / (0.1 * 0.1) * 0.1;
    o.require(std::abs(row.loss - expect) <= 1e-9, "loss mismatch at k = " + std::to_string(row.k));
    o.require(row.max_abs_dev_vk <= 1e-9, "v_k deviation at k = " + std::to_string(row.k));
  }
  const double ratio = rep.final_ratio().value_or(0.0);
  o.require(ratio > 0.98, "ratio " + fmt(ratio) + " <= 0.98");
  o.require(elapsed < 5.0, "runtime " + fmt(elapsed) + " s");
  if (o.pass) o.detail = "ratio at k=40 " + fmt(ratio) + ", " + fmt(elapsed) + " s";
  return o;
}

// 2. Closed-form induction step.
Outcome closed_form_induction() {
  Outcome o;
  const std::size_t n = 50;
  double worst = 0.0;
  for (double gamma : {0.5, 0.9, 0.99})
    for (double eps : {0.01, 0.1}) {
      const auto adversary = ErrorModel::adversarial_chain(eps);
      for (std::size_t k = 1; k <= 40; ++k) {
        const auto q = chain::closed_form_q(k, gamma, eps, n);
        const ValueFunction next = q.move.cwiseMax(q.stay) + emit(adversary, k + 1, n).values;
        const double dev = max_norm(next - chain::closed_form_vk(k + 1, gamma, eps, n));
        worst = std::max(worst, dev);
      }
    }
  o.require(worst <= 1e-12, "max deviation " + fmt(worst));
  if (o.pass) o.detail = "max deviation " + fmt(worst);
  return o;
}

// 3. Non-stationary policy extracted from the chain run.
Outcome nonstationary_improvement() {
  Outcome o;
  const double gamma = 0.9, eps = 0.1;
  const std::size_t n = 50, k = 40;
  const Mdp mdp = chain::chain_counterexample(n, gamma, eps);
  const ValueFunction v0 = ValueFunction::Zero(n);
  const auto trace = run_avi(mdp, v0, k, ErrorModel::adversarial_chain(eps), chain::adversarial_rule());
  const ValueFunction v_star = optimal_value(mdp).value;
  const double ns_loss = loss(v_star, eval_periodic(mdp, extract_periodic(trace, k, k)));
  const double st_loss = loss(v_star, eval_stationary(mdp, trace.policy(k)));
  const double gk = std::pow(gamma, double(k));
  const double bound = 2.0 * (gamma / (1.0 - gamma) - gk / (1.0 - gk)) * eps + 2.0 * gk / (1.0 - gk) * max_norm(v_star - v0);
  o.require(ns_loss <= bound + 1e-8, "loss " + fmt(ns_loss) + " > bound " + fmt(bound));
  o.require(st_loss >= 5.0 * ns_loss && st_loss > ns_loss,
            "stationary " + fmt(st_loss) + " vs non-stationary " + fmt(ns_loss));
  if (o.pass)
    o.detail = "pi_{40,40} loss " + fmt(ns_loss) + " <= " + fmt(bound) + ", stationary " + fmt(st_loss) + " (x" +
               fmt(st_loss / ns_loss) + ")";
  return o;
}

// 4. Random sweep over all algorithms and checks.
Outcome sweep() {
  Outcome o;
  SweepConfig cfg;
  cfg.count = 200;
  cfg.min_states = 1;
  cfg.max_states = 20;
  cfg.min_actions = 1;
  cfg.max_actions = 4;
  cfg.gammas = {0.5, 0.9};
  cfg.epsilons = {0.0, 0.01, 0.05};
  cfg.seed = 2026;
  const auto t0 = Clock::now();
  std::ostringstream csv;
  const auto s = run_sweep(cfg, csv);
  const double elapsed = seconds_since(t0);
  std::ostringstream fam;
  for (const auto &[name, count] : s.per_family) fam << ' ' << name << '=' << count;
  o.require(s.violations == 0, std::to_string(s.violations) + " violations:" + fam.str());
  for (const char *family : {"thm1", "thm2", "thm3", "thm4", "lemma1", "lemma2"})
    o.require(csv.str().find(std::string(",") + family) != std::string::npos, std::string("no rows for ") + family);
  o.require(elapsed < 120.0, "runtime " + fmt(elapsed) + " s");
  if (o.pass)
    o.detail = std::to_string(s.cells) + " runs, " + std::to_string(s.rows) + " rows, min margin " +
               fmt(s.min_margin) + ", " + fmt(elapsed) + " s";
  return o;
}

// 5. Policy iteration against exhaustive enumeration.
Outcome oracle_equivalence() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    CounterStream shape(77, i);
    const std::size_t n = shape.integer(1, 6);
    const std::size_t a = shape.integer(1, 3);
    const Mdp mdp = random_mdp(n, a, shape.uniform(0.05, 0.99), rng::draw(77, 1, i));
    worst = std::max(worst, max_norm(optimal_value(mdp).value - brute_force_oracle(mdp).value));
  }
  o.require(worst <= 1e-8, "max deviation " + fmt(worst));
  if (o.pass) o.detail = "max deviation " + fmt(worst);
  return o;
}

// 6. Exact-evaluation properties with zero error.
Outcome exact_case() {
  Outcome o;
  const auto rule = TieBreakRule::lowest_index();
  for (std::uint64_t i = 0; i < 50 && o.pass; ++i) {
    CounterStream shape(606, i);
    const std::size_t n = shape.integer(2, 12);
    const std::size_t a = shape.integer(2, 4);
    const double gamma = shape.uniform(0.3, 0.95);
    const Mdp mdp = random_mdp(n, a, gamma, rng::draw(606, 1, i));
    const ValueFunction v_star = optimal_value(mdp).value;
    const double tol = 1e-8 * (1.0 + mdp.v_max());
    const std::string tag = "mdp " + std::to_string(i) + ": ";

    const auto api = run_api(mdp, random_policy(mdp, i), 30, ErrorModel::zero(), rule);
    for (std::size_t k = 2; k <= api.last(); ++k)
      o.require((api.evaluated_value(k) - api.evaluated_value(k - 1)).minCoeff() >= -tol, tag + "API not monotone");
    o.require(loss(v_star, api.evaluated_value(api.last())) <= tol, tag + "API not optimal");

    ValueFunction v0(static_cast<Eigen::Index>(n));
    CounterStream init(606, 1000 + i);
    for (Eigen::Index s = 0; s < v0.size(); ++s) v0[s] = init.uniform(-5.0, 5.0);
    const auto avi = run_avi(mdp, v0, 30, ErrorModel::zero(), rule);
    const double d0 = max_norm(v_star - v0);
    for (std::size_t k = 1; k <= avi.last(); ++k)
      o.require(max_norm(v_star - avi.value(k)) <= std::pow(gamma, double(k)) * d0 + tol,
                tag + "AVI contraction fails at k = " + std::to_string(k));

    for (std::size_t m : {1u, 2u, 5u}) {
      std::vector<StationaryPolicy> phases;
      for (std::size_t j = 0; j < m; ++j) phases.push_back(random_policy(mdp, i, j));
      const auto t = run_ns_api_fixed(mdp, PeriodicPolicy(phases), 20, m, ErrorModel::zero(), rule);
      for (std::size_t k = m; k <= t.last(); ++k) {
        const ValueFunction next = eval_periodic(mdp, extract_periodic(t, k + 1, m));
        const ValueFunction rotated = eval_periodic(mdp, rotate_periodic(extract_periodic(t, k, m)));
        o.require((next - rotated).minCoeff() >= -tol, tag + "rotation improvement fails, m = " + std::to_string(m));
      }
    }
  }
  if (o.pass) o.detail = "50 MDPs, m in {1,2,5}";
  return o;
}

// 7. Bound-formula identities.
Outcome bound_identities() {
  Outcome o;
  double worst = 0.0;
  for (double gamma : {0.5, 0.9, 0.99})
    for (double eps : {0.01, 0.1})
      for (double d : {0.0, 1.0, 10.0}) {
        const double t1 = bound_thm1(gamma, eps);
        worst = std::max(worst, std::abs(bound_thm2(gamma, eps, 10000, 1, d) - t1) / t1);
        worst = std::max(worst, std::abs(bound_thm4(gamma, eps, 10000, 1, d) - t1) / t1);
        for (std::size_t k : {1u, 2u, 10u, 40u, 200u}) {
          const double gk = std::pow(gamma, double(k));
          const double special = 2.0 * (gamma / (1.0 - gamma) - gk / (1.0 - gk)) * eps + 2.0 * gk / (1.0 - gk) * d;
          const double diff = std::abs(bound_thm2(gamma, eps, k, k, d) - special);
          o.require(diff <= 1e-12 * (1.0 + special), "m = k form differs by " + fmt(diff));
        }
      }
  o.require(worst <= 1e-8, "relative gap at k = 1e4: " + fmt(worst));
  const std::size_t m = recommended_m(0.9);
  const double factor = 2.0 / (1.0 - std::pow(0.9, double(m)));
  o.require(m == 10, "recommended_m(0.9) = " + std::to_string(m));
  o.require(factor <= 3.164, "factor " + fmt(factor));
  if (o.pass) o.detail = "limit gap " + fmt(worst) + ", recommended_m(0.9) = 10, factor " + fmt(factor);
  return o;
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// 8. Byte-identical artifacts under fixed seeds.
Outcome determinism() {
  Outcome o;
  const auto root = std::filesystem::temp_directory_path() / ("nsdp_accept_" + std::to_string(::getpid()));
  std::ostringstream sink;
  for (const char *alg : {"avi", "api", "ns-api-growing", "ns-api-fixed"}) {
    RunConfig cfg;
    cfg.algorithm = alg;
    cfg.errors = "uniform";
    cfg.epsilon = 0.05;
    cfg.seed = 42;
    if (std::string(alg) == "ns-api-fixed") cfg.m = 4;
    cfg.out = root / alg / "a";
    const int ra = cmd_run(cfg, sink, sink);
    cfg.out = root / alg / "b";
    const int rb = cmd_run(cfg, sink, sink);
    o.require(ra == kExitOk && rb == kExitOk, std::string("cmd_run failed for ") + alg);
    for (const char *f : {"trace.json", "report.csv", "mdp.json"})
      o.require(slurp(root / alg / "a" / f) == slurp(root / alg / "b" / f), std::string(alg) + "/" + f + " differs");
  }
  SweepConfig sc;
  sc.count = 10;
  sc.seed = 9;
  sc.threads = 1;
  sc.out = root / "sweep_a";
  const int sa = cmd_sweep(sc, sink, sink);
  sc.threads = 0;
  sc.out = root / "sweep_b";
  const int sb = cmd_sweep(sc, sink, sink);
  o.require(sa == kExitOk && sb == kExitOk, "cmd_sweep failed");
  o.require(slurp(root / "sweep_a" / "sweep.csv") == slurp(root / "sweep_b" / "sweep.csv"), "sweep.csv differs");
  std::filesystem::remove_all(root);
  if (o.pass) o.detail = "run and sweep artifacts identical";
  return o;
}

} // namespace

int main() {
  const std::pair<const char *, std::function<Outcome()>> criteria[] = {
      {"chain tightness", tightness},
      {"closed-form induction", closed_form_induction},
      {"non-stationary improvement", nonstationary_improvement},
      {"bound sweep", sweep},
      {"oracle equivalence", oracle_equivalence},
      {"exact-case properties", exact_case},
      {"bound identities", bound_identities},
      {"determinism", determinism},
  };
  int failed = 0;
  int index = 0;
  for (const auto &[name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << index << "] " << name << ": " << o.detail << std::endl;
    if (!o.pass) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
