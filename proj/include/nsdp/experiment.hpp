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

#pragma once

// Command implementations behind the `nsdp` tool. Each command takes a
// plain config struct and output streams and returns the process exit code:
// 0 success, 1 check failure, 2 usage or I/O error.

#include "nsdp/algorithms.hpp"
#include "nsdp/bounds.hpp"
#include "nsdp/counterexample.hpp"
#include "nsdp/error_models.hpp"
#include "nsdp/mdp.hpp"
#include "nsdp/mdp_io.hpp"
#include "nsdp/random_mdp.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace nsdp {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2 };

/// Invalid command configuration; maps to exit code 2.
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

inline nlohmann::json to_json(const ValueFunction &v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline nlohmann::json to_json(const RunTrace &trace) {
  nlohmann::json j;
  j["algorithm"] = to_string(trace.algorithm);
  j["period"] = trace.algorithm == Algorithm::ns_api_growing ? nlohmann::json(nullptr) : nlohmann::json(trace.period);
  j["seed"] = trace.seed;
  j["gamma"] = trace.gamma;
  j["epsilon"] = trace.epsilon;
  j["first"] = trace.first;
  j["last"] = trace.last();
  auto its = nlohmann::json::array();
  for (std::size_t k = trace.first; k <= trace.last(); ++k) {
    nlohmann::json it;
    it["k"] = k;
    it["value"] = to_json(trace.value(k));
    it["error"] = to_json(trace.error(k).values);
    if (!trace.evaluated.empty()) it["evaluated"] = to_json(trace.evaluated_value(k));
    its.push_back(std::move(it));
  }
  j["iterations"] = std::move(its);
  auto pols = nlohmann::json::array();
  for (const auto &p : trace.policies) pols.push_back(p.action);
  j["policies"] = std::move(pols);
  return j;
}

struct RunConfig {
  std::string mdp = "random"; // "chain", "random" or a path to an MDP file
  std::size_t n_states = 10;
  std::size_t n_actions = 3;
  double gamma = 0.9;
  double epsilon = 0.0;
  std::string algorithm = "avi";
  std::size_t K = 20;
  std::optional<std::size_t> m;
  std::string errors = "zero"; // zero | uniform | adversarial
  std::uint64_t seed = 0;
  std::string tie = "lowest"; // lowest | highest | adversarial
  std::filesystem::path out = ".";
};

namespace detail {

inline Mdp load_mdp(const RunConfig &cfg) {
  if (cfg.mdp == "chain") return chain::chain_counterexample(cfg.n_states, cfg.gamma, cfg.epsilon);
  if (cfg.mdp == "random") return random_mdp(cfg.n_states, cfg.n_actions, cfg.gamma, cfg.seed);
  return read_mdp(cfg.mdp);
}

inline ErrorModel make_error_model(const std::string &name, double epsilon, std::uint64_t seed) {
  if (name == "zero") return ErrorModel::zero();
  if (name == "uniform") return ErrorModel::uniform(epsilon, seed);
  if (name == "adversarial") return ErrorModel::adversarial_chain(epsilon);
  throw UsageError("unknown error model '" + name + "' (expected zero, uniform or adversarial)");
}

inline TieBreakRule make_tie_rule(const std::string &name) {
  if (name == "lowest") return TieBreakRule::lowest_index();
  if (name == "highest") return TieBreakRule::highest_index();
  if (name == "adversarial") return chain::adversarial_rule();
  throw UsageError("unknown tie-break rule '" + name + "' (expected lowest, highest or adversarial)");
}

inline RunTrace run_algorithm(Algorithm alg, const Mdp &mdp, std::size_t K, std::size_t m,
                              const std::vector<StationaryPolicy> &initial, const ErrorModel &errors,
                              const TieBreakRule &rule) {
  switch (alg) {
  case Algorithm::avi:
    return run_avi(mdp, ValueFunction::Zero(static_cast<Eigen::Index>(mdp.n_states)), K, errors, rule);
  case Algorithm::api: return run_api(mdp, initial.front(), K, errors, rule);
  case Algorithm::ns_api_growing: return run_ns_api_growing(mdp, initial.front(), K, errors, rule);
  case Algorithm::ns_api_fixed: {
    // initial lists pi_1..pi_m; the periodic policy runs pi_m first.
    std::vector<StationaryPolicy> phases(initial.rbegin(), initial.rbegin() + static_cast<long>(m));
    return run_ns_api_fixed(mdp, PeriodicPolicy(std::move(phases)), K, m, errors, rule);
  }
  }
  throw std::logic_error("unhandled algorithm");
}

inline void write_text(const std::filesystem::path &file, const std::string &text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw MdpIoError("cannot write " + file.string());
  out << text;
}

inline std::string report_csv(const TraceReport &rep) {
  std::ostringstream os;
  write_report_csv(rep, os);
  return os.str();
}

inline std::size_t threads_from_env() {
  const char *env = std::getenv("NSDP_THREADS");
  if (env != nullptr) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace detail

/**
 * Runs one algorithm and writes `trace.json`, `report.csv` and `mdp.json`
 * to cfg.out. Returns 0 iff no bound is violated.
 */
inline int cmd_run(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  try {
    const auto alg = parse_algorithm(cfg.algorithm);
    if (!alg) throw UsageError("unknown algorithm '" + cfg.algorithm + "'");
    if (cfg.K == 0) throw UsageError("--K must be at least 1");
    if (cfg.m && *cfg.m == 0) throw UsageError("--m must be at least 1");
    if (!(cfg.epsilon >= 0.0)) throw UsageError("--eps must be non-negative");
    const std::size_t m = cfg.m.value_or(1);
    if (*alg == Algorithm::ns_api_fixed && cfg.K < m) throw UsageError("ns-api-fixed requires K >= m");
    if (*alg == Algorithm::ns_api_growing && cfg.K > kMaxGrowingIterations)
      throw UsageError("ns-api-growing is capped at K = " + std::to_string(kMaxGrowingIterations));

    const Mdp mdp = detail::load_mdp(cfg);
    require_valid(mdp);
    const auto errors = detail::make_error_model(cfg.errors, cfg.epsilon, cfg.seed);
    const auto rule = detail::make_tie_rule(cfg.tie);
    const std::vector<StationaryPolicy> initial(m, first_available_policy(mdp));

    const auto trace = detail::run_algorithm(*alg, mdp, cfg.K, m, initial, errors, rule);
    const auto report = check_all(trace, mdp, optimal_value(mdp).value);

    std::filesystem::create_directories(cfg.out);
    detail::write_text(cfg.out / "trace.json", to_json(trace).dump() + "\n");
    detail::write_text(cfg.out / "report.csv", detail::report_csv(report));
    write_mdp(mdp, cfg.out / "mdp.json");

    out << "algorithm=" << to_string(*alg) << " rows=" << report.rows.size()
        << " violations=" << report.violations() << " min_margin=" << format_real(report.min_margin()) << "\n";
    return report.ok() ? kExitOk : kExitCheckFailed;
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::runtime_error &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

struct TightnessConfig {
  std::size_t n = 50;
  double gamma = 0.9;
  double epsilon = 0.1;
  std::size_t K = 40;
  std::optional<std::filesystem::path> out;
};

/// Runs the AVI and API tightness checks on the chain and prints the final
/// loss/bound ratios.
inline int cmd_tightness(const TightnessConfig &cfg, std::ostream &out, std::ostream &err) {
  try {
    if (cfg.K + 1 > cfg.n) {
      std::ostringstream os;
      os << "chain too short: K = " << cfg.K << " needs " << cfg.K + 1 << " states, n = " << cfg.n;
      throw ChainTooShortError(os.str());
    }
    const auto avi = chain::verify_tightness(cfg.n, cfg.gamma, cfg.epsilon, cfg.K);
    const auto api = chain::verify_tightness_api(cfg.n, cfg.gamma, cfg.epsilon, cfg.K);
    for (const auto *rep : {&avi, &api}) {
      out << rep->mode << ": k=" << rep->K << " loss=" << format_real(rep->rows.back().loss)
          << " thm1_bound=" << format_real(rep->rows.back().thm1_bound) << " ratio=";
      if (const auto r = rep->final_ratio()) out << format_real(*r);
      else out << "degenerate (eps=0)";
      out << (rep->ok() ? " ok" : " FAILED") << "\n";
      if (rep->first_failure) err << rep->mode << ": " << *rep->first_failure << "\n";
    }
    if (cfg.out) {
      std::filesystem::create_directories(*cfg.out);
      nlohmann::json j;
      j["avi"] = chain::to_json(avi);
      j["api"] = chain::to_json(api);
      detail::write_text(*cfg.out / "tightness.json", j.dump() + "\n");
    }
    return avi.ok() && api.ok() ? kExitOk : kExitCheckFailed;
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::runtime_error &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

struct SweepConfig {
  std::size_t count = 200;
  std::size_t min_states = 2;
  std::size_t max_states = 20;
  std::size_t min_actions = 2;
  std::size_t max_actions = 4;
  std::uint64_t seed = 0;
  std::vector<double> gammas = {0.5, 0.9, 0.99};
  std::vector<double> epsilons = {0.0, 0.01, 0.1};
  std::vector<std::string> algorithms = {"avi", "api", "ns-api-growing", "ns-api-fixed"};
  std::size_t K = 20;
  /// Period for ns-api-fixed; 0 picks min(recommended_m(gamma), K).
  std::size_t m = 0;
  std::filesystem::path out = ".";
  /// 0 reads NSDP_THREADS, falling back to the hardware concurrency.
  std::size_t threads = 0;
};

struct SweepSummary {
  std::size_t cells = 0;
  std::size_t rows = 0;
  std::size_t violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  /// Violations per bound family (thm1..thm4, lemma1, lemma2).
  std::vector<std::pair<std::string, std::size_t>> per_family;
};

inline constexpr const char *kSweepHeader = "mdp,n_states,n_actions,gamma,epsilon,algorithm,k,loss,bound,margin,bound_name\n";

namespace detail {

struct SweepCell {
  std::size_t mdp_index;
  double gamma;
  double epsilon;
  Algorithm algorithm;
};

struct SweepCellResult {
  std::string csv;
  TraceReport report;
};

inline SweepCellResult run_sweep_cell(const SweepConfig &cfg, const SweepCell &cell, std::size_t cell_index) {
  CounterStream shape(cfg.seed, 0x5348415045000000ULL ^ cell.mdp_index);
  const std::size_t n = shape.integer(cfg.min_states, cfg.max_states);
  const std::size_t a = shape.integer(cfg.min_actions, cfg.max_actions);
  const std::uint64_t mdp_seed = rng::draw(cfg.seed, 0x4d44500000000000ULL, cell.mdp_index);
  const Mdp mdp = random_mdp(n, a, cell.gamma, mdp_seed);
  const ValueFunction v_star = optimal_value(mdp).value;

  const std::size_t m = cfg.m != 0 ? std::min(cfg.m, cfg.K) : std::min(recommended_m(cell.gamma), cfg.K);
  std::vector<StationaryPolicy> initial;
  for (std::size_t i = 0; i < m; ++i) initial.push_back(random_policy(mdp, mdp_seed, i));
  const auto errors = ErrorModel::uniform(cell.epsilon, rng::draw(cfg.seed, 0x4552520000000000ULL, cell_index));
  const auto trace = run_algorithm(cell.algorithm, mdp, cfg.K, m, initial, errors, TieBreakRule::lowest_index());

  SweepCellResult res;
  res.report = check_all(trace, mdp, v_star);
  std::ostringstream os;
  for (const auto &r : res.report.rows)
    os << cell.mdp_index << ',' << n << ',' << a << ',' << format_real(cell.gamma) << ','
       << format_real(cell.epsilon) << ',' << to_string(cell.algorithm) << ',' << r.k << ','
       << format_real(r.loss) << ',' << format_real(r.bound) << ',' << format_real(r.margin) << ',' << r.name
       << '\n';
  res.csv = os.str();
  return res;
}

inline std::string family_of(const std::string &name) { return name.substr(0, name.find('[')); }

} // namespace detail

/// Runs the sweep and returns the summary; CSV text goes to `csv`.
inline SweepSummary run_sweep(const SweepConfig &cfg, std::ostream &csv) {
  if (cfg.min_states == 0 || cfg.min_states > cfg.max_states) throw UsageError("invalid state-count range");
  if (cfg.min_actions == 0 || cfg.min_actions > cfg.max_actions) throw UsageError("invalid action-count range");
  if (cfg.K == 0) throw UsageError("--K must be at least 1");
  std::vector<Algorithm> algs;
  for (const auto &name : cfg.algorithms) {
    const auto alg = parse_algorithm(name);
    if (!alg) throw UsageError("unknown algorithm '" + name + "'");
    algs.push_back(*alg);
  }
  if (std::find(algs.begin(), algs.end(), Algorithm::ns_api_growing) != algs.end() && cfg.K > kMaxGrowingIterations)
    throw UsageError("ns-api-growing is capped at K = " + std::to_string(kMaxGrowingIterations));
  for (double g : cfg.gammas)
    if (!(g > 0.0 && g < 1.0)) throw UsageError("every gamma must lie strictly inside (0,1)");
  for (double e : cfg.epsilons)
    if (!(e >= 0.0)) throw UsageError("every epsilon must be non-negative");

  std::vector<detail::SweepCell> cells;
  for (std::size_t i = 0; i < cfg.count; ++i)
    for (double g : cfg.gammas)
      for (double e : cfg.epsilons)
        for (auto alg : algs) cells.push_back({i, g, e, alg});

  std::vector<detail::SweepCellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t n_threads = std::min<std::size_t>(
      std::max<std::size_t>(1, cfg.threads != 0 ? cfg.threads : detail::threads_from_env()), std::max<std::size_t>(1, cells.size()));
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
      try {
        results[i] = detail::run_sweep_cell(cfg, cells[i], i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  SweepSummary summary;
  summary.cells = cells.size();
  for (const char *fam : {"thm1", "thm2", "thm3", "thm4", "lemma1", "lemma2"}) summary.per_family.emplace_back(fam, 0);
  csv << kSweepHeader;
  for (const auto &res : results) {
    csv << res.csv;
    summary.rows += res.report.rows.size();
    summary.violations += res.report.violations();
    summary.min_margin = std::min(summary.min_margin, res.report.min_margin());
    for (const auto &r : res.report.rows) {
      if (r.margin >= -res.report.tolerance) continue;
      for (auto &[fam, count] : summary.per_family)
        if (fam == detail::family_of(r.name)) ++count;
    }
  }
  return summary;
}

/// Writes `sweep.csv` to cfg.out and prints a one-line summary.
inline int cmd_sweep(const SweepConfig &cfg, std::ostream &out, std::ostream &err) {
  try {
    std::ostringstream csv;
    const auto summary = run_sweep(cfg, csv);
    std::filesystem::create_directories(cfg.out);
    detail::write_text(cfg.out / "sweep.csv", csv.str());
    out << "cells=" << summary.cells << " rows=" << summary.rows << " violations=" << summary.violations
        << " min_margin=" << format_real(summary.min_margin) << "\n";
    return summary.violations == 0 ? kExitOk : kExitCheckFailed;
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::runtime_error &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

/// Prints every violation of the MDP file at `path`.
inline int cmd_validate(const std::filesystem::path &path, std::ostream &out, std::ostream &err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    err << "error: cannot open " << path.string() << "\n";
    return kExitUsage;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    const Mdp mdp = parse_mdp(buf.str());
    out << path.string() << ": valid (" << mdp.n_states << " states, " << mdp.n_actions << " actions)\n";
    return kExitOk;
  } catch (const InvalidMdpError &e) {
    for (const auto &v : e.violations()) out << v.describe() << "\n";
    return kExitCheckFailed;
  } catch (const MdpFormatError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

} // namespace nsdp
