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

// Deterministic chain on which the 2 gamma eps / (1-gamma)^2 loss of
// AVI/API is attained.
//
// Chain states carry 1-based labels i = 1..n stored at index i-1. State 1
// only has "stay" (self-loop, reward 0). Every state i > 1 can "move" to
// i-1 with reward 0 or "stay" with reward
//
//   r_i = -2 (gamma - gamma^i) / (1 - gamma) * eps.
//
// Moving everywhere is optimal and v* = 0. With the error schedule
// eps_k = -eps at i = k, +eps at i = k+1, the AVI iterates follow a closed
// form and state k+1 carries an exact tie between move and stay, so an
// adversarial tie-break can make pi_{k+1} stay there.

#include "nsdp/algorithms.hpp"
#include "nsdp/bellman.hpp"
#include "nsdp/bounds.hpp"
#include "nsdp/error_models.hpp"
#include "nsdp/mdp.hpp"
#include "nsdp/policy_eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nsdp::chain {

inline constexpr std::size_t kMove = 0;
inline constexpr std::size_t kStay = 1;

inline Eigen::Index index_of(std::size_t label) { return static_cast<Eigen::Index>(label - 1); }

namespace detail {

inline void require_params(double gamma, double epsilon) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie strictly inside (0,1)");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
}

inline void require_length(std::size_t k, std::size_t n) {
  if (k == 0) throw std::invalid_argument("closed forms are defined for k >= 1");
  if (k + 1 > n) {
    std::ostringstream os;
    os << "chain too short: k = " << k << " needs " << k + 1 << " states, chain has " << n;
    throw ChainTooShortError(os.str());
  }
}

} // namespace detail

/// Stay reward r_i of chain state i (r_1 = 0).
inline double stay_reward(std::size_t i, double gamma, double epsilon) {
  return -2.0 * (gamma - std::pow(gamma, static_cast<double>(i))) / (1.0 - gamma) * epsilon;
}

inline Mdp chain_counterexample(std::size_t n, double gamma, double epsilon) {
  if (n < 2) throw std::invalid_argument("chain needs at least 2 states");
  detail::require_params(gamma, epsilon);
  Mdp mdp = empty_mdp(n, 2, gamma);
  set_action(mdp, 0, kStay, 0.0, {{0, 1.0}});
  for (std::size_t i = 2; i <= n; ++i) {
    const std::size_t s = i - 1;
    set_action(mdp, s, kMove, 0.0, {{s - 1, 1.0}});
    set_action(mdp, s, kStay, stay_reward(i, gamma, epsilon), {{s, 1.0}});
  }
  return mdp;
}

/// Moves in every state except chain state `label`, where it stays.
inline StationaryPolicy stayer_policy(std::size_t n, std::size_t label) {
  StationaryPolicy pi;
  pi.action.assign(n, kMove);
  pi.action[0] = kStay;
  pi.action.at(label - 1) = kStay;
  return pi;
}

inline StationaryPolicy move_policy(std::size_t n) { return stayer_policy(n, 1); }

/// v_k of AVI on the chain started from v_0 = 0 under the adversarial schedule.
inline ValueFunction closed_form_vk(std::size_t k, double gamma, double epsilon, std::size_t n) {
  detail::require_params(gamma, epsilon);
  detail::require_length(k, n);
  const double half_rk = stay_reward(k, gamma, epsilon) / 2.0;
  ValueFunction v = ValueFunction::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < k; ++i) v[index_of(i)] = -std::pow(gamma, static_cast<double>(k - 1)) * epsilon;
  v[index_of(k)] = half_rk - epsilon;
  v[index_of(k + 1)] = -(half_rk - epsilon);
  return v;
}

/// Action-values of move and stay for v_k. q_move is -inf at state 1.
struct ClosedFormQ {
  ValueFunction move;
  ValueFunction stay;
};

inline ClosedFormQ closed_form_q(std::size_t k, double gamma, double epsilon, std::size_t n) {
  detail::require_params(gamma, epsilon);
  detail::require_length(k, n);
  const auto sz = static_cast<Eigen::Index>(n);
  const double gk_eps = std::pow(gamma, static_cast<double>(k)) * epsilon;
  const auto r = [&](std::size_t i) { return stay_reward(i, gamma, epsilon); };
  const double half_rk1 = r(k + 1) / 2.0;

  ClosedFormQ q{ValueFunction::Zero(sz), ValueFunction::Zero(sz)};
  q.move[0] = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 2; i <= n; ++i) {
    if (i <= k) q.move[index_of(i)] = -gk_eps;
    else if (i == k + 1) q.move[index_of(i)] = half_rk1;
    else if (i == k + 2) q.move[index_of(i)] = -half_rk1;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < k) q.stay[index_of(i)] = r(i) - gk_eps;
    else if (i == k) q.stay[index_of(i)] = r(k) + half_rk1;
    else if (i == k + 1) q.stay[index_of(i)] = half_rk1;
    else q.stay[index_of(i)] = r(i);
  }
  return q;
}

/// Exact loss of the policy that stays only at chain state k+1.
inline double stayer_loss(std::size_t k, double gamma, double epsilon) {
  const double g = 1.0 - gamma;
  return 2.0 * (gamma - std::pow(gamma, static_cast<double>(k + 1))) / (g * g) * epsilon;
}

/// Tie-break that stays at chain state `iteration` whenever stay is tied.
inline TieBreakRule adversarial_rule() {
  return TieBreakRule::from_callback([](std::size_t state, std::span<const std::size_t> tied, std::size_t iteration) {
    if (state + 1 == iteration && std::find(tied.begin(), tied.end(), kStay) != tied.end()) return kStay;
    return tied.front();
  });
}

/// Per-iteration tightness record; `ratio` is empty when eps = 0.
struct TightnessRow {
  std::size_t k = 0;
  double max_abs_dev_vk = 0.0;
  std::vector<std::size_t> greedy_stays_at;
  double loss = 0.0;
  double thm1_bound = 0.0;
  std::optional<double> ratio;
};

struct TightnessReport {
  std::size_t n = 0;
  double gamma = 0.0;
  double epsilon = 0.0;
  std::size_t K = 0;
  std::string mode;
  std::vector<TightnessRow> rows;
  bool values_match = true;
  bool stays_only_at_next = true;
  bool loss_matches = true;
  bool ratio_monotone = true;
  std::optional<std::string> first_failure;

  bool ok() const { return values_match && stays_only_at_next && loss_matches && ratio_monotone; }

  std::optional<double> final_ratio() const { return rows.empty() ? std::nullopt : rows.back().ratio; }
};

inline constexpr double kTightnessTolerance = 1e-9;

namespace detail {

inline void fail(TightnessReport &rep, bool &flag, const std::string &what) {
  flag = false;
  if (!rep.first_failure) rep.first_failure = what;
}

inline std::vector<std::size_t> stay_labels(const StationaryPolicy &pi) {
  std::vector<std::size_t> out;
  for (std::size_t s = 1; s < pi.size(); ++s)
    if (pi[s] == kStay) out.push_back(s + 1);
  return out;
}

/// Fills policy/loss/ratio columns for pi_{k+1}, k = 1..K, from a trace.
inline void score_policies(TightnessReport &rep, const Mdp &mdp, const RunTrace &trace, const ValueFunction &v_star) {
  const double thm1 = bound_thm1(rep.gamma, rep.epsilon);
  double prev_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= rep.K; ++k) {
    auto &row = rep.rows[k - 1];
    const auto &pi = trace.policy(k + 1);
    row.greedy_stays_at = stay_labels(pi);
    if (rep.epsilon > 0.0 && row.greedy_stays_at != std::vector<std::size_t>{k + 1}) {
      std::ostringstream os;
      os << "k = " << k << ": pi_" << k + 1 << " does not stay exactly at state " << k + 1;
      fail(rep, rep.stays_only_at_next, os.str());
    }
    row.loss = loss(v_star, eval_stationary(mdp, pi));
    row.thm1_bound = thm1;
    const double expected = rep.epsilon > 0.0 ? stayer_loss(k, rep.gamma, rep.epsilon) : 0.0;
    if (std::abs(row.loss - expected) > kTightnessTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "k = " << k << ": loss " << row.loss << " differs from " << expected;
      fail(rep, rep.loss_matches, os.str());
    }
    if (thm1 > 0.0) {
      row.ratio = row.loss / thm1;
      if (*row.ratio < prev_ratio || *row.ratio > 1.0 + kTightnessTolerance) {
        std::ostringstream os;
        os << "k = " << k << ": loss/bound ratio " << *row.ratio << " not monotone in (0,1]";
        fail(rep, rep.ratio_monotone, os.str());
      }
      prev_ratio = *row.ratio;
    }
  }
}

inline TightnessReport start_report(std::size_t n, double gamma, double epsilon, std::size_t K, const char *mode) {
  detail::require_params(gamma, epsilon);
  if (K == 0) throw std::invalid_argument("K must be at least 1");
  require_length(K, n);
  TightnessReport rep;
  rep.n = n;
  rep.gamma = gamma;
  rep.epsilon = epsilon;
  rep.K = K;
  rep.mode = mode;
  rep.rows.resize(K);
  for (std::size_t k = 1; k <= K; ++k) rep.rows[k - 1].k = k;
  return rep;
}

} // namespace detail

/**
 * Runs AVI from v_0 = 0 on the chain with adversarial errors and checks:
 * every v_k against closed_form_vk, that pi_{k+1} stays only at k+1, that
 * its loss is 2(gamma - gamma^{k+1})/(1-gamma)^2 eps, and that the ratio to
 * bound_thm1 grows monotonically towards 1. Failures are recorded in the
 * report, not thrown.
 */
inline TightnessReport verify_tightness(std::size_t n, double gamma, double epsilon, std::size_t K,
                                        const TieBreakRule &rule = adversarial_rule()) {
  auto rep = detail::start_report(n, gamma, epsilon, K, "avi");
  const Mdp mdp = chain_counterexample(n, gamma, epsilon);
  const auto trace =
      run_avi(mdp, ValueFunction::Zero(static_cast<Eigen::Index>(n)), K, ErrorModel::adversarial_chain(epsilon), rule);
  for (std::size_t k = 1; k <= K; ++k) {
    auto &row = rep.rows[k - 1];
    const ValueFunction diff = trace.value(k) - closed_form_vk(k, gamma, epsilon, n);
    Eigen::Index worst = 0;
    row.max_abs_dev_vk = diff.cwiseAbs().maxCoeff(&worst);
    if (row.max_abs_dev_vk > kTightnessTolerance) {
      std::ostringstream os;
      os << "k = " << k << ": v_k deviates by " << row.max_abs_dev_vk << " at state " << worst + 1;
      detail::fail(rep, rep.values_match, os.str());
    }
  }
  detail::score_policies(rep, mdp, trace, optimal_value(mdp).value);
  return rep;
}

/**
 * API counterpart: starts from the all-move policy and perturbs each exact
 * evaluation with the same adversarial schedule. The tie at k+1 is again
 * exact, so pi_{k+1} can stay there. max_abs_dev_vk is left at 0.
 */
inline TightnessReport verify_tightness_api(std::size_t n, double gamma, double epsilon, std::size_t K,
                                            const TieBreakRule &rule = adversarial_rule()) {
  auto rep = detail::start_report(n, gamma, epsilon, K, "api");
  const Mdp mdp = chain_counterexample(n, gamma, epsilon);
  const auto trace = run_api(mdp, move_policy(n), K, ErrorModel::adversarial_chain(epsilon), rule);
  detail::score_policies(rep, mdp, trace, optimal_value(mdp).value);
  return rep;
}

inline nlohmann::json to_json(const TightnessReport &rep) {
  nlohmann::json j;
  j["mode"] = rep.mode;
  j["n"] = rep.n;
  j["gamma"] = rep.gamma;
  j["epsilon"] = rep.epsilon;
  j["K"] = rep.K;
  j["ok"] = rep.ok();
  j["first_failure"] = rep.first_failure ? nlohmann::json(*rep.first_failure) : nlohmann::json(nullptr);
  auto rows = nlohmann::json::array();
  for (const auto &r : rep.rows) {
    rows.push_back({{"k", r.k},
                    {"max_abs_dev_vk", r.max_abs_dev_vk},
                    {"greedy_stays_at", r.greedy_stays_at},
                    {"loss", r.loss},
                    {"thm1_bound", r.thm1_bound},
                    {"ratio", r.ratio ? nlohmann::json(*r.ratio) : nlohmann::json(nullptr)}});
  }
  j["iterations"] = std::move(rows);
  return j;
}

} // namespace nsdp::chain
