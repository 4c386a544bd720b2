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

#include "nsdp/bellman.hpp"
#include "nsdp/error_models.hpp"
#include "nsdp/mdp.hpp"
#include "nsdp/policy_eval.hpp"

#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsdp {

enum class Algorithm { avi, api, ns_api_growing, ns_api_fixed };

inline const char *to_string(Algorithm alg) {
  switch (alg) {
  case Algorithm::avi: return "avi";
  case Algorithm::api: return "api";
  case Algorithm::ns_api_growing: return "ns-api-growing";
  case Algorithm::ns_api_fixed: return "ns-api-fixed";
  }
  return "unknown";
}

inline std::optional<Algorithm> parse_algorithm(const std::string &name) {
  for (auto alg : {Algorithm::avi, Algorithm::api, Algorithm::ns_api_growing, Algorithm::ns_api_fixed})
    if (name == to_string(alg)) return alg;
  return std::nullopt;
}

/// Growing-period runs evaluate a period-k policy at step k; K is capped.
inline constexpr std::size_t kMaxGrowingIterations = 200;

/**
 * Record of one run. Indices follow the iteration numbers of the
 * algorithms:
 *
 *  - AVI: values v_0..v_K, policies pi_1..pi_{K+1} with pi_{i+1} in G(v_i).
 *  - API and NS-API (growing): values v_1..v_K; pi_1 is the initial policy.
 *  - NS-API (fixed m): values v_m..v_K; pi_1..pi_m are the initial phases.
 *
 * For the API family, evaluated[k] is the exact value of the policy
 * evaluated at step k (pi_k, pi_{k,k} or pi_{k,m}), before adding epsilon_k.
 */
struct RunTrace {
  Algorithm algorithm = Algorithm::avi;
  std::size_t period = 1;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  double epsilon = 0.0;
  std::size_t first = 0;

  std::vector<ValueFunction> values;
  std::vector<ErrorVector> errors;
  std::vector<ValueFunction> evaluated;
  std::vector<StationaryPolicy> policies;

  std::size_t last() const { return first + values.size() - 1; }

  const ValueFunction &value(std::size_t k) const { return values.at(k - first); }
  const ErrorVector &error(std::size_t k) const { return errors.at(k - first); }
  const ValueFunction &evaluated_value(std::size_t k) const { return evaluated.at(k - first); }

  /// pi_i, 1-indexed.
  const StationaryPolicy &policy(std::size_t i) const {
    if (i == 0) throw std::out_of_range("policies are numbered from 1");
    return policies.at(i - 1);
  }

  std::size_t policy_count() const { return policies.size(); }
};

/// pi_{k,m} = [pi_k, pi_{k-1}, ..., pi_{k-m+1}].
inline PeriodicPolicy extract_periodic(const RunTrace &trace, std::size_t k, std::size_t m) {
  if (m == 0 || m > k) {
    std::ostringstream os;
    os << "extract_periodic requires 1 <= m <= k (m = " << m << ", k = " << k << ")";
    throw std::invalid_argument(os.str());
  }
  if (k > trace.policy_count()) {
    std::ostringstream os;
    os << "trace holds " << trace.policy_count() << " policies, pi_" << k << " requested";
    throw std::out_of_range(os.str());
  }
  std::vector<StationaryPolicy> phases;
  phases.reserve(m);
  for (std::size_t i = 0; i < m; ++i) phases.push_back(trace.policy(k - i));
  return PeriodicPolicy(std::move(phases));
}

/// One-step right rotation: the last phase moves to the front.
inline PeriodicPolicy rotate_periodic(const PeriodicPolicy &p) {
  std::vector<StationaryPolicy> phases;
  phases.reserve(p.period());
  phases.push_back(p.phases().back());
  for (std::size_t i = 0; i + 1 < p.period(); ++i) phases.push_back(p.phase(i));
  return PeriodicPolicy(std::move(phases));
}

namespace detail {

inline void require_iterations(std::size_t K) {
  if (K == 0) throw std::invalid_argument("K must be at least 1");
}

inline RunTrace start_trace(Algorithm alg, const Mdp &mdp, const ErrorModel &errors, std::size_t period,
                            std::size_t first) {
  RunTrace t;
  t.algorithm = alg;
  t.period = period;
  t.seed = errors.seed;
  t.gamma = mdp.gamma;
  t.epsilon = errors.bound;
  t.first = first;
  return t;
}

} // namespace detail

/// v_{k+1} = T v_k + epsilon_{k+1}, pi_{k+1} greedy on v_k.
inline RunTrace run_avi(const Mdp &mdp, const ValueFunction &v0, std::size_t K, const ErrorModel &errors,
                        const TieBreakRule &rule) {
  detail::require_iterations(K);
  require_valid(mdp);
  check_value(mdp, v0);
  auto trace = detail::start_trace(Algorithm::avi, mdp, errors, 1, 0);
  trace.values.push_back(v0);
  trace.errors.push_back({ValueFunction::Zero(v0.size()), errors.bound});
  for (std::size_t k = 0; k < K; ++k) {
    const auto &vk = trace.values.back();
    trace.policies.push_back(greedy_policy(mdp, vk, rule, k + 1));
    auto e = emit(errors, k + 1, mdp.n_states);
    ValueFunction next = apply_T(mdp, vk) + e.values;
    trace.values.push_back(std::move(next));
    trace.errors.push_back(std::move(e));
  }
  trace.policies.push_back(greedy_policy(mdp, trace.values.back(), rule, K + 1));
  return trace;
}

namespace detail {

/// Shared API-family loop: at each k, evaluates `evaluate(trace, k)`,
/// perturbs it by epsilon_k and appends pi_{k+1}.
template <class Evaluate>
void run_policy_loop(const Mdp &mdp, RunTrace &trace, std::size_t K, const ErrorModel &errors,
                     const TieBreakRule &rule, Evaluate &&evaluate) {
  for (std::size_t k = trace.first; k <= K; ++k) {
    ValueFunction exact = evaluate(trace, k);
    auto e = emit(errors, k, mdp.n_states);
    ValueFunction vk = exact + e.values;
    trace.policies.push_back(greedy_policy(mdp, vk, rule, k + 1));
    trace.evaluated.push_back(std::move(exact));
    trace.values.push_back(std::move(vk));
    trace.errors.push_back(std::move(e));
  }
}

} // namespace detail

/// v_k = v_{pi_k} + epsilon_k, pi_{k+1} greedy on v_k; pi1 is pi_1.
inline RunTrace run_api(const Mdp &mdp, const StationaryPolicy &pi1, std::size_t K, const ErrorModel &errors,
                        const TieBreakRule &rule) {
  detail::require_iterations(K);
  require_valid(mdp);
  check_policy(mdp, pi1);
  auto trace = detail::start_trace(Algorithm::api, mdp, errors, 1, 1);
  trace.policies.push_back(pi1);
  detail::run_policy_loop(mdp, trace, K, errors, rule, [&](const RunTrace &t, std::size_t k) {
    return eval_stationary(mdp, t.policy(k));
  });
  return trace;
}

/// v_k = v_{pi_{k,k}} + epsilon_k, looping over every policy generated so far.
inline RunTrace run_ns_api_growing(const Mdp &mdp, const StationaryPolicy &pi1, std::size_t K,
                                   const ErrorModel &errors, const TieBreakRule &rule) {
  detail::require_iterations(K);
  if (K > kMaxGrowingIterations) {
    std::ostringstream os;
    os << "growing-period API is capped at K = " << kMaxGrowingIterations;
    throw std::invalid_argument(os.str());
  }
  require_valid(mdp);
  check_policy(mdp, pi1);
  auto trace = detail::start_trace(Algorithm::ns_api_growing, mdp, errors, 0, 1);
  trace.policies.push_back(pi1);
  detail::run_policy_loop(mdp, trace, K, errors, rule, [&](const RunTrace &t, std::size_t k) {
    return eval_periodic(mdp, extract_periodic(t, k, k));
  });
  return trace;
}

/**
 * Fixed-period variant: for k >= m, v_k = v_{pi_{k,m}} + epsilon_k.
 * `initial` is pi_{m,m} in execution order, i.e. [pi_m, ..., pi_1].
 * With m = 1 this is run_api.
 */
inline RunTrace run_ns_api_fixed(const Mdp &mdp, const PeriodicPolicy &initial, std::size_t K, std::size_t m,
                                 const ErrorModel &errors, const TieBreakRule &rule) {
  if (m == 0) throw std::invalid_argument("period m must be at least 1");
  if (initial.period() != m) throw std::invalid_argument("initial policy period differs from m");
  if (K < m) throw std::invalid_argument("fixed-period API requires K >= m");
  require_valid(mdp);
  check_policy(mdp, initial);
  auto trace = detail::start_trace(Algorithm::ns_api_fixed, mdp, errors, m, m);
  for (std::size_t i = 1; i <= m; ++i) trace.policies.push_back(initial.phase(m - i));
  detail::run_policy_loop(mdp, trace, K, errors, rule, [&](const RunTrace &t, std::size_t k) {
    return eval_periodic(mdp, extract_periodic(t, k, m));
  });
  return trace;
}

} // namespace nsdp
