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
#include "nsdp/mdp.hpp"

#include <Eigen/LU>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace nsdp {

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/**
 * Affine map v -> offset + kernel * v.
 *
 * Built outermost-first: start from T_{phases[0]} and append inner
 * operators with then(), so that after appending phases[1..m-1] the map
 * equals T_{k,m} and `kernel` equals Gamma_{k,m}.
 */
struct AffineMap {
  ValueFunction offset;
  Matrix kernel;

  static AffineMap identity(std::size_t n) {
    const auto sz = static_cast<Eigen::Index>(n);
    return {ValueFunction::Zero(sz), Matrix::Identity(sz, sz)};
  }

  /// this ∘ T_pi.
  AffineMap &then(const Mdp &mdp, const StationaryPolicy &pi) {
    const auto n = static_cast<Eigen::Index>(mdp.n_states);
    ValueFunction r(n);
    for (std::size_t s = 0; s < mdp.n_states; ++s) r[static_cast<Eigen::Index>(s)] = mdp.reward(s, pi[s]);
    offset += kernel * r;
    // kernel <- kernel * gamma P_pi, column j accumulates over rows s of P_pi.
    Matrix next = Matrix::Zero(n, n);
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      const auto col = static_cast<Eigen::Index>(s);
      for (const auto &t : mdp.row(s, pi[s]))
        next.col(static_cast<Eigen::Index>(t.next_state)) += (mdp.gamma * t.probability) * kernel.col(col);
    }
    kernel = std::move(next);
    return *this;
  }

  ValueFunction operator()(const ValueFunction &v) const { return offset + kernel * v; }

  /// Solves (I - kernel) v = offset.
  ValueFunction fixed_point() const {
    const auto n = offset.size();
    Matrix system = Matrix::Identity(n, n) - kernel;
    Eigen::PartialPivLU<Matrix> lu(system);
    ValueFunction v = lu.solve(offset);
    if (!v.allFinite()) throw SolverError("policy evaluation produced non-finite values");
    return v;
  }
};

/// Composed affine form of T_{k,m} for the given phases.
inline AffineMap compose_periodic(const Mdp &mdp, const PeriodicPolicy &p) {
  check_policy(mdp, p);
  auto map = AffineMap::identity(mdp.n_states);
  for (const auto &phase : p.phases()) map.then(mdp, phase);
  return map;
}

inline double eval_residual_tolerance(const Mdp &mdp) { return 1e-10 * (1.0 + mdp.v_max()); }

/// v_pi from (I - gamma P_pi) v = r_pi.
inline ValueFunction eval_stationary(const Mdp &mdp, const StationaryPolicy &pi) {
  check_policy(mdp, pi);
  return AffineMap::identity(mdp.n_states).then(mdp, pi).fixed_point();
}

/// Value of the periodic policy: the fixed point of T_{k,m}.
inline ValueFunction eval_periodic(const Mdp &mdp, const PeriodicPolicy &p) {
  return compose_periodic(mdp, p).fixed_point();
}

struct OptimalSolution {
  ValueFunction value;
  StationaryPolicy policy;
  std::size_t iterations = 0;
};

/**
 * Howard policy iteration with exact evaluation. An action is only
 * replaced when another one beats it by more than the tie tolerance, which
 * guarantees termination in the presence of floating-point ties.
 */
inline OptimalSolution optimal_value(const Mdp &mdp, std::size_t max_iterations = 100000) {
  require_valid(mdp);
  OptimalSolution sol;
  sol.policy = first_available_policy(mdp);
  for (sol.iterations = 1; sol.iterations <= max_iterations; ++sol.iterations) {
    sol.value = eval_stationary(mdp, sol.policy);
    bool changed = false;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      const double current = action_value(mdp, s, sol.policy[s], sol.value);
      std::size_t best_a = sol.policy[s];
      double best_q = current;
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
        if (!mdp.is_available(s, a)) continue;
        const double q = action_value(mdp, s, a, sol.value);
        if (q > best_q) {
          best_q = q;
          best_a = a;
        }
      }
      if (best_q > current + kTieTolerance) {
        sol.policy.action[s] = best_a;
        changed = true;
      }
    }
    if (!changed) return sol;
  }
  throw std::logic_error("policy iteration exceeded its iteration limit");
}

/// Upper limit on n_actions^n_states for brute_force_oracle.
inline constexpr double kBruteForceLimit = 1e6;

/**
 * Enumerates every deterministic stationary policy, evaluates each exactly,
 * and returns the componentwise max value together with a policy attaining
 * it. Intended as ground truth on small instances.
 */
inline OptimalSolution brute_force_oracle(const Mdp &mdp) {
  require_valid(mdp);
  std::vector<std::vector<std::size_t>> choices(mdp.n_states);
  double count = 1.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    choices[s] = mdp.available_actions(s);
    count *= static_cast<double>(choices[s].size());
  }
  if (count > kBruteForceLimit) {
    std::ostringstream os;
    os << "brute force over " << count << " policies exceeds the limit of " << kBruteForceLimit;
    throw std::invalid_argument(os.str());
  }

  std::vector<std::size_t> digit(mdp.n_states, 0);
  StationaryPolicy pi;
  pi.action.resize(mdp.n_states);
  std::vector<std::pair<StationaryPolicy, ValueFunction>> all;
  all.reserve(static_cast<std::size_t>(count));
  while (true) {
    for (std::size_t s = 0; s < mdp.n_states; ++s) pi.action[s] = choices[s][digit[s]];
    all.emplace_back(pi, eval_stationary(mdp, pi));
    std::size_t s = 0;
    while (s < mdp.n_states && ++digit[s] == choices[s].size()) digit[s++] = 0;
    if (s == mdp.n_states) break;
  }

  OptimalSolution sol;
  sol.value = all.front().second;
  for (const auto &[p, v] : all) sol.value = sol.value.cwiseMax(v);
  // The argmax policy is the one closest to the componentwise max everywhere.
  double best_gap = -std::numeric_limits<double>::infinity();
  for (const auto &[p, v] : all) {
    const double gap = (v - sol.value).minCoeff();
    if (gap > best_gap) {
      best_gap = gap;
      sol.policy = p;
    }
  }
  sol.iterations = all.size();
  return sol;
}

/// ||v* - v||_inf, after checking that v does not exceed v*.
inline double loss(const ValueFunction &v_star, const ValueFunction &v, double tolerance = 1e-9) {
  if (v_star.size() != v.size()) throw DimensionError("loss: value functions differ in size");
  const double scale = 1.0 + max_norm(v_star);
  for (Eigen::Index s = 0; s < v.size(); ++s) {
    if (v[s] > v_star[s] + tolerance * scale) {
      std::ostringstream os;
      os.precision(17);
      os << "value " << v[s] << " exceeds optimal value " << v_star[s] << " in state " << s;
      throw std::logic_error(os.str());
    }
  }
  return v.size() == 0 ? 0.0 : std::max(0.0, (v_star - v).maxCoeff());
}

} // namespace nsdp
