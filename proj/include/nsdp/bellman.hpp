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

#include "nsdp/mdp.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace nsdp {

/// Absolute slack on action-values when collecting the greedy set.
inline constexpr double kTieTolerance = 1e-9;

/// r(s,a) + gamma * sum_{s'} P(s'|s,a) v(s').
inline double action_value(const Mdp &mdp, std::size_t s, std::size_t a, const ValueFunction &v) {
  double acc = 0.0;
  for (const auto &t : mdp.row(s, a)) acc += t.probability * v[static_cast<Eigen::Index>(t.next_state)];
  return mdp.reward(s, a) + mdp.gamma * acc;
}

/// T_pi v = r_pi + gamma P_pi v.
inline ValueFunction apply_T_pi(const Mdp &mdp, const StationaryPolicy &pi, const ValueFunction &v) {
  check_value(mdp, v);
  check_policy(mdp, pi);
  ValueFunction out(v.size());
  for (std::size_t s = 0; s < mdp.n_states; ++s)
    out[static_cast<Eigen::Index>(s)] = action_value(mdp, s, pi[s], v);
  return out;
}

/// Bellman optimality operator: max over available actions.
inline ValueFunction apply_T(const Mdp &mdp, const ValueFunction &v) {
  check_value(mdp, v);
  ValueFunction out(v.size());
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      if (mdp.is_available(s, a)) best = std::max(best, action_value(mdp, s, a, v));
    out[static_cast<Eigen::Index>(s)] = best;
  }
  return out;
}

/// gamma P_pi v, the linear part of T_pi.
inline ValueFunction apply_discounted_kernel(const Mdp &mdp, const StationaryPolicy &pi, const ValueFunction &v) {
  ValueFunction out(v.size());
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    double acc = 0.0;
    for (const auto &t : mdp.row(s, pi[s])) acc += t.probability * v[static_cast<Eigen::Index>(t.next_state)];
    out[static_cast<Eigen::Index>(s)] = mdp.gamma * acc;
  }
  return out;
}

/// Per-state set of actions whose action-value is within `tolerance` of the best.
using GreedySet = std::vector<std::vector<std::size_t>>;

inline GreedySet greedy_set(const Mdp &mdp, const ValueFunction &v, double tolerance = kTieTolerance) {
  check_value(mdp, v);
  GreedySet out(mdp.n_states);
  std::vector<double> q(mdp.n_actions);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      if (!mdp.is_available(s, a)) continue;
      q[a] = action_value(mdp, s, a, v);
      best = std::max(best, q[a]);
    }
    for (std::size_t a = 0; a < mdp.n_actions; ++a)
      if (mdp.is_available(s, a) && q[a] >= best - tolerance) out[s].push_back(a);
  }
  return out;
}

/**
 * Chooses one action from a non-empty, ascending set of tied greedy actions.
 *
 * The callback receives the state, the tied set and the iteration index,
 * which is the index of the policy being produced (pi_{k+1} when acting
 * greedily on v_k).
 */
class TieBreakRule {
public:
  using Callback = std::function<std::size_t(std::size_t state, std::span<const std::size_t> tied, std::size_t iteration)>;

  enum class Kind { lowest_index, highest_index, callback };

  static TieBreakRule lowest_index() { return TieBreakRule(Kind::lowest_index, {}); }
  static TieBreakRule highest_index() { return TieBreakRule(Kind::highest_index, {}); }
  static TieBreakRule from_callback(Callback fn) { return TieBreakRule(Kind::callback, std::move(fn)); }

  Kind kind() const { return kind_; }

  std::size_t choose(std::size_t state, std::span<const std::size_t> tied, std::size_t iteration) const {
    switch (kind_) {
    case Kind::lowest_index: return tied.front();
    case Kind::highest_index: return tied.back();
    case Kind::callback: break;
    }
    const std::size_t a = callback_(state, tied, iteration);
    if (std::find(tied.begin(), tied.end(), a) == tied.end()) {
      std::ostringstream os;
      os << "tie-break callback returned action " << a << " outside the greedy set of state " << state;
      throw std::logic_error(os.str());
    }
    return a;
  }

private:
  TieBreakRule(Kind kind, Callback fn) : kind_(kind), callback_(std::move(fn)) {}

  Kind kind_;
  Callback callback_;
};

/// A member of G(v) picked state by state with `rule`.
inline StationaryPolicy greedy_policy(const Mdp &mdp, const ValueFunction &v, const TieBreakRule &rule,
                                      std::size_t iteration, double tolerance = kTieTolerance) {
  const auto tied = greedy_set(mdp, v, tolerance);
  StationaryPolicy pi;
  pi.action.resize(mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s) pi.action[s] = rule.choose(s, tied[s], iteration);
  return pi;
}

/// T_{k,m} v: phases applied last to first, so phases[0] is outermost.
inline ValueFunction apply_T_km(const Mdp &mdp, const PeriodicPolicy &phases, const ValueFunction &v) {
  check_value(mdp, v);
  check_policy(mdp, phases);
  ValueFunction out = v;
  for (std::size_t i = phases.period(); i-- > 0;) out = apply_T_pi(mdp, phases.phase(i), out);
  return out;
}

/// Gamma_{k,m} v = (gamma P_{phases[0]}) ... (gamma P_{phases[m-1]}) v.
inline ValueFunction apply_Gamma_km(const Mdp &mdp, const PeriodicPolicy &phases, const ValueFunction &v) {
  check_value(mdp, v);
  check_policy(mdp, phases);
  ValueFunction out = v;
  for (std::size_t i = phases.period(); i-- > 0;) out = apply_discounted_kernel(mdp, phases.phase(i), out);
  return out;
}

} // namespace nsdp
