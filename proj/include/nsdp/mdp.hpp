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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nsdp {

/// Value function indexed by state (v, v_k, v_pi, v*).
using ValueFunction = Eigen::VectorXd;

/// Dense square matrix used for composed discounted kernels.
using Matrix = Eigen::MatrixXd;

/// Absolute tolerance on the sum of every transition row.
inline constexpr double kRowSumTolerance = 1e-12;

/// Thrown when vectors, policies and MDPs of different sizes are combined.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// One outgoing edge of a sparse transition row.
struct Transition {
  std::size_t next_state = 0;
  double probability = 0.0;

  friend bool operator==(const Transition &, const Transition &) = default;
};

using TransitionRow = std::vector<Transition>;

enum class ViolationKind {
  dimension,
  gamma_out_of_range,
  no_available_action,
  row_sum,
  negative_probability,
  next_state_out_of_range,
  non_finite,
  unavailable_not_empty,
};

inline const char *to_string(ViolationKind kind) {
  switch (kind) {
  case ViolationKind::dimension: return "dimension";
  case ViolationKind::gamma_out_of_range: return "gamma out of range";
  case ViolationKind::no_available_action: return "no available action";
  case ViolationKind::row_sum: return "row-sum";
  case ViolationKind::negative_probability: return "negative probability";
  case ViolationKind::next_state_out_of_range: return "next state out of range";
  case ViolationKind::non_finite: return "non-finite value";
  case ViolationKind::unavailable_not_empty: return "unavailable action not empty";
  }
  return "unknown";
}

/// A single invariant violation. `state`/`action` are -1 when the violation
/// is not tied to a location (e.g. gamma).
struct Violation {
  ViolationKind kind;
  long state = -1;
  long action = -1;
  std::string message;

  std::string describe() const {
    std::ostringstream os;
    os << to_string(kind);
    if (state >= 0) {
      os << " at (state " << state;
      if (action >= 0) os << ", action " << action;
      os << ")";
    }
    if (!message.empty()) os << ": " << message;
    return os.str();
  }
};

/**
 * Finite discounted MDP with a global action set and a per-state
 * availability mask. Transition rows are stored sparsely, indexed
 * [state][action]. Unavailable actions have empty rows and zero reward.
 *
 * Instances are plain values; nothing is validated on construction.
 * Call validate() (or use make_mdp()) before handing an MDP to a solver.
 */
struct Mdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  double gamma = 0.0;
  std::vector<std::vector<double>> rewards;
  std::vector<std::vector<bool>> available;
  std::vector<std::vector<TransitionRow>> transitions;

  bool is_available(std::size_t s, std::size_t a) const { return available[s][a]; }

  const TransitionRow &row(std::size_t s, std::size_t a) const { return transitions[s][a]; }

  double reward(std::size_t s, std::size_t a) const { return rewards[s][a]; }

  /// Max |r(s,a)| over available pairs.
  double r_max() const {
    double out = 0.0;
    for (std::size_t s = 0; s < n_states; ++s)
      for (std::size_t a = 0; a < n_actions; ++a)
        if (available[s][a]) out = std::max(out, std::abs(rewards[s][a]));
    return out;
  }

  /// Uniform bound on the value of any policy.
  double v_max() const { return r_max() / (1.0 - gamma); }

  std::vector<std::size_t> available_actions(std::size_t s) const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < n_actions; ++a)
      if (available[s][a]) out.push_back(a);
    return out;
  }

  friend bool operator==(const Mdp &, const Mdp &) = default;
};

/// Deterministic stationary policy: one action per state.
struct StationaryPolicy {
  std::vector<std::size_t> action;

  std::size_t size() const { return action.size(); }
  std::size_t operator[](std::size_t s) const { return action[s]; }

  friend bool operator==(const StationaryPolicy &, const StationaryPolicy &) = default;
};

/**
 * Periodic non-stationary policy. phases[0] acts at the first step, then
 * phases[1], ... phases[m-1], and the cycle repeats. For the policy that
 * loops over the last m greedy policies, phases = [pi_k, pi_{k-1}, ...,
 * pi_{k-m+1}].
 */
class PeriodicPolicy {
public:
  explicit PeriodicPolicy(std::vector<StationaryPolicy> phases) : phases_(std::move(phases)) {
    if (phases_.empty()) throw std::invalid_argument("periodic policy needs at least one phase");
    for (const auto &p : phases_)
      if (p.size() != phases_.front().size())
        throw DimensionError("periodic policy phases have different sizes");
  }

  explicit PeriodicPolicy(StationaryPolicy single)
      : PeriodicPolicy(std::vector<StationaryPolicy>{std::move(single)}) {}

  std::size_t period() const { return phases_.size(); }
  const std::vector<StationaryPolicy> &phases() const { return phases_; }
  const StationaryPolicy &phase(std::size_t i) const { return phases_.at(i); }

  friend bool operator==(const PeriodicPolicy &, const PeriodicPolicy &) = default;

private:
  std::vector<StationaryPolicy> phases_;
};

/// Additive per-iteration error with its declared max-norm bound.
struct ErrorVector {
  ValueFunction values;
  double bound = 0.0;

  double norm() const { return values.size() == 0 ? 0.0 : values.cwiseAbs().maxCoeff(); }
};

inline double max_norm(const ValueFunction &v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

/// Returns every invariant violation of `mdp`; empty iff it is well formed.
inline std::vector<Violation> validate(const Mdp &mdp) {
  std::vector<Violation> out;
  if (!(mdp.gamma > 0.0 && mdp.gamma < 1.0)) {
    std::ostringstream os;
    os << "gamma = " << mdp.gamma << " must lie strictly inside (0,1)";
    out.push_back({ViolationKind::gamma_out_of_range, -1, -1, os.str()});
  }
  if (mdp.n_states == 0 || mdp.n_actions == 0) {
    out.push_back({ViolationKind::dimension, -1, -1, "n_states and n_actions must be positive"});
    return out;
  }
  if (mdp.rewards.size() != mdp.n_states || mdp.available.size() != mdp.n_states ||
      mdp.transitions.size() != mdp.n_states) {
    out.push_back({ViolationKind::dimension, -1, -1, "tables must have n_states rows"});
    return out;
  }
  const auto n = static_cast<long>(mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    const long ls = static_cast<long>(s);
    if (mdp.rewards[s].size() != mdp.n_actions || mdp.available[s].size() != mdp.n_actions ||
        mdp.transitions[s].size() != mdp.n_actions) {
      out.push_back({ViolationKind::dimension, ls, -1, "tables must have n_actions columns"});
      continue;
    }
    bool any = false;
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      const long la = static_cast<long>(a);
      const auto &row = mdp.transitions[s][a];
      if (!mdp.available[s][a]) {
        if (!row.empty() || mdp.rewards[s][a] != 0.0)
          out.push_back({ViolationKind::unavailable_not_empty, ls, la,
                         "unavailable actions carry no transitions and zero reward"});
        continue;
      }
      any = true;
      if (!std::isfinite(mdp.rewards[s][a]))
        out.push_back({ViolationKind::non_finite, ls, la, "reward is not finite"});
      double sum = 0.0;
      bool finite = true;
      for (const auto &t : row) {
        if (!std::isfinite(t.probability)) {
          finite = false;
          continue;
        }
        if (t.probability < 0.0) {
          std::ostringstream os;
          os << "probability " << t.probability << " to state " << t.next_state;
          out.push_back({ViolationKind::negative_probability, ls, la, os.str()});
        }
        if (static_cast<long>(t.next_state) >= n) {
          std::ostringstream os;
          os << "next state " << t.next_state << " >= n_states " << n;
          out.push_back({ViolationKind::next_state_out_of_range, ls, la, os.str()});
        }
        sum += t.probability;
      }
      if (!finite) {
        out.push_back({ViolationKind::non_finite, ls, la, "probability is not finite"});
      } else if (std::abs(sum - 1.0) > kRowSumTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "row sums to " << sum;
        out.push_back({ViolationKind::row_sum, ls, la, os.str()});
      }
    }
    if (!any) out.push_back({ViolationKind::no_available_action, ls, -1, "state has no available action"});
  }
  return out;
}

/// Thrown when an MDP fails validation; carries the violation list.
class InvalidMdpError : public std::invalid_argument {
public:
  explicit InvalidMdpError(std::vector<Violation> violations)
      : std::invalid_argument(summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<Violation> &violations() const { return violations_; }

private:
  static std::string summarize(const std::vector<Violation> &violations) {
    std::ostringstream os;
    os << "invalid MDP (" << violations.size() << " violation" << (violations.size() == 1 ? "" : "s") << ")";
    for (const auto &v : violations) os << "\n  " << v.describe();
    return os.str();
  }

  std::vector<Violation> violations_;
};

inline void require_valid(const Mdp &mdp) {
  auto violations = validate(mdp);
  if (!violations.empty()) throw InvalidMdpError(std::move(violations));
}

/// Allocates an MDP with every action unavailable, ready to be filled in.
inline Mdp empty_mdp(std::size_t n_states, std::size_t n_actions, double gamma) {
  Mdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.rewards.assign(n_states, std::vector<double>(n_actions, 0.0));
  mdp.available.assign(n_states, std::vector<bool>(n_actions, false));
  mdp.transitions.assign(n_states, std::vector<TransitionRow>(n_actions));
  return mdp;
}

/// Marks (s,a) available with the given reward and transition row.
inline void set_action(Mdp &mdp, std::size_t s, std::size_t a, double reward, TransitionRow row) {
  mdp.available[s][a] = true;
  mdp.rewards[s][a] = reward;
  mdp.transitions[s][a] = std::move(row);
}

inline void check_value(const Mdp &mdp, const ValueFunction &v) {
  if (static_cast<std::size_t>(v.size()) != mdp.n_states) {
    std::ostringstream os;
    os << "value function has " << v.size() << " entries, MDP has " << mdp.n_states << " states";
    throw DimensionError(os.str());
  }
}

inline void check_policy(const Mdp &mdp, const StationaryPolicy &pi) {
  if (pi.size() != mdp.n_states) {
    std::ostringstream os;
    os << "policy has " << pi.size() << " entries, MDP has " << mdp.n_states << " states";
    throw DimensionError(os.str());
  }
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    if (pi[s] >= mdp.n_actions || !mdp.available[s][pi[s]]) {
      std::ostringstream os;
      os << "policy picks unavailable action " << pi[s] << " in state " << s;
      throw std::invalid_argument(os.str());
    }
  }
}

inline void check_policy(const Mdp &mdp, const PeriodicPolicy &p) {
  for (const auto &phase : p.phases()) check_policy(mdp, phase);
}

/// Policy taking the lowest-indexed available action everywhere.
inline StationaryPolicy first_available_policy(const Mdp &mdp) {
  StationaryPolicy pi;
  pi.action.resize(mdp.n_states, 0);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      if (mdp.available[s][a]) {
        pi.action[s] = a;
        break;
      }
    }
  }
  return pi;
}

} // namespace nsdp
