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

#include "nsdp/error_models.hpp"
#include "nsdp/mdp.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace nsdp {

/// Counter-based stream of uniforms; draws depend only on (seed, stream, index).
class CounterStream {
public:
  CounterStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  double uniform() { return rng::unit(rng::draw(seed_, stream_, index_++)); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [lo, hi].
  std::size_t integer(std::size_t lo, std::size_t hi) {
    const auto span = static_cast<double>(hi - lo + 1);
    return lo + std::min(hi - lo, static_cast<std::size_t>(uniform() * span));
  }

private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
};

// Distinct stream ids so MDP structure, initial policies and errors never
// share draws under one seed.
inline constexpr std::uint64_t kStructureStream = 0x5354525543540000ULL;
inline constexpr std::uint64_t kPolicyStream = 0x504f4c4943590000ULL;

/**
 * Random MDP with every action available. Each transition row is a draw
 * from the flat Dirichlet over all states (normalized exponentials) and
 * rewards are uniform on [-1, 1].
 */
inline Mdp random_mdp(std::size_t n_states, std::size_t n_actions, double gamma, std::uint64_t seed) {
  if (n_states == 0 || n_actions == 0) throw std::invalid_argument("random_mdp needs at least one state and action");
  Mdp mdp = empty_mdp(n_states, n_actions, gamma);
  CounterStream rs(seed, kStructureStream);
  std::vector<double> w(n_states);
  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      double total = 0.0;
      for (auto &x : w) {
        x = -std::log1p(-rs.uniform());
        total += x;
      }
      TransitionRow row;
      for (std::size_t t = 0; t < n_states; ++t)
        if (w[t] > 0.0) row.push_back({t, w[t] / total});
      set_action(mdp, s, a, rs.uniform(-1.0, 1.0), std::move(row));
    }
  }
  return mdp;
}

/// Uniformly random deterministic policy over available actions.
inline StationaryPolicy random_policy(const Mdp &mdp, std::uint64_t seed, std::uint64_t salt = 0) {
  CounterStream rs(seed, kPolicyStream ^ salt);
  StationaryPolicy pi;
  pi.action.resize(mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    const auto actions = mdp.available_actions(s);
    pi.action[s] = actions[rs.integer(0, actions.size() - 1)];
  }
  return pi;
}

} // namespace nsdp
