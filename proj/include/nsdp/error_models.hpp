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

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nsdp {

/// Thrown when the adversarial chain schedule is requested past the chain end.
class ChainTooShortError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

namespace rng {

/// SplitMix64 finalizer; a bijective mix of a 64-bit counter.
constexpr std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stateless draw keyed by (seed, stream, index).
constexpr std::uint64_t draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return mix(mix(mix(seed) ^ stream) ^ index);
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

} // namespace rng

/**
 * Source of the additive errors epsilon_k.
 *
 *  - zero: epsilon_k = 0.
 *  - uniform: i.i.d. entries on [-bound, bound], a pure function of (seed, k, state).
 *  - adversarial_chain: -bound at chain state k, +bound at chain state k+1
 *    (1-indexed chain labels, i.e. storage indices k-1 and k), 0 elsewhere.
 */
struct ErrorModel {
  enum class Kind { zero, uniform, adversarial_chain };

  Kind kind = Kind::zero;
  double bound = 0.0;
  std::uint64_t seed = 0;

  static ErrorModel zero() { return {Kind::zero, 0.0, 0}; }
  static ErrorModel uniform(double bound, std::uint64_t seed) { return {Kind::uniform, checked(bound), seed}; }
  static ErrorModel adversarial_chain(double bound) { return {Kind::adversarial_chain, checked(bound), 0}; }

private:
  static double checked(double bound) {
    if (!(bound >= 0.0)) throw std::invalid_argument("error bound must be non-negative");
    return bound;
  }
};

inline const char *to_string(ErrorModel::Kind kind) {
  switch (kind) {
  case ErrorModel::Kind::zero: return "zero";
  case ErrorModel::Kind::uniform: return "uniform";
  case ErrorModel::Kind::adversarial_chain: return "adversarial";
  }
  return "unknown";
}

/// epsilon_k for iteration k >= 1.
inline ErrorVector emit(const ErrorModel &model, std::size_t k, std::size_t n_states) {
  if (k == 0) throw std::invalid_argument("error iterations are numbered from 1");
  const auto n = static_cast<Eigen::Index>(n_states);
  ErrorVector e{ValueFunction::Zero(n), model.bound};
  switch (model.kind) {
  case ErrorModel::Kind::zero: break;
  case ErrorModel::Kind::uniform:
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = rng::unit(rng::draw(model.seed, k, static_cast<std::uint64_t>(i)));
      // Clamp guards the rounding of -b + 2b*u against exceeding b.
      e.values[i] = std::min(model.bound, -model.bound + 2.0 * model.bound * u);
    }
    break;
  case ErrorModel::Kind::adversarial_chain:
    if (k + 1 > n_states) {
      std::ostringstream os;
      os << "chain too short: iteration " << k << " needs " << k + 1 << " states, chain has " << n_states;
      throw ChainTooShortError(os.str());
    }
    e.values[static_cast<Eigen::Index>(k - 1)] = -model.bound;
    e.values[static_cast<Eigen::Index>(k)] = model.bound;
    break;
  }
  return e;
}

} // namespace nsdp
