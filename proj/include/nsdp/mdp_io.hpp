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

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

// JSON layout of an MDP file (one UTF-8 object):
//
//   {"n_states": int, "n_actions": int, "gamma": number,
//    "rewards":     [[number per action] per state],
//    "available":   [[bool per action] per state],
//    "transitions": [[[[next_state, prob], ...] per action] per state]}
//
// Doubles are written with the shortest representation that round-trips,
// so read_mdp(write_mdp(m)) reproduces every field bit for bit.

namespace nsdp {

/// Malformed or schema-violating MDP text. `field()` names the JSON path.
class MdpFormatError : public std::runtime_error {
public:
  MdpFormatError(std::string field, const std::string &what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string &field() const { return field_; }

private:
  std::string field_;
};

/// File could not be opened or written.
class MdpIoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline const nlohmann::json &require_field(const nlohmann::json &obj, const char *name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw MdpFormatError(name, "missing required field");
  return *it;
}

inline std::size_t as_count(const nlohmann::json &j, const std::string &field) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw MdpFormatError(field, "expected a non-negative integer");
  return j.get<std::size_t>();
}

inline double as_number(const nlohmann::json &j, const std::string &field) {
  if (!j.is_number()) throw MdpFormatError(field, "expected a number");
  return j.get<double>();
}

inline const nlohmann::json &as_array(const nlohmann::json &j, const std::string &field, std::size_t expected) {
  if (!j.is_array()) throw MdpFormatError(field, "expected an array");
  if (j.size() != expected) {
    std::ostringstream os;
    os << "expected " << expected << " entries, found " << j.size();
    throw MdpFormatError(field, os.str());
  }
  return j;
}

inline std::string path(const char *root, std::size_t s) { return std::string(root) + "[" + std::to_string(s) + "]"; }

inline std::string path(const char *root, std::size_t s, std::size_t a) {
  return path(root, s) + "[" + std::to_string(a) + "]";
}

} // namespace detail

inline nlohmann::json to_json(const Mdp &mdp) {
  nlohmann::json j;
  j["n_states"] = mdp.n_states;
  j["n_actions"] = mdp.n_actions;
  j["gamma"] = mdp.gamma;
  auto rewards = nlohmann::json::array();
  auto available = nlohmann::json::array();
  auto transitions = nlohmann::json::array();
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    auto r = nlohmann::json::array();
    auto av = nlohmann::json::array();
    auto tr = nlohmann::json::array();
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      r.push_back(mdp.rewards[s][a]);
      av.push_back(static_cast<bool>(mdp.available[s][a]));
      auto row = nlohmann::json::array();
      for (const auto &t : mdp.transitions[s][a]) row.push_back({t.next_state, t.probability});
      tr.push_back(std::move(row));
    }
    rewards.push_back(std::move(r));
    available.push_back(std::move(av));
    transitions.push_back(std::move(tr));
  }
  j["rewards"] = std::move(rewards);
  j["available"] = std::move(available);
  j["transitions"] = std::move(transitions);
  return j;
}

/// Structural decode only; does not validate probabilities or gamma.
inline Mdp mdp_from_json(const nlohmann::json &j) {
  using detail::as_array;
  using detail::path;
  if (!j.is_object()) throw MdpFormatError("", "top-level value must be an object");
  Mdp mdp;
  mdp.n_states = detail::as_count(detail::require_field(j, "n_states"), "n_states");
  mdp.n_actions = detail::as_count(detail::require_field(j, "n_actions"), "n_actions");
  mdp.gamma = detail::as_number(detail::require_field(j, "gamma"), "gamma");
  const auto &rewards = as_array(detail::require_field(j, "rewards"), "rewards", mdp.n_states);
  const auto &available = as_array(detail::require_field(j, "available"), "available", mdp.n_states);
  const auto &transitions = as_array(detail::require_field(j, "transitions"), "transitions", mdp.n_states);

  mdp.rewards.assign(mdp.n_states, std::vector<double>(mdp.n_actions, 0.0));
  mdp.available.assign(mdp.n_states, std::vector<bool>(mdp.n_actions, false));
  mdp.transitions.assign(mdp.n_states, std::vector<TransitionRow>(mdp.n_actions));
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    const auto &rs = as_array(rewards[s], path("rewards", s), mdp.n_actions);
    const auto &as = as_array(available[s], path("available", s), mdp.n_actions);
    const auto &ts = as_array(transitions[s], path("transitions", s), mdp.n_actions);
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      mdp.rewards[s][a] = detail::as_number(rs[a], path("rewards", s, a));
      if (!as[a].is_boolean()) throw MdpFormatError(path("available", s, a), "expected a boolean");
      mdp.available[s][a] = as[a].get<bool>();
      const auto field = path("transitions", s, a);
      if (!ts[a].is_array()) throw MdpFormatError(field, "expected an array of [next_state, prob] pairs");
      auto &row = mdp.transitions[s][a];
      for (std::size_t e = 0; e < ts[a].size(); ++e) {
        const auto efield = field + "[" + std::to_string(e) + "]";
        const auto &pair = as_array(ts[a][e], efield, 2);
        row.push_back({detail::as_count(pair[0], efield + "[0]"), detail::as_number(pair[1], efield + "[1]")});
      }
    }
  }
  return mdp;
}

/// Parses and validates an MDP. Throws MdpFormatError on malformed text and
/// InvalidMdpError when the decoded MDP breaks an invariant.
inline Mdp parse_mdp(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    // nlohmann reports a byte offset; translate to a line number.
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw MdpFormatError("line " + std::to_string(line), e.what());
  }
  Mdp mdp = mdp_from_json(j);
  require_valid(mdp);
  return mdp;
}

inline std::string dump_mdp(const Mdp &mdp) { return to_json(mdp).dump() + "\n"; }

inline Mdp read_mdp(const std::filesystem::path &file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw MdpIoError("cannot open " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mdp(buf.str());
}

inline void write_mdp(const Mdp &mdp, const std::filesystem::path &file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw MdpIoError("cannot write " + file.string());
  out << dump_mdp(mdp);
  if (!out) throw MdpIoError("write failed for " + file.string());
}

} // namespace nsdp
