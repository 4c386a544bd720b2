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

#include "nsdp/algorithms.hpp"
#include "nsdp/bellman.hpp"
#include "nsdp/mdp.hpp"
#include "nsdp/policy_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsdp {

namespace detail {

inline void require_gamma_eps(double gamma, double epsilon) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::domain_error("gamma must lie strictly inside (0,1)");
  if (!(epsilon >= 0.0)) throw std::domain_error("epsilon must be non-negative");
}

inline double ipow(double x, std::size_t n) { return std::pow(x, static_cast<double>(n)); }

} // namespace detail

/// Asymptotic loss of the last stationary policy of AVI/API: 2 gamma eps / (1-gamma)^2.
inline double bound_thm1(double gamma, double epsilon) {
  detail::require_gamma_eps(gamma, epsilon);
  return 2.0 * gamma * epsilon / ((1.0 - gamma) * (1.0 - gamma));
}

/// Loss of pi_{k,m} extracted from AVI; d0 = ||v* - v_0||.
inline double bound_thm2(double gamma, double epsilon, std::size_t k, std::size_t m, double d0) {
  detail::require_gamma_eps(gamma, epsilon);
  if (m == 0 || m > k) throw std::domain_error("bound_thm2 requires 1 <= m <= k");
  const double gk = detail::ipow(gamma, k);
  return 2.0 / (1.0 - detail::ipow(gamma, m)) * ((gamma - gk) / (1.0 - gamma) * epsilon + gk * d0);
}

/// Loss of pi_{k,k} for growing-period API; d1 = ||v* - v_{pi_{1,1}}||.
inline double bound_thm3(double gamma, double epsilon, std::size_t k, double d1, double v_max) {
  detail::require_gamma_eps(gamma, epsilon);
  if (k == 0) throw std::domain_error("bound_thm3 requires k >= 1");
  const double gk = detail::ipow(gamma, k);
  return 2.0 * (gamma - gk) / (1.0 - gamma) * epsilon + detail::ipow(gamma, k - 1) * d1 +
         2.0 * static_cast<double>(k - 1) * gk * v_max;
}

/// Loss of pi_{k,m} for fixed-period API; dm = ||v* - v_{pi_{m,m}}||.
inline double bound_thm4(double gamma, double epsilon, std::size_t k, std::size_t m, double dm) {
  detail::require_gamma_eps(gamma, epsilon);
  if (m == 0 || k < m) throw std::domain_error("bound_thm4 requires k >= m >= 1");
  return detail::ipow(gamma, k - m) * dm +
         2.0 * (gamma - detail::ipow(gamma, k + 1 - m)) / ((1.0 - gamma) * (1.0 - detail::ipow(gamma, m))) * epsilon;
}

/// Period giving a bound within 2/(1-e^{-1}) of the asymptotic non-stationary one.
inline std::size_t recommended_m(double gamma) {
  detail::require_gamma_eps(gamma, 0.0);
  // 1/(1-0.9) evaluates to 10.000000000000002; shave rounding noise before ceil.
  const double horizon = 1.0 / (1.0 - gamma);
  return static_cast<std::size_t>(std::ceil(horizon * (1.0 - 1e-12)));
}

enum class BoundCheck { thm1, thm2, thm3, thm4, lemma1, lemma2 };

inline const char *to_string(BoundCheck c) {
  switch (c) {
  case BoundCheck::thm1: return "thm1";
  case BoundCheck::thm2: return "thm2";
  case BoundCheck::thm3: return "thm3";
  case BoundCheck::thm4: return "thm4";
  case BoundCheck::lemma1: return "lemma1";
  case BoundCheck::lemma2: return "lemma2";
  }
  return "unknown";
}

/// Checks that make sense for the traces of each algorithm.
inline std::vector<BoundCheck> applicable_checks(Algorithm alg) {
  switch (alg) {
  case Algorithm::avi: return {BoundCheck::thm1, BoundCheck::thm2, BoundCheck::lemma1};
  case Algorithm::api: return {BoundCheck::thm1, BoundCheck::thm4, BoundCheck::lemma2};
  case Algorithm::ns_api_growing: return {BoundCheck::thm3};
  case Algorithm::ns_api_fixed: return {BoundCheck::thm4, BoundCheck::lemma2};
  }
  return {};
}

/// One measured quantity against its bound. margin = bound - loss.
struct BoundRow {
  std::size_t k = 0;
  std::size_t m = 1;
  double loss = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  std::string name;
};

struct TraceReport {
  std::vector<BoundRow> rows;
  double tolerance = 0.0;
  /// Set when the final stationary loss exceeds the limsup value of
  /// bound_thm1. Informational: finite-k losses may legitimately do so.
  bool thm1_asymptote_exceeded = false;

  std::size_t violations() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [&](const BoundRow &r) { return r.margin < -tolerance; }));
  }

  bool ok() const { return violations() == 0; }

  double min_margin() const {
    double out = std::numeric_limits<double>::infinity();
    for (const auto &r : rows) out = std::min(out, r.margin);
    return out;
  }

  void append(const TraceReport &other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    tolerance = std::max(tolerance, other.tolerance);
    thm1_asymptote_exceeded = thm1_asymptote_exceeded || other.thm1_asymptote_exceeded;
  }
};

/// Slack for empirical checks: all quantities come from direct solves.
inline double check_tolerance(const Mdp &mdp) { return 1e-8 * (1.0 + mdp.v_max()); }

/// Full-precision decimal for reports.
inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_report_csv(const TraceReport &report, std::ostream &out) {
  out << "k,loss,bound,margin,bound_name\n";
  for (const auto &r : report.rows)
    out << r.k << ',' << format_real(r.loss) << ',' << format_real(r.bound) << ',' << format_real(r.margin) << ','
        << r.name << '\n';
}

namespace detail {

inline std::string row_name(BoundCheck c, std::size_t m, bool with_m) {
  std::string name = to_string(c);
  if (with_m) name += "[m=" + std::to_string(m) + "]";
  return name;
}

inline void push_row(TraceReport &rep, BoundCheck c, std::size_t k, std::size_t m, double measured, double bound,
                     bool with_m) {
  rep.rows.push_back({k, m, measured, bound, bound - measured, row_name(c, m, with_m)});
}

inline void require_algorithm(const RunTrace &trace, BoundCheck c, std::initializer_list<Algorithm> allowed) {
  for (auto a : allowed)
    if (trace.algorithm == a) return;
  std::ostringstream os;
  os << to_string(c) << " does not apply to " << to_string(trace.algorithm) << " traces";
  throw std::invalid_argument(os.str());
}

// thm2 and lemma1 rows share the periodic evaluations of pi_{k,m}, built
// incrementally in m.
inline void check_avi_nonstationary(const RunTrace &trace, const Mdp &mdp, const ValueFunction &v_star,
                                    BoundCheck which, TraceReport &rep) {
  const double gamma = mdp.gamma;
  const double eps = trace.epsilon;
  const double d0 = max_norm(v_star - trace.value(0));
  for (std::size_t k = 1; k <= trace.last(); ++k) {
    const ValueFunction t_prev = apply_T(mdp, trace.value(k - 1));
    auto map = AffineMap::identity(mdp.n_states);
    for (std::size_t m = 1; m <= k; ++m) {
      map.then(mdp, trace.policy(k - m + 1));
      const ValueFunction v_km = map.fixed_point();
      if (which == BoundCheck::thm2) {
        push_row(rep, which, k, m, loss(v_star, v_km), bound_thm2(gamma, eps, k, m, d0), true);
      } else {
        const double lhs = max_norm(t_prev - v_km);
        const double gm = ipow(gamma, m);
        const double rhs = gm * max_norm(trace.value(k - m) - v_km) + (gamma - gm) / (1.0 - gamma) * eps;
        push_row(rep, which, k, m, lhs, rhs, true);
      }
    }
  }
}

} // namespace detail

/**
 * Measures every quantity bounded by `which` along `trace` and reports its
 * margin. Initial distances (d0, d1, dm) are measured from the trace
 * itself. bound_thm1 is an asymptotic value; thm1 rows use the finite-k
 * forms with m = 1 (bound_thm2 for AVI, bound_thm4 for API) and the
 * asymptotic value only raises `thm1_asymptote_exceeded`.
 */
inline TraceReport check_trace(const RunTrace &trace, const Mdp &mdp, BoundCheck which, const ValueFunction &v_star) {
  check_value(mdp, v_star);
  if (trace.values.empty()) throw std::invalid_argument("empty trace");
  TraceReport rep;
  rep.tolerance = check_tolerance(mdp);
  const double gamma = mdp.gamma;
  const double eps = trace.epsilon;

  switch (which) {
  case BoundCheck::thm1: {
    detail::require_algorithm(trace, which, {Algorithm::avi, Algorithm::api});
    if (trace.algorithm == Algorithm::avi) {
      const double d0 = max_norm(v_star - trace.value(0));
      for (std::size_t k = 1; k <= trace.last(); ++k)
        detail::push_row(rep, which, k, 1, loss(v_star, eval_stationary(mdp, trace.policy(k))),
                         bound_thm2(gamma, eps, k, 1, d0), false);
    } else {
      const double d1 = loss(v_star, trace.evaluated_value(1));
      for (std::size_t k = 1; k <= trace.last(); ++k)
        detail::push_row(rep, which, k, 1, loss(v_star, trace.evaluated_value(k)), bound_thm4(gamma, eps, k, 1, d1),
                         false);
    }
    rep.thm1_asymptote_exceeded = rep.rows.back().loss > bound_thm1(gamma, eps) + rep.tolerance;
    break;
  }
  case BoundCheck::thm2:
  case BoundCheck::lemma1:
    detail::require_algorithm(trace, which, {Algorithm::avi});
    detail::check_avi_nonstationary(trace, mdp, v_star, which, rep);
    break;
  case BoundCheck::thm3: {
    detail::require_algorithm(trace, which, {Algorithm::ns_api_growing});
    const double d1 = loss(v_star, trace.evaluated_value(1));
    for (std::size_t k = 1; k <= trace.last(); ++k)
      detail::push_row(rep, which, k, k, loss(v_star, trace.evaluated_value(k)),
                       bound_thm3(gamma, eps, k, d1, mdp.v_max()), false);
    break;
  }
  case BoundCheck::thm4: {
    detail::require_algorithm(trace, which, {Algorithm::api, Algorithm::ns_api_fixed});
    const std::size_t m = trace.period;
    const double dm = loss(v_star, trace.evaluated_value(m));
    for (std::size_t k = m; k <= trace.last(); ++k)
      detail::push_row(rep, which, k, m, loss(v_star, trace.evaluated_value(k)), bound_thm4(gamma, eps, k, m, dm),
                       false);
    break;
  }
  case BoundCheck::lemma2: {
    detail::require_algorithm(trace, which, {Algorithm::api, Algorithm::ns_api_fixed});
    const std::size_t m = trace.period;
    const double bound = 2.0 * gamma * eps / (1.0 - detail::ipow(gamma, m));
    for (std::size_t k = m; k <= trace.last(); ++k) {
      const ValueFunction next = eval_periodic(mdp, extract_periodic(trace, k + 1, m));
      const ValueFunction rotated = eval_periodic(mdp, rotate_periodic(extract_periodic(trace, k, m)));
      detail::push_row(rep, which, k, m, (rotated - next).maxCoeff(), bound, false);
    }
    break;
  }
  }
  return rep;
}

inline TraceReport check_trace(const RunTrace &trace, const Mdp &mdp, BoundCheck which) {
  return check_trace(trace, mdp, which, optimal_value(mdp).value);
}

/// Every applicable check for the trace's algorithm, concatenated.
inline TraceReport check_all(const RunTrace &trace, const Mdp &mdp, const ValueFunction &v_star) {
  TraceReport rep;
  rep.tolerance = check_tolerance(mdp);
  for (auto c : applicable_checks(trace.algorithm)) rep.append(check_trace(trace, mdp, c, v_star));
  return rep;
}

} // namespace nsdp
