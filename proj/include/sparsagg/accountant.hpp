// Copyright 2026 The sparsagg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Renyi-DP accounting for the subsampled Gaussian mechanism, composition
// over rounds, conversion to (epsilon, delta)-DP and the closed-form noise
// requirement.

#ifndef SPARSAGG_ACCOUNTANT_HPP_
#define SPARSAGG_ACCOUNTANT_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sparsagg {

namespace detail {

inline double log_binom(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double log_sum_exp(const std::vector<double>& xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace detail

/// tau'(alpha) = 1/(alpha-1) * log(1 + 2 q^2 C(alpha,2) min(2e^{(alpha-1)^2/sigma^2} - 1, e^{alpha^2/sigma^2})
///               + sum_{j=3}^{alpha} 2 q^j C(alpha,j) e^{j(j-1)/(2 sigma^2)}),
/// evaluated in the log domain.
inline double rdp_subsampled_full(int alpha, double q, double sigma) {
  if (alpha < 2) throw std::invalid_argument("rdp_subsampled_full: alpha must be >= 2");
  if (!(q >= 0 && q <= 1) || !(sigma > 0)) throw std::invalid_argument("rdp_subsampled_full: bad q or sigma");
  if (q == 0) return 0.0;
  const double s2 = sigma * sigma, lq = std::log(q), l2 = std::log(2.0);
  const double a = static_cast<double>(alpha);
  // log(2e^x - 1) = x + log(2 - e^-x) for x >= 0.
  const double x = (a - 1) * (a - 1) / s2;
  const double second = std::min(x + std::log(2.0 - std::exp(-x)), a * a / s2);
  std::vector<double> terms{0.0, l2 + 2 * lq + detail::log_binom(alpha, 2) + second};
  for (int j = 3; j <= alpha; ++j) {
    terms.push_back(l2 + j * lq + detail::log_binom(alpha, j) + j * (j - 1.0) / (2 * s2));
  }
  return detail::log_sum_exp(terms) / (a - 1);
}

/// tau = 3.5 q^2 alpha / sigma^2.
inline double rdp_simplified(double alpha, double q, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("rdp_simplified: sigma must be positive");
  return 3.5 * q * q * alpha / (sigma * sigma);
}

/// epsilon = T tau + log(1/delta)/(alpha-1).
inline double compose_and_convert(double tau, long rounds, double alpha, double delta) {
  if (!(alpha > 1)) throw std::invalid_argument("compose_and_convert: alpha must exceed 1");
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("compose_and_convert: delta outside (0, 1)");
  if (rounds < 0 || tau < 0) throw std::invalid_argument("compose_and_convert: negative input");
  return static_cast<double>(rounds) * tau + std::log(1.0 / delta) / (alpha - 1.0);
}

struct PrivacyEstimate {
  double epsilon = 0.0;
  int alpha_star = 0;
  double tau = 0.0;  // per-round RDP at alpha_star
};

inline constexpr int kAlphaMin = 2;
inline constexpr int kAlphaMax = 256;

/// Full-formula epsilon minimized over integer alpha in [2, 256].
inline PrivacyEstimate optimize_epsilon(double q, double sigma, double delta, long rounds) {
  PrivacyEstimate best;
  best.epsilon = std::numeric_limits<double>::infinity();
  for (int a = kAlphaMin; a <= kAlphaMax; ++a) {
    const double tau = rdp_subsampled_full(a, q, sigma);
    const double eps = compose_and_convert(tau, rounds, a, delta);
    if (eps < best.epsilon) best = {eps, a, tau};
  }
  return best;
}

/// alpha = 1 + 2 log(1/delta)/epsilon.
inline double closed_form_alpha(double epsilon, double delta) { return 1.0 + 2.0 * std::log(1.0 / delta) / epsilon; }

/// sigma^2 = 14 q^2 T log(1/delta)/epsilon^2 + 7 q^2 T/epsilon, valid for
/// epsilon < 2 log(1/delta).
inline double sigma_for_budget(double epsilon, double delta, double q, long rounds) {
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("sigma_for_budget: delta outside (0, 1)");
  if (!(epsilon > 0) || !(epsilon < 2 * std::log(1.0 / delta)))
    throw std::invalid_argument("sigma_for_budget: need 0 < epsilon < 2 log(1/delta)");
  if (!(q > 0 && q <= 1) || rounds < 1) throw std::invalid_argument("sigma_for_budget: bad q or T");
  const double L = std::log(1.0 / delta), T = static_cast<double>(rounds);
  return 14 * q * q * T * L / (epsilon * epsilon) + 7 * q * q * T / epsilon;
}

/// epsilon' from the simplified bound at the closed-form alpha; equals
/// epsilon up to rounding when sigma^2 comes from sigma_for_budget.
inline double simplified_round_trip(double epsilon, double delta, double q, long rounds) {
  const double s2 = sigma_for_budget(epsilon, delta, q, rounds);
  const double alpha = closed_form_alpha(epsilon, delta);
  return compose_and_convert(rdp_simplified(alpha, q, std::sqrt(s2)), rounds, alpha, delta);
}

}  // namespace sparsagg

#endif  // SPARSAGG_ACCOUNTANT_HPP_
