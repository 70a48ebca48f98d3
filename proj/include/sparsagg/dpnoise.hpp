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

// Discrete Gaussian sampling, distributed noise addition and the
// two-sample KS verification of each server's noise.

#ifndef SPARSAGG_DPNOISE_HPP_
#define SPARSAGG_DPNOISE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparsagg/adversary.hpp"
#include "sparsagg/correlated.hpp"
#include "sparsagg/errors.hpp"
#include "sparsagg/field.hpp"
#include "sparsagg/net.hpp"
#include "sparsagg/prg.hpp"
#include "sparsagg/rss.hpp"

namespace sparsagg {

namespace detail {

inline bool bernoulli_exp(double gamma, ChaChaRng& rng) { return rng.uniform01() < std::exp(-gamma); }

/// One draw from N_Z(0, s^2) by rejection from a discrete Laplace proposal
/// with scale t = floor(s) + 1 (Canonne, Kamath and Steinke, 2020).
inline std::int64_t discrete_gaussian_one(double s, ChaChaRng& rng) {
  const double sigma2 = s * s;
  const std::uint64_t t = static_cast<std::uint64_t>(std::floor(s)) + 1;
  const double td = static_cast<double>(t);
  for (;;) {
    // Discrete Laplace with scale t: |Y| = U + t*V, U uniform, V geometric.
    const std::uint64_t u = rng.below(t);
    if (!bernoulli_exp(static_cast<double>(u) / td, rng)) continue;
    std::uint64_t v = 0;
    while (bernoulli_exp(1.0, rng)) ++v;
    const bool negative = (rng() & 1) != 0;
    const std::uint64_t y = u + t * v;
    if (negative && y == 0) continue;
    const double dev = static_cast<double>(y) - sigma2 / td;
    if (!bernoulli_exp(dev * dev / (2.0 * sigma2), rng)) continue;
    return negative ? -static_cast<std::int64_t>(y) : static_cast<std::int64_t>(y);
  }
}

}  // namespace detail

/// n exact-in-distribution samples from the discrete Gaussian with scale
/// `std_int` (std_int = 0 gives zeros).
inline std::vector<std::int64_t> sample_discrete_gaussian(double std_int, std::size_t n, ChaChaRng& rng) {
  if (!(std_int >= 0) || !std::isfinite(std_int)) throw std::invalid_argument("discrete gaussian: bad scale");
  std::vector<std::int64_t> out(n, 0);
  if (std_int == 0) return out;
  for (auto& x : out) x = detail::discrete_gaussian_one(std_int, rng);
  return out;
}

inline FpVector encode_integers(std::span<const std::int64_t> v) {
  FpVector out;
  out.reserve(v.size());
  for (std::int64_t x : v) out.push_back(Fp::from_signed(x));
  return out;
}

inline std::vector<std::int64_t> decode_integers(std::span<const Fp> v) {
  std::vector<std::int64_t> out;
  out.reserve(v.size());
  for (Fp x : v) out.push_back(x.centered());
  return out;
}

struct NoiseParams {
  double sigma = 0.0;  // noise multiplier
  double clip = 1.0;   // C
  std::size_t dim = 0;
  int frac_bits = FixedPointCodec::kDefaultFracBits;
  double ks_alpha = 0.05;

  /// Integer-grid std of each server's share N_Z(0, sigma^2 C^2 / 2).
  double per_server_std_int() const { return sigma * clip * std::ldexp(1.0, frac_bits) / std::sqrt(2.0); }

  /// Rejects settings where noise at six standard deviations plus n
  /// clipped updates could wrap around the field.
  void validate(std::size_t num_clients) const {
    if (!(sigma >= 0) || !(clip > 0)) throw std::invalid_argument("NoiseParams: need sigma >= 0 and C > 0");
    if (!(ks_alpha > 0 && ks_alpha < 1)) throw std::invalid_argument("NoiseParams: KS alpha must be in (0, 1)");
    const double budget = 3.0 * 6.0 * per_server_std_int() +
                          static_cast<double>(num_clients) * clip * std::ldexp(1.0, frac_bits);
    if (budget >= static_cast<double>(Fp::kModulus) / 2) throw std::invalid_argument("NoiseParams: field too small");
  }
};

/// Server `dealer` secret-shares its own vector v. Shares dealer and
/// dealer+1 come from the pair keys it has with its neighbours, and the
/// remainder goes to both neighbours: 2 * |v| elements on the wire.
inline SharedVector deal_shared(Network& net, const std::array<PartyKeys, 3>& keys, PartyId dealer,
                                std::span<const Fp> v, const std::string& prf_tag, std::uint8_t t,
                                std::uint32_t round) {
  const std::size_t n = v.size();
  const PartyId prev = dealer.prev(), next = dealer.next();
  FpVector s_self = prg_expand(keys[dealer].prev_pair, prf_tag, n);
  FpVector s_next = prg_expand(keys[dealer].next_pair, prf_tag, n);
  FpVector rest(v.begin(), v.end());
  sub_into(rest, s_self);
  sub_into(rest, s_next);
  net.send_elements(Endpoint::server(dealer), Endpoint::server(prev), t, round, rest);
  net.send_elements(Endpoint::server(dealer), Endpoint::server(next), t, round, rest);

  SharedVector out;
  out[dealer] = RssVector{dealer, std::move(s_self), std::move(s_next)};
  FpVector at_prev = net.recv_elements(Endpoint::server(dealer), Endpoint::server(prev), t);
  out[prev] = RssVector{prev, std::move(at_prev), prg_expand(keys[prev].next_pair, prf_tag, n)};
  FpVector at_next = net.recv_elements(Endpoint::server(dealer), Endpoint::server(next), t);
  out[next] = RssVector{next, prg_expand(keys[next].prev_pair, prf_tag, n), std::move(at_next)};
  for (const RssVector& r : out)
    if (r.size() != n) throw std::runtime_error("deal_shared: short message");
  return out;
}

/// Each server's noise in the clear (for bookkeeping and tests) and shared.
struct ServerNoise {
  std::array<std::vector<std::int64_t>, 3> eta;
  std::array<SharedVector, 3> shared;
};

inline std::string noise_tag(std::uint32_t round, std::string_view what, int party) {
  return "noise/r" + std::to_string(round) + "/" + std::string(what) + "/p" + std::to_string(party);
}

/// Every server samples eta_i ~ N_Z(0, sigma^2 C^2 / 2) on the fixed-point
/// grid and deals it.
inline ServerNoise sample_and_share_noise(Network& net, const std::array<PartyKeys, 3>& keys, const NoiseParams& np,
                                          std::uint32_t round, const AdversaryBehavior* adv = nullptr) {
  net.begin_phase("noise/deal");
  ServerNoise out;
  for (int i = 0; i < 3; ++i) {
    double s = np.per_server_std_int();
    if (adv && adv->is(AdversaryKind::kInflatedNoise, PartyId(i))) s *= adv->factor;
    ChaChaRng rng(keys[i].own, noise_tag(round, "eta", i));
    out.eta[i] = sample_discrete_gaussian(s, np.dim, rng);
    out.shared[i] =
        deal_shared(net, keys, PartyId(i), encode_integers(out.eta[i]), noise_tag(round, "eta", i), tag::kNoiseDeal, round);
  }
  return out;
}

/// [Delta] + [eta_0] + [eta_1] + [eta_2].
inline SharedVector sec_noise_add(const SharedVector& delta, const ServerNoise& noise) {
  SharedVector out = delta;
  for (const SharedVector& s : noise.shared) out = add_shared(out, s);
  return out;
}

/// Convenience form that samples, deals and adds in one call.
inline SharedVector sec_noise_add(Network& net, const std::array<PartyKeys, 3>& keys, const SharedVector& delta,
                                  const NoiseParams& np, std::uint32_t round, ServerNoise* noise_out = nullptr) {
  ServerNoise n = sample_and_share_noise(net, keys, np, round);
  SharedVector out = sec_noise_add(delta, n);
  if (noise_out) *noise_out = std::move(n);
  return out;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov.

/// sup_y |F_a(y) - F_b(y)| by merging the sorted samples; ties advance both
/// sides past the shared value before the gap is measured.
template <typename T>
double ks_two_sample(std::span<const T> a_in, std::span<const T> b_in) {
  if (a_in.empty() || b_in.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<T> a(a_in.begin(), a_in.end()), b(b_in.begin(), b_in.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const T y = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == y) ++i;
    while (j < b.size() && b[j] == y) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

template <typename T>
double ks_two_sample(const std::vector<T>& a, const std::vector<T>& b) {
  return ks_two_sample(std::span<const T>(a), std::span<const T>(b));
}

/// D_crit = sqrt(-ln(alpha/2) / 2) * sqrt(2 / d).
inline double ks_critical(double alpha, std::size_t d) {
  if (d < 1) throw std::invalid_argument("ks_critical: d must be positive");
  if (!(alpha > 0 && alpha <= 2)) throw std::invalid_argument("ks_critical: alpha outside (0, 2]");
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) * std::sqrt(2.0 / static_cast<double>(d));
}

struct KsReport {
  int party = 0;       // server whose noise was tested
  int verifier = 0;    // server that ran the test
  double d_ks = 0.0;
  double d_crit = 0.0;
  double alpha = 0.05;
  bool pass = true;
  std::string mask_seed;       // hex, rng seed of the mask xi
  std::string reference_seed;  // hex, rng seed of the reference sample
};

/// Tests server i's shared noise. S_{i+1} deals a mask xi; the shares of
/// kappa = eta_i + xi are opened to S_{i-1} with both copies of the missing
/// share compared; S_{i-1} runs the KS test against a fresh reference
/// sample from N_Z(0, sigma^2 C^2).
inline KsReport verify_noise_round(Network& net, const std::array<PartyKeys, 3>& keys, PartyId i,
                                   const SharedVector& eta_i, const NoiseParams& np, std::uint32_t round,
                                   const AdversaryBehavior* adv = nullptr) {
  const PartyId masker = i.next(), verifier = i.prev();
  KsReport rep;
  rep.party = i;
  rep.verifier = verifier;
  rep.alpha = np.ks_alpha;

  net.begin_phase("noise/verify-mask");
  const Seed mask_seed = keys[masker].own.derive(noise_tag(round, "mask", i));
  rep.mask_seed = mask_seed.hex();
  double mask_std = np.per_server_std_int();
  if (adv && adv->is(AdversaryKind::kInflatedNoise, masker)) mask_std *= adv->factor;
  ChaChaRng mask_rng(mask_seed, "mask");
  const auto xi = sample_discrete_gaussian(mask_std, np.dim, mask_rng);
  SharedVector xi_shared =
      deal_shared(net, keys, masker, encode_integers(xi), noise_tag(round, "mask", i), tag::kMaskDeal, round);
  SharedVector kappa = add_shared(eta_i, xi_shared);

  net.begin_phase("noise/verify-open");
  const FpVector opened = open_to(net, kappa, verifier, Mode::kMalicious, tag::kKappaOpen, round);
  const auto k_int = decode_integers(opened);

  const Seed ref_seed = keys[verifier].own.derive(noise_tag(round, "reference", i));
  rep.reference_seed = ref_seed.hex();
  ChaChaRng ref_rng(ref_seed, "reference");
  const auto ref = sample_discrete_gaussian(np.per_server_std_int() * std::sqrt(2.0), np.dim, ref_rng);

  if (np.dim == 0) return rep;
  rep.d_ks = ks_two_sample(k_int, ref);
  rep.d_crit = ks_critical(np.ks_alpha, np.dim);
  rep.pass = rep.d_ks <= rep.d_crit;
  return rep;
}

/// Runs the test for all three servers; throws NoiseKsAbort after all three
/// reports are written to `reports` if any failed.
inline std::array<KsReport, 3> verify_all_noise(Network& net, const std::array<PartyKeys, 3>& keys,
                                                const ServerNoise& noise, const NoiseParams& np, std::uint32_t round,
                                                const AdversaryBehavior* adv = nullptr,
                                                std::array<KsReport, 3>* reports = nullptr) {
  std::array<KsReport, 3> reps;
  for (int i = 0; i < 3; ++i) reps[i] = verify_noise_round(net, keys, PartyId(i), noise.shared[i], np, round, adv);
  if (reports) *reports = reps;
  std::string failed;
  for (const KsReport& r : reps)
    if (!r.pass) failed += (failed.empty() ? "S" : ", S") + std::to_string(r.party);
  if (!failed.empty()) throw NoiseKsAbort("KS test rejected the noise of " + failed);
  return reps;
}

}  // namespace sparsagg

#endif  // SPARSAGG_DPNOISE_HPP_
