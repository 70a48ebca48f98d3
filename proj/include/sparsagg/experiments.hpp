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

// Experiment drivers shared by the command-line tool and the acceptance
// suite. Each takes a config and a seed and returns plain results; reports
// are built from them by the caller.

#ifndef SPARSAGG_EXPERIMENTS_HPP_
#define SPARSAGG_EXPERIMENTS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sparsagg/accountant.hpp"
#include "sparsagg/adversary.hpp"
#include "sparsagg/dpnoise.hpp"
#include "sparsagg/fltrain.hpp"
#include "sparsagg/permutation.hpp"
#include "sparsagg/sparvecagg.hpp"

namespace sparsagg {

/// k distinct indices drawn uniformly (partial Fisher-Yates), ascending.
inline std::vector<std::uint64_t> random_support(std::size_t d, std::size_t k, ChaChaRng& rng) {
  if (k > d) throw std::invalid_argument("random_support: k exceeds d");
  std::vector<std::uint64_t> pool(d);
  std::iota(pool.begin(), pool.end(), std::uint64_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(d - i)]);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

/// Gaussian direction on a random support, scaled to l2 norm `norm`.
inline SparseVector<double> random_sparse_real(std::size_t d, std::size_t k, double norm, ChaChaRng& rng) {
  SparseVector<double> x;
  x.dim = d;
  x.indices = random_support(d, k, rng);
  std::normal_distribution<double> nd;
  double n2 = 0;
  for (std::size_t j = 0; j < k; ++j) {
    x.values.push_back(nd(rng));
    n2 += x.values.back() * x.values.back();
  }
  if (n2 > 0)
    for (double& v : x.values) v *= norm / std::sqrt(n2);
  return x;
}

/// Uniform field values on a random support.
inline SparseVector<Fp> random_sparse_field(std::size_t d, std::size_t k, ChaChaRng& rng) {
  SparseVector<Fp> x;
  x.dim = d;
  x.indices = random_support(d, k, rng);
  for (std::size_t j = 0; j < k; ++j) x.values.push_back(rng.field());
  return x;
}

inline std::size_t k_from_density(std::size_t d, double density) {
  return std::min<std::size_t>(d, std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(density * d))));
}

// ---------------------------------------------------------------------------

struct AggregateConfig {
  std::size_t n = 10;
  std::size_t d = 1000;
  double density = 0.01;
  double clip = 1.0;
  double sigma = 0.0;
  Mode mode = Mode::kSemiHonest;
  AdversaryBehavior adversary;
  bool field_values = false;  // uniform field values instead of clipped reals
  std::uint64_t seed = 1;
};

struct AggregateOutcome {
  std::size_t k = 0;
  bool correct = false;  // opened aggregate minus noise equals the plaintext sum
  RoundTranscript transcript;
  std::vector<std::uint64_t> upload_bits;  // per client, as counted on the wire
  std::vector<double> mean;                // decoded noisy mean (real-valued inputs)
  std::vector<double> true_mean;
};

inline std::vector<ClientUpload> make_uploads(const std::vector<SparseVector<Fp>>& xs, std::size_t k, Mode mode,
                                              const Seed& seed) {
  std::vector<ClientUpload> ups;
  for (std::uint32_t c = 0; c < xs.size(); ++c) {
    ChaChaRng rng(seed, "client/" + std::to_string(c));
    ups.push_back(client_encode(xs[c], k, mode, rng, c));
  }
  return ups;
}

/// Client-side inputs of one aggregation experiment.
struct AggregateInputs {
  std::size_t k = 0;
  std::vector<SparseVector<Fp>> xs;
  std::vector<double> true_mean;  // of the real-valued inputs
  std::vector<ClientUpload> uploads;
};

inline AggregateInputs make_aggregate_inputs(const AggregateConfig& cfg, std::uint32_t round = 0) {
  AggregateInputs in;
  in.k = k_from_density(cfg.d, cfg.density);
  const Seed root = Seed::from_u64(cfg.seed);
  ChaChaRng data(root.derive("data"), "r" + std::to_string(round));
  in.true_mean.assign(cfg.d, 0.0);
  const FixedPointCodec codec;
  for (std::size_t c = 0; c < cfg.n; ++c) {
    if (cfg.field_values) {
      in.xs.push_back(random_sparse_field(cfg.d, in.k, data));
    } else {
      SparseVector<double> v = random_sparse_real(cfg.d, in.k, cfg.clip, data);
      for (std::size_t j = 0; j < v.k(); ++j) in.true_mean[v.indices[j]] += v.values[j] / double(cfg.n);
      in.xs.push_back(fixed_encode(v, codec));
    }
  }
  in.uploads = make_uploads(in.xs, in.k, cfg.mode, root.derive("clients/r" + std::to_string(round)));
  return in;
}

/// Generates n random sparse vectors, aggregates them (with noise when
/// sigma > 0) and checks the result against the plaintext sum.
inline AggregateOutcome run_aggregate(const AggregateConfig& cfg, std::uint32_t round = 0) {
  AggregateOutcome out;
  AggregateInputs in = make_aggregate_inputs(cfg, round);
  out.k = in.k;
  out.true_mean = std::move(in.true_mean);
  const std::vector<SparseVector<Fp>>& xs = in.xs;
  const auto& ups = in.uploads;
  const FixedPointCodec codec;
  const Seed root = Seed::from_u64(cfg.seed);
  const auto keys = setup_correlated_randomness(root.derive("servers"));

  Network net(static_cast<std::uint32_t>(cfg.n));
  AggregationParams ap{cfg.d, out.k, cfg.mode, round, cfg.adversary.active() ? &cfg.adversary : nullptr};
  NoiseParams np{cfg.sigma, cfg.clip, cfg.d};
  RoundResult r = secure_round(net, keys, ups, ap, np, std::vector<double>(cfg.d, 0.0));
  out.transcript = std::move(r.transcript);
  for (std::uint32_t c = 0; c < cfg.n; ++c) out.upload_bits.push_back(net.client_upload(c).logical_bits);
  if (out.transcript.aborted()) return out;

  FpVector expect = plaintext_sum(xs, cfg.d);
  FpVector got = r.ledger.opened;
  for (const auto& eta : r.ledger.eta) sub_into(got, encode_integers(eta));
  out.correct = got == expect;
  out.mean.resize(cfg.d);
  for (std::size_t j = 0; j < cfg.d; ++j) out.mean[j] = codec.decode(r.ledger.opened[j]) / double(cfg.n);
  return out;
}

// ---------------------------------------------------------------------------

struct DpSumConfig {
  std::size_t n = 100;
  std::size_t d = 10000;
  double density = 0.01;
  double epsilon = 1.0;
  double delta = 1e-5;
  double clip = 1.0;
  Mode mode = Mode::kSemiHonest;
  std::uint64_t seed = 1;
};

/// sigma for a single full-participation release: the closed form at q = 1,
/// T = 1.
inline double dp_sum_sigma(const DpSumConfig& c) { return std::sqrt(sigma_for_budget(c.epsilon, c.delta, 1.0, 1)); }

/// (1/d) ||true mean - released mean||^2 for one release.
inline double dp_sum_mse(const DpSumConfig& c, std::uint32_t repetition) {
  AggregateConfig a;
  a.n = c.n;
  a.d = c.d;
  a.density = c.density;
  a.clip = c.clip;
  a.sigma = dp_sum_sigma(c);
  a.mode = c.mode;
  a.seed = c.seed;
  AggregateOutcome o = run_aggregate(a, repetition);
  if (o.transcript.aborted()) throw std::runtime_error("dp-sum: round aborted: " + o.transcript.abort_message);
  double s = 0;
  for (std::size_t j = 0; j < c.d; ++j) s += (o.mean[j] - o.true_mean[j]) * (o.mean[j] - o.true_mean[j]);
  return s / static_cast<double>(c.d);
}

// ---------------------------------------------------------------------------

struct NoiseVerifyConfig {
  std::size_t d = 10000;
  double sigma = 1.0;
  double clip = 1.0;
  double alpha = 0.05;
  std::size_t trials = 200;
  AdversaryBehavior adversary;  // kInflatedNoise to test rejection
  std::uint64_t seed = 1;
};

struct NoiseVerifyOutcome {
  std::size_t trials = 0;
  std::size_t passed = 0;
  double d_crit = 0.0;
  double mean_d_ks = 0.0;
  double max_d_ks = 0.0;
  double pass_rate() const { return trials ? double(passed) / double(trials) : 0.0; }
};

/// Each trial samples all three noise shares and runs one KS verification:
/// of the corrupt server when an adversary is set, else of server t mod 3.
inline NoiseVerifyOutcome run_noise_verify(const NoiseVerifyConfig& c) {
  NoiseParams np{c.sigma, c.clip, c.d};
  np.ks_alpha = c.alpha;
  np.validate(0);
  const auto keys = setup_correlated_randomness(Seed::from_u64(c.seed).derive("servers"));
  const AdversaryBehavior* adv = c.adversary.active() ? &c.adversary : nullptr;
  NoiseVerifyOutcome out;
  Network net;
  double sum = 0;
  for (std::uint32_t t = 0; t < c.trials; ++t) {
    net.reset();
    const PartyId tested = adv ? adv->corrupt : PartyId(static_cast<int>(t % 3));
    ServerNoise noise = sample_and_share_noise(net, keys, np, t, adv);
    KsReport r = verify_noise_round(net, keys, tested, noise.shared[tested], np, t, adv);
    ++out.trials;
    out.passed += r.pass ? 1 : 0;
    out.d_crit = r.d_crit;
    sum += r.d_ks;
    out.max_d_ks = std::max(out.max_d_ks, r.d_ks);
  }
  out.mean_d_ks = out.trials ? sum / double(out.trials) : 0.0;
  return out;
}

}  // namespace sparsagg

#endif  // SPARSAGG_EXPERIMENTS_HPP_
