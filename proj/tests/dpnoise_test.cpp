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

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "sparsagg/dpnoise.hpp"
#include "sparsagg/experiments.hpp"

namespace sparsagg {
namespace {

double variance(const std::vector<std::int64_t>& v) {
  double m = 0, s = 0;
  for (auto x : v) m += double(x);
  m /= double(v.size());
  for (auto x : v) s += (double(x) - m) * (double(x) - m);
  return s / double(v.size() - 1);
}

TEST(DiscreteGaussianTest, TinyScaleGivesZeros) {
  ChaChaRng rng(1);
  for (auto x : sample_discrete_gaussian(1e-6, 1000, rng)) EXPECT_EQ(x, 0);
  for (auto x : sample_discrete_gaussian(0.0, 10, rng)) EXPECT_EQ(x, 0);
}

TEST(DiscreteGaussianTest, RejectsBadScale) {
  ChaChaRng rng(1);
  EXPECT_THROW(sample_discrete_gaussian(-1.0, 1, rng), std::invalid_argument);
  EXPECT_THROW(sample_discrete_gaussian(std::nan(""), 1, rng), std::invalid_argument);
}

TEST(DiscreteGaussianTest, VarianceMatchesScale) {
  ChaChaRng rng(2);
  auto v = sample_discrete_gaussian(100.0, 400000, rng);
  EXPECT_NEAR(variance(v), 1e4, 0.02 * 1e4);
  double m = 0;
  for (auto x : v) m += double(x);
  EXPECT_NEAR(m / double(v.size()), 0.0, 1.0);
}

TEST(DiscreteGaussianTest, ProbabilityRatiosNearZero) {
  // P(x) / P(0) = exp(-x^2 / (2 s^2)) on the integers.
  const double s = 1.5;
  ChaChaRng rng(3);
  auto v = sample_discrete_gaussian(s, 400000, rng);
  std::map<std::int64_t, double> count;
  for (auto x : v) count[x] += 1;
  for (int x = -3; x <= 3; ++x) {
    const double want = std::exp(-double(x * x) / (2 * s * s));
    const double got = count[x] / count[0];
    EXPECT_NEAR(got, want, 0.03 + 0.05 * want) << "x = " << x;
  }
}

TEST(DiscreteGaussianTest, SymmetricAndDeterministic) {
  ChaChaRng a(9), b(9);
  EXPECT_EQ(sample_discrete_gaussian(7.0, 1000, a), sample_discrete_gaussian(7.0, 1000, b));
}

TEST(NoiseEncodingTest, RoundTrip) {
  std::vector<std::int64_t> v{0, 1, -1, 123456789, -987654321};
  EXPECT_EQ(decode_integers(encode_integers(v)), v);
}

TEST(KsTest, IdenticalSamples) {
  std::vector<int> a{3, 1, 2, 2};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, a), 0.0);
}

TEST(KsTest, DisjointSamples) {
  std::vector<int> a{0, 0}, b{1, 1};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, b), 1.0);
}

TEST(KsTest, EmptyRejected) {
  std::vector<int> a, b{1};
  EXPECT_THROW(ks_two_sample(a, b), std::invalid_argument);
}

double brute_ks(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  std::vector<std::int64_t> pts(a);
  pts.insert(pts.end(), b.begin(), b.end());
  double d = 0;
  for (auto y : pts) {
    double fa = 0, fb = 0;
    for (auto x : a) fa += x <= y;
    for (auto x : b) fb += x <= y;
    d = std::max(d, std::fabs(fa / double(a.size()) - fb / double(b.size())));
  }
  return d;
}

TEST(KsTest, MatchesBruteForceWithTies) {
  ChaChaRng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::int64_t> a(1 + rng.below(30)), b(1 + rng.below(30));
    for (auto& x : a) x = std::int64_t(rng.below(8));
    for (auto& x : b) x = std::int64_t(rng.below(8)) - 1;
    EXPECT_DOUBLE_EQ(ks_two_sample(a, b), brute_ks(a, b));
  }
}

TEST(KsTest, InvariantUnderMonotoneRelabel) {
  ChaChaRng rng(6);
  std::vector<std::int64_t> a(50), b(60);
  for (auto& x : a) x = std::int64_t(rng.below(20));
  for (auto& x : b) x = std::int64_t(rng.below(20));
  std::vector<std::int64_t> a2(a), b2(b);
  for (auto& x : a2) x = 3 * x * x + 7;
  for (auto& x : b2) x = 3 * x * x + 7;
  EXPECT_DOUBLE_EQ(ks_two_sample(a, b), ks_two_sample(a2, b2));
}

TEST(KsTest, CriticalValue) {
  EXPECT_NEAR(ks_critical(0.05, 10000), 0.0192065, 1e-6);
  EXPECT_NEAR(ks_critical(0.05, 40000), ks_critical(0.05, 10000) / 2, 1e-12);
  EXPECT_DOUBLE_EQ(ks_critical(2.0, 10), 0.0);
  EXPECT_THROW(ks_critical(0.0, 10), std::invalid_argument);
  EXPECT_THROW(ks_critical(0.05, 0), std::invalid_argument);
}

TEST(NoiseParamsTest, Validation) {
  NoiseParams np{1.0, 1.0, 10};
  EXPECT_NO_THROW(np.validate(100));
  np.ks_alpha = 1.0;
  EXPECT_THROW(np.validate(100), std::invalid_argument);
  np.ks_alpha = 0.0;
  EXPECT_THROW(np.validate(100), std::invalid_argument);
  NoiseParams big{1e13, 1.0, 10};
  EXPECT_THROW(big.validate(1), std::invalid_argument);
  EXPECT_NEAR((NoiseParams{1.0, 2.0, 1}).per_server_std_int(), 2.0 * 32768 / std::sqrt(2.0), 1e-9);
}

class NoiseProtocolTest : public ::testing::Test {
 protected:
  std::array<PartyKeys, 3> keys = setup_correlated_randomness(Seed::from_u64(31));
  Network net;
};

TEST_F(NoiseProtocolTest, DealtSharesReconstruct) {
  ChaChaRng rng(8);
  FpVector v(17);
  for (auto& x : v) x = rng.field();
  for (int dealer = 0; dealer < 3; ++dealer) {
    SharedVector s = deal_shared(net, keys, PartyId(dealer), v, "t", tag::kNoiseDeal, 0);
    EXPECT_EQ(reconstruct(s), v);
  }
  std::uint64_t elems = 0;
  for (const auto& [link, st] : net.totals()) elems += st.payload_bytes / 8;
  EXPECT_EQ(elems, 3u * 2 * 17);
}

TEST_F(NoiseProtocolTest, ZeroSigmaIsExact) {
  ChaChaRng rng(9);
  FpVector delta(32);
  for (auto& x : delta) x = rng.field();
  SharedVector ds = share(delta, rng);
  ServerNoise noise;
  SharedVector out = sec_noise_add(net, keys, ds, NoiseParams{0.0, 1.0, 32}, 0, &noise);
  EXPECT_EQ(reconstruct(out), delta);
}

TEST_F(NoiseProtocolTest, NoiseSumsToDealtValues) {
  NoiseParams np{0.5, 1.0, 64};
  FpVector zero(64);
  ChaChaRng rng(10);
  ServerNoise noise;
  SharedVector out = sec_noise_add(net, keys, share(zero, rng), np, 3, &noise);
  FpVector want(64);
  for (const auto& e : noise.eta) add_into(want, encode_integers(e));
  EXPECT_EQ(reconstruct(out), want);
}

TEST_F(NoiseProtocolTest, AggregateVarianceAtScale) {
  // Total noise is N_Z(0, 1.5 sigma^2 C^2) on the grid; after subtracting the
  // verification masks' contribution it is sigma^2 C^2 per pair of servers.
  const std::size_t d = 100000;
  NoiseParams np{1.0, 1.0, d};
  ServerNoise noise = sample_and_share_noise(net, keys, np, 0);
  const double unit = std::ldexp(1.0, 30);  // (2^15)^2
  std::vector<std::int64_t> total(d), pair(d);
  for (std::size_t j = 0; j < d; ++j) {
    total[j] = noise.eta[0][j] + noise.eta[1][j] + noise.eta[2][j];
    pair[j] = noise.eta[0][j] + noise.eta[1][j];
  }
  EXPECT_NEAR(variance(total) / unit, 1.5, 0.05 * 1.5);
  EXPECT_NEAR(variance(pair) / unit, 1.0, 0.05);
}

TEST_F(NoiseProtocolTest, HonestVerificationPasses) {
  NoiseParams np{1.0, 1.0, 5000};
  ServerNoise noise = sample_and_share_noise(net, keys, np, 0);
  std::array<KsReport, 3> reps;
  EXPECT_NO_THROW(verify_all_noise(net, keys, noise, np, 0, nullptr, &reps));
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(reps[i].party, i);
    EXPECT_EQ(reps[i].verifier, PartyId(i).prev().value());
    EXPECT_LE(reps[i].d_ks, reps[i].d_crit);
  }
}

TEST_F(NoiseProtocolTest, InflatedNoiseRejected) {
  NoiseParams np{1.0, 1.0, 5000};
  AdversaryBehavior adv{AdversaryKind::kInflatedNoise, PartyId(1), 2.0};
  ServerNoise noise = sample_and_share_noise(net, keys, np, 0, &adv);
  std::array<KsReport, 3> reps;
  EXPECT_THROW(verify_all_noise(net, keys, noise, np, 0, &adv, &reps), NoiseKsAbort);
  EXPECT_FALSE(reps[1].pass);
}

TEST_F(NoiseProtocolTest, TamperedKappaCopyDetected) {
  NoiseParams np{1.0, 1.0, 100};
  ServerNoise noise = sample_and_share_noise(net, keys, np, 0);
  // S_1 forwards an altered copy when kappa of S_0 is opened to S_2.
  net.set_send_hook([](const Endpoint& from, const Endpoint&, Frame& f) {
    if (from == Endpoint::server(1) && f.tag == tag::kKappaOpen) {
      FpVector v = f.elements();
      v[0] += Fp::one();
      f.payload.clear();
      append_elements(f.payload, v);
    }
  });
  EXPECT_THROW(verify_noise_round(net, keys, PartyId(0), noise.shared[0], np, 0), ConsistencyAbort);
}

TEST(NoiseVerifyExperimentTest, PassAndRejectRates) {
  NoiseVerifyConfig honest;
  honest.d = 2000;
  honest.trials = 40;
  auto h = run_noise_verify(honest);
  EXPECT_GE(h.pass_rate(), 0.85);

  NoiseVerifyConfig bad = honest;
  bad.d = 10000;
  bad.trials = 5;
  bad.adversary = AdversaryBehavior{AdversaryKind::kInflatedNoise, PartyId(2), 2.0};
  EXPECT_EQ(run_noise_verify(bad).passed, 0u);
}

}  // namespace
}  // namespace sparsagg
