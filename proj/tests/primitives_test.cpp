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

#include <array>
#include <cmath>
#include <set>

#include "sparsagg/correlated.hpp"
#include "sparsagg/field.hpp"
#include "sparsagg/prg.hpp"

namespace sparsagg {
namespace {

constexpr std::uint64_t P = Fp::kModulus;

TEST(FieldTest, WrapAroundExamples) {
  EXPECT_EQ((Fp(P - 1) + Fp(1)).value(), 0u);
  EXPECT_EQ((Fp(P - 1) * Fp(2)).value(), P - 2);
  EXPECT_EQ((Fp(0) - Fp(1)).value(), P - 1);
  EXPECT_EQ((-Fp(1)).value(), P - 1);
}

TEST(FieldTest, ConstructorReduces) {
  EXPECT_EQ(Fp(P).value(), 0u);
  EXPECT_EQ(Fp(~std::uint64_t{0}).value(), (~std::uint64_t{0}) % P);
  EXPECT_EQ(Fp::from_signed(-5).value(), P - 5);
  EXPECT_EQ(Fp::from_signed(INT64_MIN).centered(), Fp::from_signed(INT64_MIN % static_cast<std::int64_t>(P)).centered());
}

TEST(FieldTest, AxiomsExhaustiveSmall) {
  for (std::uint64_t a = 0; a < 40; ++a) {
    for (std::uint64_t b = 0; b < 40; ++b) {
      Fp x(a), y(b);
      EXPECT_EQ((x + y) - y, x);
      EXPECT_EQ(x * y, y * x);
      EXPECT_EQ((x * y).value(), (a * b) % P);
    }
  }
}

TEST(FieldTest, AxiomsRandomLarge) {
  ChaChaRng rng(7);
  for (int i = 0; i < 10000; ++i) {
    Fp a = rng.field(), b = rng.field(), c = rng.field();
    ASSERT_EQ((a + b) - b, a);
    ASSERT_EQ(a * Fp::one(), a);
    ASSERT_EQ(a * b, b * a);
    ASSERT_EQ(a * (b + c), a * b + a * c);
    unsigned __int128 prod = static_cast<unsigned __int128>(a.value()) * b.value();
    ASSERT_EQ((a * b).value(), static_cast<std::uint64_t>(prod % P));
  }
}

TEST(FieldTest, CenteredRepresentative) {
  EXPECT_EQ(Fp(P / 2).centered(), static_cast<std::int64_t>(P / 2));
  EXPECT_EQ(Fp(P / 2 + 1).centered(), -static_cast<std::int64_t>(P / 2));
}

TEST(FieldTest, SerializationRoundTripAndRejectsNonCanonical) {
  FpVector v{Fp(0), Fp(1), Fp(P - 1), Fp(123456789)};
  std::vector<std::uint8_t> bytes;
  append_elements(bytes, v);
  ASSERT_EQ(bytes.size(), 32u);
  EXPECT_EQ(bytes[8], 1);  // little-endian
  EXPECT_EQ(parse_elements(bytes), v);
  std::vector<std::uint8_t> bad;
  put_u64_le(bad, P);
  EXPECT_THROW(parse_elements(bad), std::invalid_argument);
  bad.pop_back();
  EXPECT_THROW(parse_elements(bad), std::invalid_argument);
}

TEST(FieldTest, LengthMismatchThrows) {
  FpVector a(3), b(2);
  EXPECT_THROW(add_into(a, b), std::invalid_argument);
  EXPECT_THROW(dot(a, b), std::invalid_argument);
}

TEST(FixedPointTest, Examples) {
  FixedPointCodec c;
  EXPECT_EQ(c.encode(1.0).value(), 32768u);
  EXPECT_EQ(c.encode(-1.0).value(), P - 32768);
  EXPECT_NEAR(c.decode(c.encode(0.1)), 0.1, std::ldexp(1.0, -16));
}

TEST(FixedPointTest, RoundsHalfAwayFromZero) {
  FixedPointCodec c;
  const double half = std::ldexp(1.0, -16);
  EXPECT_EQ(c.encode(half).value(), 1u);
  EXPECT_EQ(c.encode(-half).centered(), -1);
}

TEST(FixedPointTest, OverflowRejected) {
  FixedPointCodec c;
  EXPECT_THROW(c.encode(std::ldexp(1.0, 46)), std::overflow_error);
  EXPECT_THROW(c.encode(std::nan("")), std::overflow_error);
  EXPECT_NO_THROW(c.encode(std::ldexp(1.0, 44)));
}

TEST(FixedPointTest, RandomRoundTripWithinHalfUlp) {
  FixedPointCodec c;
  ChaChaRng rng(11);
  for (int i = 0; i < 10000; ++i) {
    double x = -100 + 200 * rng.uniform01();
    ASSERT_LE(std::fabs(c.decode(c.encode(x)) - x), std::ldexp(1.0, -16));
  }
}

TEST(FixedPointTest, EncodeDecodeIdentityOnCanonicalElements) {
  FixedPointCodec c;
  for (std::int64_t v : {0ll, 1ll, -1ll, 32768ll, -123456789ll, 1ll << 40}) {
    Fp e = Fp::from_signed(v);
    EXPECT_EQ(c.encode(c.decode(e)), e);
  }
}

TEST(PrgTest, EmptyExpansion) { EXPECT_TRUE(prg_expand(Seed{}, "perm", 0).empty()); }

TEST(PrgTest, DeterministicAcrossParties) {
  Seed s = Seed::from_u64(99);
  EXPECT_EQ(prg_expand(s, "perm", 1000), prg_expand(s, "perm", 1000));
  EXPECT_NE(prg_expand(s, "perm", 10), prg_expand(s, "mackey", 10));
  EXPECT_NE(prg_expand(s, "perm", 10), prg_expand(Seed::from_u64(100), "perm", 10));
}

TEST(PrgTest, PrefixStable) {
  Seed s = Seed::from_u64(3);
  FpVector longer = prg_expand(s, "x", 2000);
  FpVector shorter = prg_expand(s, "x", 700);
  EXPECT_TRUE(std::equal(shorter.begin(), shorter.end(), longer.begin()));
}

TEST(PrgTest, OutputsCanonical) {
  for (Fp e : prg_expand(Seed::from_u64(5), "range", 100000)) ASSERT_LT(e.value(), P);
}

TEST(PrgTest, ChiSquareUniformLowByte) {
  // 255 degrees of freedom; the 0.01 upper quantile is about 310.46.
  std::array<double, 256> counts{};
  const std::size_t n = 1000000;
  for (Fp e : prg_expand(Seed::from_u64(2024), "chi", n)) counts[e.value() & 0xFF] += 1;
  const double expected = n / 256.0;
  double chi = 0;
  for (double c : counts) chi += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi, 310.46);
}

TEST(PrgTest, UniformBelowCoversRange) {
  PrgStream s(Seed::from_u64(1), "below");
  std::array<int, 7> hits{};
  for (int i = 0; i < 7000; ++i) hits[s.uniform_below(7)]++;
  for (int h : hits) EXPECT_GT(h, 800);
  EXPECT_THROW(s.uniform_below(0), std::invalid_argument);
}

TEST(SeedTest, HexRoundTripAndDerive) {
  Seed s = Seed::from_u64(0xDEADBEEF);
  EXPECT_EQ(Seed::from_hex(s.hex()), s);
  EXPECT_EQ(s.hex().size(), 32u);
  EXPECT_NE(s.derive("a"), s.derive("b"));
  EXPECT_EQ(s.derive("a"), s.derive("a"));
  EXPECT_THROW(Seed::from_hex("zz"), std::invalid_argument);
}

TEST(CorrelatedTest, ZeroSharingSumsToZero) {
  auto keys = setup_correlated_randomness(Seed::from_u64(1));
  FpVector sum(64);
  for (const auto& k : keys) add_into(sum, zero_share(k, "ctr/1", 64));
  for (Fp e : sum) EXPECT_EQ(e, Fp());
}

TEST(CorrelatedTest, DistinctCountersGiveDistinctShares) {
  auto keys = setup_correlated_randomness(Seed::from_u64(1));
  EXPECT_NE(zero_share(keys[0], "ctr/1", 8), zero_share(keys[0], "ctr/2", 8));
}

TEST(CorrelatedTest, PairKeysAgree) {
  auto keys = setup_correlated_randomness(Seed::from_u64(42));
  EXPECT_EQ(keys[0].next_pair, keys[1].prev_pair);
  EXPECT_EQ(keys[1].next_pair, keys[2].prev_pair);
  EXPECT_EQ(keys[2].next_pair, keys[0].prev_pair);
  EXPECT_EQ(keys[0].pair_key(PartyId(1)), keys[1].pair_key(PartyId(0)));
  EXPECT_THROW(keys[0].pair_key(PartyId(0)), std::invalid_argument);
  EXPECT_NE(keys[0].own, keys[1].own);
}

TEST(CorrelatedTest, ReplicatedRandomAndZeroPairsAreConsistent) {
  auto keys = setup_correlated_randomness(Seed::from_u64(8));
  std::array<SharePair, 3> r, z;
  for (int i = 0; i < 3; ++i) {
    r[i] = random_share_pair(keys[i], "rand", 16);
    z[i] = zero_share_pair(keys[i], "zero", 16);
  }
  FpVector zsum(16);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(r[i].b, r[(i + 1) % 3].a);
    EXPECT_EQ(z[i].b, z[(i + 1) % 3].a);
    add_into(zsum, z[i].a);
  }
  for (Fp e : zsum) EXPECT_EQ(e, Fp());
}

TEST(CorrelatedTest, PairTripleSumsToZero) {
  auto t = pair_zero_triple(Seed::from_u64(4), "pass", 32);
  for (std::size_t j = 0; j < 32; ++j) EXPECT_EQ(t[0][j] + t[1][j] + t[2][j], Fp());
}

TEST(PartyIdTest, WrapAround) {
  EXPECT_EQ(PartyId(0).prev(), PartyId(2));
  EXPECT_EQ(PartyId(2).next(), PartyId(0));
  EXPECT_EQ(PartyId(-1), PartyId(2));
  EXPECT_EQ(PartyId(1) + 5, PartyId(0));
}

}  // namespace
}  // namespace sparsagg
