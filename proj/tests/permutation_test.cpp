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

#include "sparsagg/permutation.hpp"

namespace sparsagg {
namespace {

using Idx = std::vector<std::uint64_t>;

Permutation random_perm(std::size_t d, ChaChaRng& rng) { return permutation_from_seed(rng.seed(), d); }

SparseVector<Fp> random_sparse(std::size_t d, std::size_t k, ChaChaRng& rng) {
  Permutation p = random_perm(d, rng);
  SparseVector<Fp> x;
  x.dim = d;
  for (std::size_t j = 0; j < k; ++j) {
    x.indices.push_back(p(j));
    x.values.push_back(Fp(1 + rng.below(1000)));
  }
  return x;
}

TEST(PermutationTest, RejectsNonBijection) {
  EXPECT_THROW(Permutation(Idx{0, 0}), std::invalid_argument);
  EXPECT_THROW(Permutation(Idx{0, 2}), std::invalid_argument);
}

TEST(PermutationTest, ApplyConvention) {
  Permutation p(Idx{2, 0, 1});
  std::vector<int> v{10, 20, 30};
  EXPECT_EQ(permute(p, v), (std::vector<int>{20, 30, 10}));
}

TEST(PermutationTest, ComposeInvertLaws) {
  ChaChaRng rng(1);
  for (int t = 0; t < 20; ++t) {
    Permutation a = random_perm(50, rng), b = random_perm(50, rng);
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i * 7 + 1;
    EXPECT_EQ(invert(invert(a)), a);
    EXPECT_TRUE(compose(a, invert(a)).is_identity());
    EXPECT_TRUE(compose(invert(a), a).is_identity());
    EXPECT_EQ(permute(compose(a, b), v), permute(a, permute(b, v)));
  }
}

TEST(PermutationTest, SeedDeterminism) {
  Seed s = Seed::from_u64(77);
  EXPECT_EQ(permutation_from_seed(s, 1000), permutation_from_seed(s, 1000));
  EXPECT_NE(permutation_from_seed(s, 1000), permutation_from_seed(Seed::from_u64(78), 1000));
  EXPECT_EQ(permutation_from_seed(s, 0).size(), 0u);
}

TEST(PermutationTest, SeededPermutationsUniformAtD4) {
  std::map<Idx, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) counts[permutation_from_seed(Seed::from_u64(i), 4).dest()]++;
  ASSERT_EQ(counts.size(), 24u);
  const double p = 1.0 / 24, mean = n * p, sd = std::sqrt(n * p * (1 - p));
  for (const auto& [perm, c] : counts) {
    EXPECT_NEAR(c, mean, 3 * sd) << "permutation frequency out of band";
  }
}

TEST(ReorderTest, WorkedExample) {
  // x = (0, x1, 0, x3, 0, x5, 0, 0, 0, 0)
  std::vector<Fp> dense(10);
  dense[1] = Fp(11);
  dense[3] = Fp(33);
  dense[5] = Fp(55);
  auto x = SparseVector<Fp>::from_dense(dense);
  auto re = reorder(x);
  EXPECT_EQ(re.r, (FpVector{Fp(11), Fp(33), Fp(55)}));
  EXPECT_EQ(re.L, (Idx{1, 3, 5}));
  EXPECT_EQ(re.E, (Idx{0, 2, 4, 6, 7, 8, 9}));
  Permutation pi = derive_permutation(re.L, re.E);
  EXPECT_EQ(pi.dest(), (Idx{1, 3, 5, 0, 2, 4, 6, 7, 8, 9}));
  EXPECT_EQ(permute(pi, zero_padded<Fp>(re.r, 10)), dense);
}

TEST(ReorderTest, DegenerateCases) {
  std::vector<Fp> full{Fp(1), Fp(2), Fp(3)};
  auto re = reorder(SparseVector<Fp>::from_dense(full));
  EXPECT_EQ(re.r, full);
  EXPECT_TRUE(re.E.empty());
  auto zero = reorder(SparseVector<Fp>::from_dense(FpVector(4)));
  EXPECT_TRUE(zero.r.empty());
  EXPECT_EQ(zero.E, (Idx{0, 1, 2, 3}));
}

TEST(ReorderTest, LeadingSupportGivesIdentity) {
  EXPECT_TRUE(derive_permutation(Idx{0, 1, 2}, Idx{3, 4}).is_identity());
}

TEST(ReorderTest, OverlappingPartitionRejected) {
  EXPECT_THROW(derive_permutation(Idx{0, 1}, Idx{1, 2}), std::invalid_argument);
  EXPECT_THROW(derive_permutation(Idx{0}, Idx{2}), std::invalid_argument);
}

TEST(ReorderTest, RandomRoundTrip) {
  ChaChaRng rng(5);
  for (int t = 0; t < 100; ++t) {
    auto x = random_sparse(40, 1 + rng.below(40), rng);
    auto re = reorder(x);
    Permutation pi = derive_permutation(re.L, re.E);
    EXPECT_EQ(permute(pi, zero_padded<Fp>(re.r, 40)), x.to_dense());
  }
}

TEST(PadTest, PadsWithLowestUnusedIndices) {
  SparseVector<Fp> x{6, {1, 4}, {Fp(2), Fp(3)}};
  auto y = pad_to_k(x, 4);
  EXPECT_EQ(y.indices, (Idx{1, 4, 0, 2}));
  EXPECT_EQ(y.values[2], Fp());
  EXPECT_EQ(y.to_dense(), x.to_dense());
  EXPECT_THROW(pad_to_k(x, 1), std::invalid_argument);
}

TEST(CompressionTest, RecomposesToOriginal) {
  ChaChaRng rng(9);
  for (int t = 0; t < 20; ++t) {
    Permutation pi = random_perm(64, rng);
    auto dec = decompose_and_compress(pi, 10, rng);
    EXPECT_EQ(compose(dec.pi0, compose(dec.pi1, dec.pi2)), pi);
    EXPECT_EQ(permutation_from_seed(dec.compressed.seed0, 64), dec.pi0);
    EXPECT_EQ(permutation_from_seed(dec.compressed.seed1, 64), dec.pi1);
    EXPECT_EQ(dec.compressed.head.size(), 10u);
  }
}

TEST(CompressionTest, DimensionOne) {
  ChaChaRng rng(2);
  auto dec = decompose_and_compress(Permutation::identity(1), 1, rng);
  EXPECT_TRUE(dec.pi0.is_identity());
  EXPECT_TRUE(dec.pi1.is_identity());
  EXPECT_TRUE(dec.pi2.is_identity());
  EXPECT_EQ(dec.compressed.head, (Idx{0}));
}

TEST(CompressionTest, DifferentRngSameRecomposition) {
  ChaChaRng r1(1), r2(2), rp(3);
  Permutation pi = random_perm(30, rp);
  auto a = decompose_and_compress(pi, 5, r1), b = decompose_and_compress(pi, 5, r2);
  EXPECT_NE(a.compressed.seed0, b.compressed.seed0);
  EXPECT_EQ(compose(a.pi0, compose(a.pi1, a.pi2)), compose(b.pi0, compose(b.pi1, b.pi2)));
}

TEST(DecompressTest, HandExample) {
  EXPECT_EQ(server_decompress_head(Idx{4, 1}, 5).dest(), (Idx{4, 1, 0, 2, 3}));
  EXPECT_TRUE(server_decompress_head(Idx{0, 1, 2}, 6).is_identity());
}

TEST(DecompressTest, RejectsMalformedHeads) {
  EXPECT_THROW(server_decompress_head(Idx{1, 1}, 5), InvalidUpload);
  EXPECT_THROW(server_decompress_head(Idx{5}, 5), InvalidUpload);
  EXPECT_THROW(server_decompress_head(Idx{0, 1, 2}, 2), InvalidUpload);
}

TEST(DecompressTest, Idempotent) {
  Idx head{7, 3, 9};
  EXPECT_EQ(server_decompress_head(head, 12), server_decompress_head(head, 12));
}

TEST(DecompressTest, AgreesWithTrueFactorOnPaddedVectors) {
  ChaChaRng rng(13);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 2 + rng.below(60), k = rng.below(d + 1);
    Permutation pi = random_perm(d, rng);
    auto dec = decompose_and_compress(pi, k, rng);
    FpVector r(k);
    for (Fp& e : r) e = rng.field();
    FpVector xp = zero_padded<Fp>(r, d);
    Permutation stand_in = server_decompress_head(dec.compressed.head, d);
    ASSERT_EQ(permute(stand_in, xp), permute(dec.pi2, xp));
  }
}

TEST(DecompressTest, FullCorrectnessChain) {
  ChaChaRng rng(21);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 30, k = 1 + rng.below(10);
    auto x = random_sparse(d, k, rng);
    auto re = reorder(x);
    auto dec = decompose_and_compress(derive_permutation(re.L, re.E), k, rng);
    Permutation p2 = server_decompress_head(dec.compressed.head, d);
    FpVector xp = zero_padded<Fp>(re.r, d);
    EXPECT_EQ(permute(dec.pi0, permute(dec.pi1, permute(p2, xp))), x.to_dense());
  }
}

TEST(SerializationTest, IndicesRoundTrip) {
  Idx head{0, 5, 1ull << 40};
  std::vector<std::uint8_t> b;
  append_indices(b, head);
  EXPECT_EQ(b.size(), 24u);
  EXPECT_EQ(parse_indices(b), head);
}

}  // namespace
}  // namespace sparsagg
