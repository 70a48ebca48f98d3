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

// Offline key material for the three servers and the non-interactive
// correlated randomness derived from it.
//
// Pair key K_j is shared by S_j and S_{j+1}. Replicated share index m is held
// by S_m and S_{m-1}, whose common key is K_{m-1}.

#ifndef SPARSAGG_CORRELATED_HPP_
#define SPARSAGG_CORRELATED_HPP_

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sparsagg/field.hpp"
#include "sparsagg/prg.hpp"

namespace sparsagg {

inline constexpr int kNumServers = 3;

/// Server index with wrap-around arithmetic.
class PartyId {
 public:
  constexpr PartyId() = default;
  constexpr explicit PartyId(int id) : id_(((id % kNumServers) + kNumServers) % kNumServers) {}

  constexpr int value() const { return id_; }
  constexpr PartyId next() const { return PartyId(id_ + 1); }
  constexpr PartyId prev() const { return PartyId(id_ + 2); }
  constexpr PartyId operator+(int k) const { return PartyId(id_ + k); }
  constexpr PartyId operator-(int k) const { return PartyId(id_ - k); }
  constexpr operator int() const { return id_; }  // NOLINT: indexes std::array<..., 3>

  friend constexpr bool operator==(PartyId, PartyId) = default;

 private:
  int id_ = 0;
};

/// What one server holds after the offline phase.
struct PartyKeys {
  PartyId self;
  Seed next_pair;  // K_self, shared with self+1
  Seed prev_pair;  // K_{self-1}, shared with self-1
  Seed common;     // known to all three servers
  Seed own;        // private to this server (noise, local coins)

  /// Key shared with `other` (must be a different server).
  const Seed& pair_key(PartyId other) const {
    if (other == self.next()) return next_pair;
    if (other == self.prev()) return prev_pair;
    throw std::invalid_argument("pair_key: no pairwise key with self");
  }
};

/// Simulates the offline setup: fans a global seed out into pair keys.
inline std::array<PartyKeys, 3> setup_correlated_randomness(const Seed& global_seed) {
  std::array<Seed, 3> pair;
  for (int j = 0; j < 3; ++j) pair[j] = global_seed.derive("pair/" + std::to_string(j));
  const Seed common = global_seed.derive("common");
  std::array<PartyKeys, 3> out;
  for (int i = 0; i < 3; ++i) {
    PartyId id(i);
    out[i] = PartyKeys{id, pair[i], pair[id.prev()], common, global_seed.derive("own/" + std::to_string(i))};
  }
  return out;
}

/// This party's piece of a 3-out-of-3 additive sharing of the zero vector:
/// alpha_i = G(K_i, tag) - G(K_{i-1}, tag). The three pieces cancel.
inline FpVector zero_share(const PartyKeys& keys, std::string_view tag, std::size_t n) {
  FpVector mine = prg_expand(keys.next_pair, tag, n);
  FpVector theirs = prg_expand(keys.prev_pair, tag, n);
  return sub_into(mine, theirs);
}

/// The pair (share self, share self+1) of a replicated sharing of a uniform
/// vector no single server knows. Share m comes from K_{m-1}.
struct SharePair {
  FpVector a;
  FpVector b;
};

inline SharePair random_share_pair(const PartyKeys& keys, std::string_view tag, std::size_t n) {
  return {prg_expand(keys.prev_pair, tag, n), prg_expand(keys.next_pair, tag, n)};
}

/// The pair of a replicated sharing of zero. Shares z0, z1 are expanded from
/// the common key and z2 = -(z0 + z1).
inline SharePair zero_share_pair(const PartyKeys& keys, std::string_view tag, std::size_t n) {
  const std::string t(tag);
  auto share = [&](int m) {
    if (m == 2) {
      FpVector z = prg_expand(keys.common, t + "/0", n);
      add_into(z, prg_expand(keys.common, t + "/1", n));
      for (Fp& e : z) e = -e;
      return z;
    }
    return prg_expand(keys.common, t + "/" + std::to_string(m), n);
  };
  return {share(keys.self), share(keys.self.next())};
}

/// Zero triple known in full to an active pair (both derive it from their
/// pair key): alpha_0 + alpha_1 + alpha_2 = 0.
inline std::array<FpVector, 3> pair_zero_triple(const Seed& pair_key, std::string_view tag, std::size_t n) {
  const std::string t(tag);
  std::array<FpVector, 3> alpha{prg_expand(pair_key, t + "/0", n), prg_expand(pair_key, t + "/1", n),
                                FpVector(n)};
  for (std::size_t i = 0; i < n; ++i) alpha[2][i] = -(alpha[0][i] + alpha[1][i]);
  return alpha;
}

}  // namespace sparsagg

#endif  // SPARSAGG_CORRELATED_HPP_
