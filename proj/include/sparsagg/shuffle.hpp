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

// Three-pass secret-shared shuffle. Server S_j holds the permutation factors
// pi_j and pi_{j+1}, so the pair (S_j, S_{j+1}) jointly knows pi_{j+1}.
// Passes run for j = 1, 0, 2, applying pi_2, then pi_1, then pi_0, which
// realizes pi_0 o pi_1 o pi_2.

#ifndef SPARSAGG_SHUFFLE_HPP_
#define SPARSAGG_SHUFFLE_HPP_

#include <array>
#include <optional>
#include <string>
#include <utility>

#include "sparsagg/adversary.hpp"
#include "sparsagg/correlated.hpp"
#include "sparsagg/net.hpp"
#include "sparsagg/permutation.hpp"
#include "sparsagg/rss.hpp"

namespace sparsagg {

/// The two permutation factors one server holds: (pi_self, pi_self+1).
struct HeldPerms {
  Permutation first;
  Permutation second;
};

struct PassContext {
  std::uint32_t round = 0;
  std::uint32_t client = 0;
  int pass = 0;                 // 0, 1, 2 in execution order
  bool key = false;             // payload is the MAC key vector
  bool mask = true;             // false only in the masking ablation
  const AdversaryBehavior* adversary = nullptr;

  std::string prf_tag() const {
    return "shuffle/r" + std::to_string(round) + "/c" + std::to_string(client) + "/p" + std::to_string(pass) +
           (key ? "/key" : "/value");
  }
};

/// One pass with active pair (S_j, S_{j+1}); S_{j-1} is re-dealt its shares.
/// pi_a and pi_b are the two active servers' copies of pi_{j+1}.
inline void shuffle_pass(Network& net, const std::array<PartyKeys, 3>& keys, SharedVector& st, PartyId j,
                         const Permutation& pi_a, const Permutation& pi_b, const PassContext& ctx) {
  const PartyId A = j, B = j.next(), C = j.prev();
  const std::size_t d = st[A].size();
  for (const RssVector& v : st) {
    v.check();
    if (v.size() != d) throw std::invalid_argument("shuffle_pass: share length mismatch");
  }
  if (pi_a.size() != d || pi_b.size() != d) throw std::invalid_argument("shuffle_pass: permutation size mismatch");

  auto perm_for = [&](PartyId who, const Permutation& honest) {
    const AdversaryBehavior* adv = ctx.adversary;
    if (adv && !ctx.key && d >= 2 && adv->is(AdversaryKind::kWrongPermutation, who) &&
        first_active_pass(who) == ctx.pass) {
      std::vector<std::uint64_t> dest = honest.dest();
      std::swap(dest[0], dest[1]);
      return Permutation(std::move(dest));
    }
    return honest;
  };
  auto masked = [&](const Permutation& pi, const FpVector& share, const FpVector& alpha) {
    FpVector out = permute(pi, share);
    if (ctx.mask) add_into(out, alpha);
    return out;
  };

  const std::string t = ctx.prf_tag();
  const std::uint8_t wire = tag::shuffle(ctx.pass, ctx.key);

  // S_j: shares j and j+1.
  const Permutation pa = perm_for(A, pi_a);
  const auto alpha_a = pair_zero_triple(keys[A].next_pair, t, d);
  FpVector a_j = masked(pa, st[A].a, alpha_a[A]);
  FpVector a_j1 = masked(pa, st[A].b, alpha_a[B]);
  net.send_elements(Endpoint::server(A), Endpoint::server(C), wire, ctx.round, a_j);

  // S_{j+1}: shares j+1 and j-1.
  const Permutation pb = perm_for(B, pi_b);
  const auto alpha_b = pair_zero_triple(keys[B].prev_pair, t, d);
  FpVector b_j1 = masked(pb, st[B].a, alpha_b[B]);
  FpVector b_jm1 = masked(pb, st[B].b, alpha_b[C]);
  net.send_elements(Endpoint::server(B), Endpoint::server(C), wire, ctx.round, b_jm1);

  // S_{j-1}: shares j-1 and j arrive from the active pair.
  FpVector c_jm1 = net.recv_elements(Endpoint::server(B), Endpoint::server(C), wire);
  FpVector c_j = net.recv_elements(Endpoint::server(A), Endpoint::server(C), wire);
  if (c_jm1.size() != d || c_j.size() != d) throw std::runtime_error("shuffle_pass: short message");

  st[A] = RssVector{A, std::move(a_j), std::move(a_j1)};
  st[B] = RssVector{B, std::move(b_j1), std::move(b_jm1)};
  st[C] = RssVector{C, std::move(c_jm1), std::move(c_j)};
}

/// Applies pi_0 o pi_1 o pi_2' to the value vector and, when present, the
/// MAC key vector with the same permutations.
inline std::pair<SharedVector, std::optional<SharedVector>> oblivious_apply(
    Network& net, const std::array<PartyKeys, 3>& keys, SharedVector value, std::optional<SharedVector> key,
    const std::array<HeldPerms, 3>& perms, PassContext ctx) {
  for (int pass = 0; pass < 3; ++pass) {
    const PartyId j(kPassPairs[pass]);
    const Permutation& pa = perms[j].second;
    const Permutation& pb = perms[j.next()].first;
    net.begin_phase("shuffle/pass" + std::to_string(pass));
    ctx.pass = pass;
    ctx.key = false;
    shuffle_pass(net, keys, value, j, pa, pb, ctx);
    if (key) {
      ctx.key = true;
      shuffle_pass(net, keys, *key, j, pa, pb, ctx);
    }
  }
  return {std::move(value), std::move(key)};
}

}  // namespace sparsagg

#endif  // SPARSAGG_SHUFFLE_HPP_
