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

// Malicious-security checks: blind batch verification of client MACs after
// decompression and shuffling, and hash comparison of the updated model.

#ifndef SPARSAGG_INTEGRITY_HPP_
#define SPARSAGG_INTEGRITY_HPP_

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "sparsagg/correlated.hpp"
#include "sparsagg/errors.hpp"
#include "sparsagg/field.hpp"
#include "sparsagg/net.hpp"
#include "sparsagg/prg.hpp"
#include "sparsagg/rss.hpp"

namespace sparsagg {

inline constexpr std::string_view kMacKeyTag = "mackey";

/// Share m of the MAC key, G(ks_m). The first n entries do not depend on
/// how many more are expanded.
inline FpVector mac_key_share(const Seed& ks, std::size_t n) { return prg_expand(ks, kMacKeyTag, n); }

/// k = G(ks_0) + G(ks_1) + G(ks_2).
inline FpVector expand_mac_key(const std::array<Seed, 3>& ks, std::size_t n) {
  FpVector k = mac_key_share(ks[0], n);
  add_into(k, mac_key_share(ks[1], n));
  add_into(k, mac_key_share(ks[2], n));
  return k;
}

/// t = sum_j key[j] * x'[j]. `key` may be longer than x' when x' is the
/// unpadded prefix.
inline Fp client_mac(std::span<const Fp> x_prime, std::span<const Fp> key) {
  if (key.size() < x_prime.size()) throw std::invalid_argument("client_mac: key shorter than vector");
  return dot(x_prime, key.first(x_prime.size()));
}

inline Fp client_mac(std::span<const Fp> x_prime, const std::array<Seed, 3>& ks) {
  return client_mac(x_prime, expand_mac_key(ks, x_prime.size()));
}

/// Per-round batch of shared MACs and the local pieces of <pi(x'), pi(k)>,
/// filled client by client so shuffled vectors need not be retained.
class MacBatch {
 public:
  void add(const SharedVector& mac, const SharedVector& shuffled_value, const SharedVector& shuffled_key) {
    for (int i = 0; i < 3; ++i) {
      if (mac[i].size() != 1) throw std::invalid_argument("MacBatch: MAC share must be a scalar");
      macs_[i] = concat(std::move(macs_[i]), mac[i]);
      terms_[i].push_back(local_dot_term(shuffled_value[i], shuffled_key[i]));
    }
  }

  std::size_t size() const { return terms_[0].size(); }
  const SharedVector& macs() const { return macs_; }
  const std::array<FpVector, 3>& terms() const { return terms_; }

 private:
  SharedVector macs_{RssVector{PartyId(0), {}, {}}, RssVector{PartyId(1), {}, {}}, RssVector{PartyId(2), {}, {}}};
  std::array<FpVector, 3> terms_;
};

inline std::string mac_prf_tag(std::uint32_t round, std::string_view what) {
  return "mac/r" + std::to_string(round) + "/" + std::string(what);
}

/// Shared residuals f_c = t_c - t'_c, one per client. Costs the single
/// resharing round of the batched dot products.
inline SharedVector mac_residuals(Network& net, const std::array<PartyKeys, 3>& keys, const MacBatch& batch,
                                  std::uint32_t round) {
  net.begin_phase("mac/dot");
  SharedVector tprime = reshare(net, keys, batch.terms(), mac_prf_tag(round, "dot"), tag::kReshare, round);
  return sub_shared(batch.macs(), tprime);
}

struct BatchVerdict {
  Fp f;
  bool accept = false;
  int draws = 1;  // how many r were needed (more than one only if r = 0)
};

/// Opens f = r * sum_c f_c with redundant-copy comparison. f != 0 aborts.
/// When f = 0 the servers also open r and redraw if it happened to be zero.
inline BatchVerdict blind_batch_verify(Network& net, const std::array<PartyKeys, 3>& keys, const MacBatch& batch,
                                       std::uint32_t round) {
  const SharedVector residuals = mac_residuals(net, keys, batch, round);
  SharedVector sum;
  for (int i = 0; i < 3; ++i) {
    sum[i] = RssVector{PartyId(i), {Fp()}, {Fp()}};
    for (std::size_t c = 0; c < residuals[i].size(); ++c) {
      sum[i].a[0] += residuals[i].a[c];
      sum[i].b[0] += residuals[i].b[c];
    }
  }
  net.begin_phase("mac/open");
  BatchVerdict v;
  for (v.draws = 1;; ++v.draws) {
    const std::string attempt = "/" + std::to_string(v.draws);
    SharedVector r = random_shared(keys, mac_prf_tag(round, "r" + attempt), 1);
    SharedVector masked = secure_mul(net, keys, r, sum, mac_prf_tag(round, "mul" + attempt), round);
    auto opened = open_all(net, masked, Mode::kMalicious, tag::kMacOpen, round);
    v.f = opened[0][0];
    if (v.f != Fp()) throw MacAbort("blind MAC check: f != 0");
    auto r_open = open_all(net, r, Mode::kMalicious, tag::kMacRandOpen, round);
    if (r_open[0][0] != Fp()) break;
  }
  v.accept = true;
  return v;
}

// ---------------------------------------------------------------------------

/// SHA-256 over the model as consecutive 8-byte little-endian IEEE doubles,
/// followed by the opened update as 8-byte little-endian field elements.
/// The update is included because a one-unit shift of a large coordinate
/// can vanish in double rounding.
inline Digest model_hash(std::span<const double> w, std::span<const Fp> opened_update = {}) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve((w.size() + opened_update.size()) * 8);
  for (double x : w) put_u64_le(bytes, std::bit_cast<std::uint64_t>(x));
  append_elements(bytes, opened_update);
  return sha256(bytes);
}

/// Each server sends the digest of its model (and, when given, the update it
/// opened) to the other two and aborts on any mismatch. Returns the common
/// digest.
inline Digest model_hash_check(Network& net, const std::array<std::vector<double>, 3>& w, std::uint32_t round,
                               const std::array<FpVector, 3>* opened_update = nullptr) {
  net.begin_phase("hash");
  std::array<Digest, 3> own;
  for (int i = 0; i < 3; ++i) {
    own[i] = opened_update ? model_hash(w[i], (*opened_update)[i]) : model_hash(w[i]);
    for (int o : {1, 2}) {
      Frame f{tag::kModelHash, round, static_cast<std::uint8_t>(i), {own[i].begin(), own[i].end()}};
      net.send(Endpoint::server(i), Endpoint::server(PartyId(i) + o), std::move(f), 8 * own[i].size());
    }
  }
  bool mismatch = false;
  for (int i = 0; i < 3; ++i) {
    for (int o : {1, 2}) {
      Frame f = net.recv(Endpoint::server(PartyId(i) + o), Endpoint::server(i));
      if (f.tag != tag::kModelHash || f.payload.size() != own[i].size() ||
          !std::equal(f.payload.begin(), f.payload.end(), own[i].begin())) {
        mismatch = true;
      }
    }
  }
  if (mismatch) throw HashAbort("model hashes disagree");
  return own[0];
}

}  // namespace sparsagg

#endif  // SPARSAGG_INTEGRITY_HPP_
