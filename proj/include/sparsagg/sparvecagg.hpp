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

// Client encoding and server orchestration of secure sparse-vector
// aggregation: n sparse vectors in, one secret-shared dense sum out.

#ifndef SPARSAGG_SPARVECAGG_HPP_
#define SPARSAGG_SPARVECAGG_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparsagg/adversary.hpp"
#include "sparsagg/correlated.hpp"
#include "sparsagg/errors.hpp"
#include "sparsagg/field.hpp"
#include "sparsagg/integrity.hpp"
#include "sparsagg/net.hpp"
#include "sparsagg/permutation.hpp"
#include "sparsagg/prg.hpp"
#include "sparsagg/rss.hpp"
#include "sparsagg/shuffle.hpp"

namespace sparsagg {

/// What one server receives from one client.
///
/// Routing: S_0 gets (s0, s1), S_1 gets (s1, head), S_2 gets (head, s0).
/// `first_seed`/`second_seed` stand for the server's two permutation
/// factors; the factor without a seed is rebuilt from `head`.
struct ServerBundle {
  int server = 0;
  FpVector r_a;  // <r>_server
  FpVector r_b;  // <r>_server+1
  std::optional<Seed> first_seed;
  std::optional<Seed> second_seed;
  std::vector<std::uint64_t> head;
  // Malicious mode only.
  bool has_mac = false;
  Fp mac_a, mac_b;
  Seed key_a, key_b;

  std::size_t seed_count() const { return (first_seed ? 1 : 0) + (second_seed ? 1 : 0) + (has_mac ? 2 : 0); }
  std::size_t element_count() const { return r_a.size() + r_b.size() + head.size() + (has_mac ? 2 : 0); }
  std::uint64_t logical_bits() const { return element_count() * Fp::kBits + seed_count() * Seed::kBits; }

  /// u8 version | u8 flags | u8 server | u64 k | u64 head_len | r_a | r_b |
  /// [first_seed] | [second_seed] | head | [mac_a mac_b key_a key_b]
  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out;
    out.push_back(1);
    out.push_back(static_cast<std::uint8_t>((first_seed ? 1 : 0) | (second_seed ? 2 : 0) | (has_mac ? 4 : 0)));
    out.push_back(static_cast<std::uint8_t>(server));
    put_u64_le(out, r_a.size());
    put_u64_le(out, head.size());
    append_elements(out, r_a);
    append_elements(out, r_b);
    if (first_seed) out.insert(out.end(), first_seed->bytes.begin(), first_seed->bytes.end());
    if (second_seed) out.insert(out.end(), second_seed->bytes.begin(), second_seed->bytes.end());
    append_indices(out, head);
    if (has_mac) {
      put_u64_le(out, mac_a.value());
      put_u64_le(out, mac_b.value());
      out.insert(out.end(), key_a.bytes.begin(), key_a.bytes.end());
      out.insert(out.end(), key_b.bytes.begin(), key_b.bytes.end());
    }
    return out;
  }

  static ServerBundle parse(std::span<const std::uint8_t> in) {
    std::size_t pos = 0;
    auto take = [&](std::size_t n) {
      if (in.size() - pos < n) throw InvalidUpload("bundle truncated");
      auto s = in.subspan(pos, n);
      pos += n;
      return s;
    };
    auto take_seed = [&] {
      Seed s;
      auto b = take(Seed::kBytes);
      std::copy(b.begin(), b.end(), s.bytes.begin());
      return s;
    };
    auto take_elems = [&](std::uint64_t n) {
      if (n > in.size() / 8) throw InvalidUpload("bundle length field too large");
      try {
        return parse_elements(take(n * 8));
      } catch (const std::invalid_argument& e) {
        throw InvalidUpload(e.what());
      }
    };
    ServerBundle b;
    if (take(1)[0] != 1) throw InvalidUpload("bundle: unknown version");
    const std::uint8_t flags = take(1)[0];
    if (flags & ~7u) throw InvalidUpload("bundle: unknown flags");
    b.server = take(1)[0];
    if (b.server > 2) throw InvalidUpload("bundle: bad server index");
    const std::uint64_t k = get_u64_le(take(8));
    const std::uint64_t hl = get_u64_le(take(8));
    b.r_a = take_elems(k);
    b.r_b = take_elems(k);
    if (flags & 1) b.first_seed = take_seed();
    if (flags & 2) b.second_seed = take_seed();
    if (hl > in.size() / 8) throw InvalidUpload("bundle: head length too large");
    b.head = parse_indices(take(hl * 8));
    if (flags & 4) {
      b.has_mac = true;
      FpVector m = take_elems(2);
      b.mac_a = m[0];
      b.mac_b = m[1];
      b.key_a = take_seed();
      b.key_b = take_seed();
    }
    if (pos != in.size()) throw InvalidUpload("bundle: trailing bytes");
    return b;
  }
};

struct ClientUpload {
  std::uint32_t client = 0;
  Mode mode = Mode::kSemiHonest;
  std::size_t dim = 0;
  std::size_t k = 0;
  std::array<ServerBundle, 3> bundles;
};

inline std::uint64_t upload_logical_bits(const ClientUpload& u) {
  return u.bundles[0].logical_bits() + u.bundles[1].logical_bits() + u.bundles[2].logical_bits();
}

/// Closed forms for the per-client upload.
inline std::uint64_t expected_upload_bits(Mode mode, std::uint64_t k) {
  return mode == Mode::kMalicious ? (8 * k + 6) * Fp::kBits + 10 * Seed::kBits : 8 * k * Fp::kBits + 4 * Seed::kBits;
}

enum class BaselineKind { kDenseRss, kUncompressedPerm, kIndexValueStrawman };

/// Client cost of the comparison designs, in logical bits.
inline std::uint64_t baseline_client_cost(BaselineKind kind, std::uint64_t d, std::uint64_t k) {
  switch (kind) {
    case BaselineKind::kDenseRss: return 6 * d * Fp::kBits;
    case BaselineKind::kUncompressedPerm: return 6 * d * Fp::kBits + 6 * k * Fp::kBits;
    case BaselineKind::kIndexValueStrawman: return 12 * k * Fp::kBits;
  }
  return 0;
}

/// Client side: pad to k slots, move them to the front, split the
/// permutation, share the values and (malicious) the MAC.
inline ClientUpload client_encode(const SparseVector<Fp>& x_in, std::size_t k, Mode mode, ChaChaRng& rng,
                                  std::uint32_t client = 0) {
  SparseVector<Fp> x = pad_to_k(x_in, k);
  if (x.k() != k) throw std::invalid_argument("client_encode: slot count differs from k");
  Reordered<Fp> re = reorder(x);
  Permutation pi = derive_permutation(re.L, re.E);
  Decomposition dec = decompose_and_compress(pi, k, rng);
  SharedVector r = share(re.r, rng);

  ClientUpload up;
  up.client = client;
  up.mode = mode;
  up.dim = x.dim;
  up.k = k;
  for (int j = 0; j < 3; ++j) {
    up.bundles[j].server = j;
    up.bundles[j].r_a = r[j].a;
    up.bundles[j].r_b = r[j].b;
  }
  up.bundles[0].first_seed = dec.compressed.seed0;
  up.bundles[0].second_seed = dec.compressed.seed1;
  up.bundles[1].first_seed = dec.compressed.seed1;
  up.bundles[1].head = dec.compressed.head;
  up.bundles[2].head = dec.compressed.head;
  up.bundles[2].second_seed = dec.compressed.seed0;

  if (mode == Mode::kMalicious) {
    const std::array<Seed, 3> ks{rng.seed(), rng.seed(), rng.seed()};
    const Fp t = client_mac(re.r, ks);
    const SharedVector ts = share(std::span(&t, 1), rng);
    for (int j = 0; j < 3; ++j) {
      ServerBundle& b = up.bundles[j];
      b.has_mac = true;
      b.mac_a = ts[j].a[0];
      b.mac_b = ts[j].b[0];
      b.key_a = ks[j];
      b.key_b = ks[(j + 1) % 3];
    }
  }
  return up;
}

inline void send_upload(Network& net, const ClientUpload& up, std::uint32_t round) {
  for (int j = 0; j < 3; ++j) {
    Frame f{tag::kUpload, round, Frame::kClientSender, up.bundles[j].serialize()};
    net.send(Endpoint::client(up.client), Endpoint::server(j), std::move(f), up.bundles[j].logical_bits());
  }
}

inline std::array<ServerBundle, 3> receive_upload(Network& net, std::uint32_t client) {
  std::array<ServerBundle, 3> out;
  for (int j = 0; j < 3; ++j) {
    Frame f = net.recv(Endpoint::client(client), Endpoint::server(j));
    if (f.tag != tag::kUpload) throw InvalidUpload("unexpected frame in upload slot");
    out[j] = ServerBundle::parse(f.payload);
    if (out[j].server != j) throw InvalidUpload("bundle routed to the wrong server");
  }
  return out;
}

/// Public round parameters every server agrees on.
struct AggregationParams {
  std::size_t dim = 0;
  std::size_t k = 0;
  Mode mode = Mode::kSemiHonest;
  std::uint32_t round = 0;
  const AdversaryBehavior* adversary = nullptr;
};

/// Per-client server state after ingestion.
struct ClientState {
  std::uint32_t client = 0;
  SharedVector x;                  // shares of (r || 0^{d-k})
  std::optional<SharedVector> key; // shares of the MAC key
  std::optional<SharedVector> mac; // shares of t
  std::array<HeldPerms, 3> perms;
};

/// Server side: rebuild permutations, pad with shared zeros, expand keys.
inline ClientState server_ingest(const std::array<PartyKeys, 3>& keys, const std::array<ServerBundle, 3>& b,
                                 std::uint32_t client, const AggregationParams& p) {
  const std::size_t d = p.dim, k = p.k;
  const bool mal = p.mode == Mode::kMalicious;
  for (int j = 0; j < 3; ++j) {
    if (b[j].r_a.size() != k || b[j].r_b.size() != k) throw InvalidUpload("value shares have wrong length");
    if (b[j].has_mac != mal) throw InvalidUpload("MAC material does not match the mode");
  }
  if (!b[0].first_seed || !b[0].second_seed) throw InvalidUpload("S0 bundle misses a seed");
  if (!b[1].first_seed || b[1].head.size() != k) throw InvalidUpload("S1 bundle malformed");
  if (!b[2].second_seed || b[2].head.size() != k) throw InvalidUpload("S2 bundle malformed");

  ClientState st;
  st.client = client;
  st.perms[0] = {permutation_from_seed(*b[0].first_seed, d), permutation_from_seed(*b[0].second_seed, d)};
  st.perms[1] = {permutation_from_seed(*b[1].first_seed, d), server_decompress_head(b[1].head, d)};
  st.perms[2] = {server_decompress_head(b[2].head, d), permutation_from_seed(*b[2].second_seed, d)};

  const std::string pad_tag = "pad/r" + std::to_string(p.round) + "/c" + std::to_string(client);
  for (int j = 0; j < 3; ++j) {
    SharePair z = zero_share_pair(keys[j], pad_tag, d - k);
    RssVector v{PartyId(j), b[j].r_a, b[j].r_b};
    v.a.insert(v.a.end(), z.a.begin(), z.a.end());
    v.b.insert(v.b.end(), z.b.begin(), z.b.end());
    if (p.adversary && p.adversary->is(AdversaryKind::kWrongPadding, PartyId(j)) && d > 0) {
      // Both of the corrupt server's padding shares are shifted.
      v.a[k < d ? k : 0] += p.adversary->offset;
      v.b[k < d ? k : 0] += p.adversary->offset;
    }
    st.x[j] = std::move(v);
  }
  if (mal) {
    SharedVector key, mac;
    for (int j = 0; j < 3; ++j) {
      key[j] = RssVector{PartyId(j), mac_key_share(b[j].key_a, d), mac_key_share(b[j].key_b, d)};
      mac[j] = RssVector{PartyId(j), {b[j].mac_a}, {b[j].mac_b}};
    }
    st.key = std::move(key);
    st.mac = std::move(mac);
  }
  return st;
}

struct AggregateResult {
  SharedVector sum;                      // shares of the dense aggregate
  std::vector<std::uint32_t> accepted;   // clients folded into `sum`
  std::vector<std::uint32_t> rejected;   // clients dropped at ingestion
  std::optional<BatchVerdict> verdict;   // malicious mode
};

/// Runs ingestion, shuffling and (malicious) MAC verification for the
/// uploads already queued on `net`, and sums the shuffled vectors.
inline AggregateResult aggregate_queued(Network& net, const std::array<PartyKeys, 3>& keys,
                                        std::span<const std::uint32_t> clients, const AggregationParams& p) {
  AggregateResult res;
  for (int j = 0; j < 3; ++j) res.sum[j] = RssVector{PartyId(j), FpVector(p.dim), FpVector(p.dim)};
  MacBatch batch;
  for (std::uint32_t c : clients) {
    std::optional<ClientState> st;
    try {
      st = server_ingest(keys, receive_upload(net, c), c, p);
    } catch (const InvalidUpload&) {
      res.rejected.push_back(c);
      continue;
    }
    PassContext ctx;
    ctx.round = p.round;
    ctx.client = c;
    ctx.adversary = p.adversary;
    auto [value, key] = oblivious_apply(net, keys, std::move(st->x), std::move(st->key), st->perms, ctx);
    if (key) batch.add(*st->mac, value, *key);
    for (int j = 0; j < 3; ++j) add_local_into(res.sum[j], value[j]);
    res.accepted.push_back(c);
  }
  if (res.accepted.empty()) throw std::invalid_argument("aggregate: no valid upload");
  if (p.mode == Mode::kMalicious) res.verdict = blind_batch_verify(net, keys, batch, p.round);
  return res;
}

/// Full client-to-aggregate path: uploads go over `net`, then the servers
/// aggregate. Installs the adversary's message hooks for the duration.
inline AggregateResult aggregate_round(Network& net, const std::array<PartyKeys, 3>& keys,
                                       std::span<const ClientUpload> uploads, const AggregationParams& p) {
  std::uint32_t max_client = 0;
  std::vector<std::uint32_t> ids;
  for (const ClientUpload& u : uploads) {
    max_client = std::max(max_client, u.client + 1);
    ids.push_back(u.client);
  }
  net.set_num_clients(std::max<std::uint32_t>(max_client, 1));
  if (p.adversary) p.adversary->install(net);
  net.begin_phase("upload");
  for (const ClientUpload& u : uploads) send_upload(net, u, p.round);
  try {
    AggregateResult r = aggregate_queued(net, keys, ids, p);
    net.set_send_hook(nullptr);
    return r;
  } catch (...) {
    net.set_send_hook(nullptr);
    throw;
  }
}

/// Plaintext oracle: the field sum of the sparse vectors.
inline FpVector plaintext_sum(std::span<const SparseVector<Fp>> xs, std::size_t d) {
  FpVector s(d);
  for (const auto& x : xs)
    for (std::size_t j = 0; j < x.k(); ++j) s.at(x.indices[j]) += x.values[j];
  return s;
}

}  // namespace sparsagg

#endif  // SPARSAGG_SPARVECAGG_HPP_
