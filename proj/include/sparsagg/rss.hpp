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

// Replicated secret sharing over Z_p among three servers.
//
// A secret x is split as x = <x>_0 + <x>_1 + <x>_2 and party P_i stores the
// pair (<x>_i, <x>_{i+1}). Simulations keep all three parties' views in a
// SharedVector indexed by party id; protocol functions touch view i only on
// behalf of P_i and move everything else through the Network.

#ifndef SPARSAGG_RSS_HPP_
#define SPARSAGG_RSS_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sparsagg/correlated.hpp"
#include "sparsagg/errors.hpp"
#include "sparsagg/field.hpp"
#include "sparsagg/net.hpp"
#include "sparsagg/prg.hpp"

namespace sparsagg {

enum class Mode { kSemiHonest, kMalicious };

inline std::string_view to_string(Mode m) { return m == Mode::kMalicious ? "malicious" : "semi_honest"; }

inline Mode parse_mode(std::string_view s) {
  if (s == "semi_honest" || s == "semi-honest") return Mode::kSemiHonest;
  if (s == "malicious") return Mode::kMalicious;
  throw std::invalid_argument("unknown mode: " + std::string(s));
}

/// One party's view: a = <x>_owner, b = <x>_{owner+1}.
struct RssVector {
  PartyId owner;
  FpVector a;
  FpVector b;

  std::size_t size() const { return a.size(); }
  void check() const {
    if (a.size() != b.size()) throw std::invalid_argument("RssVector: share lengths differ");
  }
};

using SharedVector = std::array<RssVector, 3>;

/// Assembles views from the three additive shares.
inline SharedVector views_from_shares(const std::array<FpVector, 3>& s) {
  SharedVector v;
  for (int i = 0; i < 3; ++i) v[i] = RssVector{PartyId(i), s[i], s[(i + 1) % 3]};
  return v;
}

inline SharedVector share(std::span<const Fp> secret, ChaChaRng& rng) {
  std::array<FpVector, 3> s;
  s[0].reserve(secret.size());
  s[1].reserve(secret.size());
  for (std::size_t j = 0; j < secret.size(); ++j) {
    s[0].push_back(rng.field());
    s[1].push_back(rng.field());
  }
  s[2].assign(secret.begin(), secret.end());
  sub_into(s[2], s[0]);
  sub_into(s[2], s[1]);
  return views_from_shares(s);
}

/// Pure reconstruction from all three views. Malicious mode compares the two
/// stored copies of every share first.
inline FpVector reconstruct(const SharedVector& v, Mode mode = Mode::kMalicious) {
  for (int i = 0; i < 3; ++i) {
    v[i].check();
    if (v[i].owner != PartyId(i)) throw std::invalid_argument("reconstruct: views out of order");
    if (v[i].size() != v[0].size()) throw std::invalid_argument("reconstruct: length mismatch");
  }
  if (mode == Mode::kMalicious) {
    for (int i = 0; i < 3; ++i) {
      if (v[i].b != v[(i + 1) % 3].a) throw ConsistencyAbort("reconstruct: share copies disagree");
    }
  }
  FpVector out = v[0].a;
  add_into(out, v[1].a);
  add_into(out, v[2].a);
  return out;
}

// ---------------------------------------------------------------------------
// Local linear operations.

inline void require_compatible(const RssVector& x, const RssVector& y) {
  if (x.owner != y.owner) throw std::invalid_argument("rss: operands belong to different parties");
  if (x.size() != y.size() || x.b.size() != y.b.size()) throw std::invalid_argument("rss: length mismatch");
}

inline RssVector& add_local_into(RssVector& acc, const RssVector& y) {
  require_compatible(acc, y);
  add_into(acc.a, y.a);
  add_into(acc.b, y.b);
  return acc;
}

inline RssVector add_local(RssVector x, const RssVector& y) { return add_local_into(x, y); }

inline RssVector sub_local(RssVector x, const RssVector& y) {
  require_compatible(x, y);
  sub_into(x.a, y.a);
  sub_into(x.b, y.b);
  return x;
}

inline RssVector scale_local(RssVector x, Fp c) {
  for (Fp& e : x.a) e *= c;
  for (Fp& e : x.b) e *= c;
  return x;
}

/// Adds a public vector; it is folded into share 0, so P_0 and P_2 act.
inline RssVector add_public(RssVector x, std::span<const Fp> c) {
  if (c.size() != x.size()) throw std::invalid_argument("add_public: length mismatch");
  if (x.owner == PartyId(0)) add_into(x.a, c);
  if (x.owner == PartyId(2)) add_into(x.b, c);
  return x;
}

template <typename Op>
SharedVector apply_all(const SharedVector& x, const SharedVector& y, Op op) {
  return {op(x[0], y[0]), op(x[1], y[1]), op(x[2], y[2])};
}

inline SharedVector add_shared(const SharedVector& x, const SharedVector& y) {
  return apply_all(x, y, [](const RssVector& a, const RssVector& b) { return add_local(a, b); });
}
inline SharedVector sub_shared(const SharedVector& x, const SharedVector& y) {
  return apply_all(x, y, [](const RssVector& a, const RssVector& b) { return sub_local(a, b); });
}

/// Concatenated views (x || y), used to batch scalars into one message.
inline RssVector concat(RssVector x, const RssVector& y) {
  if (x.owner != y.owner) throw std::invalid_argument("concat: different parties");
  x.a.insert(x.a.end(), y.a.begin(), y.a.end());
  x.b.insert(x.b.end(), y.b.begin(), y.b.end());
  return x;
}

// ---------------------------------------------------------------------------
// Openings.

/// Every party learns x. P_i sends <x>_{i+1} to P_{i-1}; in malicious mode
/// P_{i+1} also sends its copy and the receiver compares them. Returns each
/// party's reconstruction (identical when nobody cheats).
inline std::array<FpVector, 3> open_all(Network& net, const SharedVector& v, Mode mode, std::uint8_t t,
                                        std::uint32_t round) {
  for (int i = 0; i < 3; ++i) {
    v[i].check();
    const PartyId me(i);
    net.send_elements(Endpoint::server(i), Endpoint::server(me.prev()), t, round, v[i].b);
    if (mode == Mode::kMalicious) net.send_elements(Endpoint::server(i), Endpoint::server(me.next()), t, round, v[i].a);
  }
  std::array<FpVector, 3> out;
  for (int i = 0; i < 3; ++i) {
    const PartyId me(i);
    FpVector missing = net.recv_elements(Endpoint::server(me.next()), Endpoint::server(i), t);
    if (mode == Mode::kMalicious) {
      FpVector copy = net.recv_elements(Endpoint::server(me.prev()), Endpoint::server(i), t);
      if (copy != missing) throw ConsistencyAbort("open: " + Endpoint::server(i).name() + " saw inconsistent copies");
    }
    if (missing.size() != v[i].size()) throw std::runtime_error("open: wrong length received");
    out[i] = v[i].a;
    add_into(out[i], v[i].b);
    add_into(out[i], missing);
  }
  return out;
}

/// Only `target` learns x.
inline FpVector open_to(Network& net, const SharedVector& v, PartyId target, Mode mode, std::uint8_t t,
                        std::uint32_t round) {
  const PartyId n = target.next(), p = target.prev();
  net.send_elements(Endpoint::server(n), Endpoint::server(target), t, round, v[n].b);
  if (mode == Mode::kMalicious) net.send_elements(Endpoint::server(p), Endpoint::server(target), t, round, v[p].a);
  FpVector missing = net.recv_elements(Endpoint::server(n), Endpoint::server(target), t);
  if (mode == Mode::kMalicious) {
    FpVector copy = net.recv_elements(Endpoint::server(p), Endpoint::server(target), t);
    if (copy != missing) throw ConsistencyAbort("open_to: inconsistent copies");
  }
  FpVector out = v[target].a;
  add_into(out, v[target].b);
  add_into(out, missing);
  return out;
}

// ---------------------------------------------------------------------------
// Multiplication.

/// P_i's 3-out-of-3 share of <x, y>.
inline Fp local_dot_term(const RssVector& x, const RssVector& y) {
  require_compatible(x, y);
  Fp acc;
  for (std::size_t j = 0; j < x.size(); ++j) acc += x.a[j] * y.a[j] + x.a[j] * y.b[j] + x.b[j] * y.a[j];
  return acc;
}

/// Turns additive shares z_0 + z_1 + z_2 into a replicated sharing: each
/// party masks with a zero share and sends its piece to P_{i-1}.
inline SharedVector reshare(Network& net, const std::array<PartyKeys, 3>& keys, std::array<FpVector, 3> z,
                            std::string_view prf_tag, std::uint8_t t, std::uint32_t round) {
  for (int i = 0; i < 3; ++i) {
    add_into(z[i], zero_share(keys[i], prf_tag, z[i].size()));
    net.send_elements(Endpoint::server(i), Endpoint::server(PartyId(i).prev()), t, round, z[i]);
  }
  SharedVector out;
  for (int i = 0; i < 3; ++i) {
    FpVector nxt = net.recv_elements(Endpoint::server(PartyId(i).next()), Endpoint::server(i), t);
    out[i] = RssVector{PartyId(i), std::move(z[i]), std::move(nxt)};
  }
  return out;
}

/// Batched dot products: entry c of the result shares <xs[c], ys[c]>. One
/// message per party carrying one element per pair.
inline SharedVector secure_dots(Network& net, const std::array<PartyKeys, 3>& keys, std::span<const SharedVector> xs,
                                std::span<const SharedVector> ys, std::string_view prf_tag, std::uint32_t round) {
  if (xs.size() != ys.size()) throw std::invalid_argument("secure_dots: batch size mismatch");
  std::array<FpVector, 3> z;
  for (int i = 0; i < 3; ++i) {
    z[i].reserve(xs.size());
    for (std::size_t c = 0; c < xs.size(); ++c) z[i].push_back(local_dot_term(xs[c][i], ys[c][i]));
  }
  return reshare(net, keys, std::move(z), prf_tag, tag::kReshare, round);
}

inline SharedVector secure_dot(Network& net, const std::array<PartyKeys, 3>& keys, const SharedVector& x,
                               const SharedVector& y, std::string_view prf_tag, std::uint32_t round) {
  return secure_dots(net, keys, std::span(&x, 1), std::span(&y, 1), prf_tag, round);
}

/// Elementwise product of two equal-length shared vectors.
inline SharedVector secure_mul(Network& net, const std::array<PartyKeys, 3>& keys, const SharedVector& x,
                               const SharedVector& y, std::string_view prf_tag, std::uint32_t round) {
  std::array<FpVector, 3> z;
  for (int i = 0; i < 3; ++i) {
    require_compatible(x[i], y[i]);
    z[i].resize(x[i].size());
    for (std::size_t j = 0; j < x[i].size(); ++j)
      z[i][j] = x[i].a[j] * y[i].a[j] + x[i].a[j] * y[i].b[j] + x[i].b[j] * y[i].a[j];
  }
  return reshare(net, keys, std::move(z), prf_tag, tag::kReshare, round);
}

/// Shared uniform vector from correlated randomness; no communication.
inline SharedVector random_shared(const std::array<PartyKeys, 3>& keys, std::string_view prf_tag, std::size_t n) {
  SharedVector out;
  for (int i = 0; i < 3; ++i) {
    SharePair sp = random_share_pair(keys[i], prf_tag, n);
    out[i] = RssVector{PartyId(i), std::move(sp.a), std::move(sp.b)};
  }
  return out;
}

/// Shared zero vector from the common key; no communication.
inline SharedVector zero_shared(const std::array<PartyKeys, 3>& keys, std::string_view prf_tag, std::size_t n) {
  SharedVector out;
  for (int i = 0; i < 3; ++i) {
    SharePair sp = zero_share_pair(keys[i], prf_tag, n);
    out[i] = RssVector{PartyId(i), std::move(sp.a), std::move(sp.b)};
  }
  return out;
}

}  // namespace sparsagg

#endif  // SPARSAGG_RSS_HPP_
