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

// Permutations on [d], the sparse re-ordering encoding, and the client/server
// sides of permutation compression.
//
// Convention: dest[i] is where element i lands, so permute(pi, v)[dest[i]] =
// v[i], and compose(p1, p2) applies p2 first.

#ifndef SPARSAGG_PERMUTATION_HPP_
#define SPARSAGG_PERMUTATION_HPP_

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparsagg/errors.hpp"
#include "sparsagg/field.hpp"
#include "sparsagg/prg.hpp"

namespace sparsagg {

class Permutation {
 public:
  Permutation() = default;
  /// Validates that `dest` is a bijection on [d].
  explicit Permutation(std::vector<std::uint64_t> dest) : dest_(std::move(dest)) {
    std::vector<bool> seen(dest_.size(), false);
    for (std::uint64_t t : dest_) {
      if (t >= dest_.size() || seen[t]) throw std::invalid_argument("Permutation: not a bijection");
      seen[t] = true;
    }
  }

  static Permutation identity(std::size_t d) {
    Permutation p;
    p.dest_.resize(d);
    std::iota(p.dest_.begin(), p.dest_.end(), std::uint64_t{0});
    return p;
  }

  std::size_t size() const { return dest_.size(); }
  std::uint64_t operator()(std::size_t i) const { return dest_.at(i); }
  const std::vector<std::uint64_t>& dest() const { return dest_; }
  bool is_identity() const {
    for (std::size_t i = 0; i < dest_.size(); ++i)
      if (dest_[i] != i) return false;
    return true;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::uint64_t> dest_;
};

template <typename T>
std::vector<T> permute(const Permutation& pi, std::span<const T> v) {
  if (v.size() != pi.size()) throw std::invalid_argument("permute: length mismatch");
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[pi(i)] = v[i];
  return out;
}

template <typename T>
std::vector<T> permute(const Permutation& pi, const std::vector<T>& v) {
  return permute(pi, std::span<const T>(v));
}

/// (p1 o p2)(v) = p1(p2(v)).
inline Permutation compose(const Permutation& p1, const Permutation& p2) {
  if (p1.size() != p2.size()) throw std::invalid_argument("compose: size mismatch");
  std::vector<std::uint64_t> d(p1.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = p1(p2(i));
  return Permutation(std::move(d));
}

inline Permutation invert(const Permutation& p) {
  std::vector<std::uint64_t> d(p.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[p(i)] = i;
  return Permutation(std::move(d));
}

/// Fisher-Yates from the top: for i = d-1 .. 1 swap slot i with a uniform
/// slot j in [0, i], starting from the identity. Index draws use the field
/// stream under tag "perm" with rejection, so they are unbiased.
inline Permutation permutation_from_seed(const Seed& seed, std::size_t d) {
  PrgStream s(seed, "perm");
  std::vector<std::uint64_t> dest(d);
  std::iota(dest.begin(), dest.end(), std::uint64_t{0});
  for (std::size_t i = d; i-- > 1;) std::swap(dest[i], dest[s.uniform_below(i + 1)]);
  return Permutation(std::move(dest));
}

// ---------------------------------------------------------------------------
// Sparse vectors.

/// k explicit slots (index, value). Slots may carry a zero value when a
/// vector is padded up to the common k.
template <typename T>
struct SparseVector {
  std::size_t dim = 0;
  std::vector<std::uint64_t> indices;
  std::vector<T> values;

  std::size_t k() const { return indices.size(); }

  void validate() const {
    if (indices.size() != values.size()) throw std::invalid_argument("SparseVector: ragged slots");
    if (indices.size() > dim) throw std::invalid_argument("SparseVector: k exceeds dim");
    std::vector<bool> seen(dim, false);
    for (std::uint64_t i : indices) {
      if (i >= dim || seen[i]) throw std::invalid_argument("SparseVector: bad index");
      seen[i] = true;
    }
  }

  /// Slots for the nonzero entries of `dense`, ascending.
  static SparseVector from_dense(std::span<const T> dense) {
    SparseVector s;
    s.dim = dense.size();
    for (std::size_t i = 0; i < dense.size(); ++i) {
      if (dense[i] != T{}) {
        s.indices.push_back(i);
        s.values.push_back(dense[i]);
      }
    }
    return s;
  }

  std::vector<T> to_dense() const {
    validate();
    std::vector<T> out(dim, T{});
    for (std::size_t j = 0; j < indices.size(); ++j) out[indices[j]] = values[j];
    return out;
  }
};

/// Adds zero-valued slots at the lowest unused indices until there are k.
template <typename T>
SparseVector<T> pad_to_k(SparseVector<T> x, std::size_t k) {
  x.validate();
  if (x.k() > k) throw std::invalid_argument("pad_to_k: more than k slots");
  if (k > x.dim) throw std::invalid_argument("pad_to_k: k exceeds dim");
  std::vector<bool> used(x.dim, false);
  for (std::uint64_t i : x.indices) used[i] = true;
  for (std::size_t i = 0; i < x.dim && x.k() < k; ++i) {
    if (!used[i]) {
      x.indices.push_back(i);
      x.values.push_back(T{});
    }
  }
  return x;
}

/// Result of moving the slots of x to the front.
template <typename T>
struct Reordered {
  std::vector<T> r;                  // r[j] = x[L[j]]
  std::vector<std::uint64_t> L;      // slot indices, ascending
  std::vector<std::uint64_t> E;      // remaining indices, ascending
};

template <typename T>
Reordered<T> reorder(const SparseVector<T>& x) {
  x.validate();
  std::vector<std::size_t> order(x.k());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x.indices[a] < x.indices[b]; });
  Reordered<T> out;
  std::vector<bool> used(x.dim, false);
  for (std::size_t j : order) {
    out.L.push_back(x.indices[j]);
    out.r.push_back(x.values[j]);
    used[x.indices[j]] = true;
  }
  for (std::size_t i = 0; i < x.dim; ++i)
    if (!used[i]) out.E.push_back(i);
  return out;
}

/// pi(j) = L[j] for j < k and E[j - k] after.
inline Permutation derive_permutation(std::span<const std::uint64_t> L, std::span<const std::uint64_t> E) {
  std::vector<std::uint64_t> d(L.begin(), L.end());
  d.insert(d.end(), E.begin(), E.end());
  try {
    return Permutation(std::move(d));
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("derive_permutation: L and E must partition [d]");
  }
}

/// (r || 0^{d-k}).
template <typename T>
std::vector<T> zero_padded(std::span<const T> r, std::size_t d) {
  if (r.size() > d) throw std::invalid_argument("zero_padded: k exceeds dim");
  std::vector<T> out(r.begin(), r.end());
  out.resize(d, T{});
  return out;
}

// ---------------------------------------------------------------------------
// Compression.

/// What a client uploads instead of a full permutation: two seeds and the
/// first k destinations of the third factor.
struct CompressedPermutation {
  Seed seed0;
  Seed seed1;
  std::vector<std::uint64_t> head;
};

struct Decomposition {
  CompressedPermutation compressed;
  Permutation pi0;
  Permutation pi1;
  Permutation pi2;  // full third factor, never uploaded
};

/// pi = pi0 o pi1 o pi2 with pi0, pi1 seeded and pi2 = pi1^-1 o pi0^-1 o pi.
inline Decomposition decompose_and_compress(const Permutation& pi, std::size_t k, ChaChaRng& rng) {
  if (k > pi.size()) throw std::invalid_argument("decompose_and_compress: k exceeds dim");
  Decomposition out;
  out.compressed.seed0 = rng.seed();
  out.compressed.seed1 = rng.seed();
  out.pi0 = permutation_from_seed(out.compressed.seed0, pi.size());
  out.pi1 = permutation_from_seed(out.compressed.seed1, pi.size());
  out.pi2 = compose(invert(out.pi1), compose(invert(out.pi0), pi));
  out.compressed.head.assign(out.pi2.dest().begin(), out.pi2.dest().begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

/// Rebuilds a stand-in for the third factor: head first, then the unused
/// indices ascending. It agrees with the true factor on any vector whose
/// last d-k entries are zero. Bad heads are rejected as invalid uploads.
inline Permutation server_decompress_head(std::span<const std::uint64_t> head, std::size_t d) {
  if (head.size() > d) throw InvalidUpload("head longer than dimension");
  std::vector<bool> used(d, false);
  std::vector<std::uint64_t> dest;
  dest.reserve(d);
  for (std::uint64_t h : head) {
    if (h >= d) throw InvalidUpload("head index out of range");
    if (used[h]) throw InvalidUpload("duplicate head index");
    used[h] = true;
    dest.push_back(h);
  }
  for (std::size_t i = 0; i < d; ++i)
    if (!used[i]) dest.push_back(i);
  return Permutation(std::move(dest));
}

inline void append_indices(std::vector<std::uint8_t>& out, std::span<const std::uint64_t> idx) {
  for (std::uint64_t i : idx) put_u64_le(out, i);
}

inline std::vector<std::uint64_t> parse_indices(std::span<const std::uint8_t> in) {
  if (in.size() % 8 != 0) throw std::invalid_argument("parse_indices: ragged payload");
  std::vector<std::uint64_t> out;
  for (std::size_t off = 0; off < in.size(); off += 8) out.push_back(get_u64_le(in.subspan(off, 8)));
  return out;
}

}  // namespace sparsagg

#endif  // SPARSAGG_PERMUTATION_HPP_
