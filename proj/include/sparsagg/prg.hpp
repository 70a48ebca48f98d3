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

// Seeds and the deterministic pseudorandom generator shared by clients and
// servers.
//
// Stream construction (fixed so all parties expand identically):
//   key   = SHA-256("sparsagg/prg/key" || seed)            (32 bytes)
//   nonce = SHA-256("sparsagg/prg/nonce" || domain_tag)[0..12)
//   bytes = ChaCha20 (IETF variant) keystream under (key, nonce), counter 0
// The keystream is consumed in 8-byte little-endian words. Field elements
// take the low 61 bits of a word and reject the single value p = 2^61 - 1, so
// draws are exactly uniform on Z_p.

#ifndef SPARSAGG_PRG_HPP_
#define SPARSAGG_PRG_HPP_

#include <sodium.h>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sparsagg/field.hpp"

namespace sparsagg {

namespace detail {

inline void ensure_sodium() {
  static const bool ok = [] { return sodium_init() >= 0; }();
  if (!ok) throw std::runtime_error("libsodium initialization failed");
}

inline std::array<std::uint8_t, 32> sha256_concat(std::string_view prefix,
                                                 std::span<const std::uint8_t> data) {
  ensure_sodium();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(prefix.data()), prefix.size());
  crypto_hash_sha256_update(&st, data.data(), data.size());
  std::array<std::uint8_t, 32> out{};
  crypto_hash_sha256_final(&st, out.data());
  return out;
}

}  // namespace detail

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(std::span<const std::uint8_t> data) { return detail::sha256_concat("", data); }

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xF]);
  }
  return s;
}

/// 128-bit opaque seed.
struct Seed {
  static constexpr std::size_t kBytes = 16;
  static constexpr std::size_t kBits = 128;

  std::array<std::uint8_t, kBytes> bytes{};

  friend bool operator==(const Seed&, const Seed&) = default;

  std::string hex() const { return to_hex(bytes); }

  static Seed from_hex(std::string_view s) {
    if (s.size() != 2 * kBytes) throw std::invalid_argument("Seed::from_hex: expected 32 hex digits");
    auto nibble = [](char c) -> std::uint8_t {
      if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
      if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
      if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
      throw std::invalid_argument("Seed::from_hex: bad digit");
    };
    Seed out;
    for (std::size_t i = 0; i < kBytes; ++i) {
      out.bytes[i] = static_cast<std::uint8_t>(nibble(s[2 * i]) << 4 | nibble(s[2 * i + 1]));
    }
    return out;
  }

  /// Deterministic child seed; used to fan a master seed out to parties.
  Seed derive(std::string_view label) const {
    auto h = detail::sha256_concat(std::string("sparsagg/derive/") + std::string(label), bytes);
    Seed out;
    std::copy_n(h.begin(), kBytes, out.bytes.begin());
    return out;
  }

  static Seed from_u64(std::uint64_t v) {
    Seed s;
    for (int i = 0; i < 8; ++i) s.bytes[i] = static_cast<std::uint8_t>(v >> (8 * i));
    return s;
  }
};

/// ChaCha20 keystream positioned by (seed, domain tag).
class PrgStream {
 public:
  PrgStream(const Seed& seed, std::string_view domain_tag) {
    key_ = detail::sha256_concat("sparsagg/prg/key", seed.bytes);
    auto n = detail::sha256_concat(
        "sparsagg/prg/nonce",
        std::span(reinterpret_cast<const std::uint8_t*>(domain_tag.data()), domain_tag.size()));
    std::copy_n(n.begin(), nonce_.size(), nonce_.begin());
  }

  std::uint64_t next_u64() {
    if (pos_ == buf_.size()) refill();
    std::uint64_t v = get_u64_le(std::span<const std::uint8_t>(buf_).subspan(pos_, 8));
    pos_ += 8;
    return v;
  }

  /// Uniform element of Z_p by rejection on the masked 61-bit word.
  Fp next_field() {
    for (;;) {
      std::uint64_t v = next_u64() & Fp::kModulus;
      if (v < Fp::kModulus) return Fp(v);
    }
  }

  /// Uniform integer in [0, bound). Draws field elements and rejects the
  /// top partial bucket so every residue is equally likely.
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: empty range");
    const std::uint64_t limit = Fp::kModulus - Fp::kModulus % bound;
    for (;;) {
      std::uint64_t v = next_field().value();
      if (v < limit) return v % bound;
    }
  }

  /// 53-bit uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  Seed next_seed() {
    Seed s;
    std::uint64_t lo = next_u64(), hi = next_u64();
    for (int i = 0; i < 8; ++i) {
      s.bytes[i] = static_cast<std::uint8_t>(lo >> (8 * i));
      s.bytes[8 + i] = static_cast<std::uint8_t>(hi >> (8 * i));
    }
    return s;
  }

 private:
  void refill() {
    detail::ensure_sodium();
    std::fill(buf_.begin(), buf_.end(), 0);
    crypto_stream_chacha20_ietf_xor_ic(buf_.data(), buf_.data(), buf_.size(), nonce_.data(), block_,
                                       key_.data());
    block_ += static_cast<std::uint32_t>(buf_.size() / 64);
    pos_ = 0;
  }

  std::array<std::uint8_t, 32> key_{};
  std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES> nonce_{};
  std::array<std::uint8_t, 4096> buf_{};
  std::size_t pos_ = 4096;
  std::uint32_t block_ = 0;
};

/// n field elements from (seed, tag). Identical inputs give identical output.
inline FpVector prg_expand(const Seed& seed, std::string_view domain_tag, std::size_t n) {
  PrgStream s(seed, domain_tag);
  FpVector out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(s.next_field());
  return out;
}

/// UniformRandomBitGenerator over a PrgStream, for <random> distributions and
/// the samplers in this library.
class ChaChaRng {
 public:
  using result_type = std::uint64_t;

  ChaChaRng(const Seed& seed, std::string_view domain_tag) : stream_(seed, domain_tag) {}
  explicit ChaChaRng(std::uint64_t seed) : stream_(Seed::from_u64(seed), "rng") {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return stream_.next_u64(); }

  Fp field() { return stream_.next_field(); }
  std::uint64_t below(std::uint64_t bound) { return stream_.uniform_below(bound); }
  double uniform01() { return stream_.uniform01(); }
  Seed seed() { return stream_.next_seed(); }

 private:
  PrgStream stream_;
};

}  // namespace sparsagg

#endif  // SPARSAGG_PRG_HPP_
