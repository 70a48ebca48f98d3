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

#ifndef SPARSAGG_FIELD_HPP_
#define SPARSAGG_FIELD_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsagg {

/// Element of Z_p with p = 2^61 - 1. The stored value is always canonical.
class Fp {
 public:
  static constexpr std::uint64_t kModulus = (std::uint64_t{1} << 61) - 1;
  /// Bit length used for logical communication accounting.
  static constexpr std::size_t kBits = 61;
  static constexpr std::size_t kWireBytes = 8;

  constexpr Fp() = default;
  /// Reduces an arbitrary 64-bit value.
  constexpr explicit Fp(std::uint64_t v) : v_(reduce64(v)) {}

  static constexpr Fp zero() { return Fp(); }
  static constexpr Fp one() { return Fp(1); }

  /// Interprets a signed integer as its residue mod p.
  static constexpr Fp from_signed(std::int64_t v) {
    if (v >= 0) return Fp(static_cast<std::uint64_t>(v));
    // -(v) may overflow for INT64_MIN; go through unsigned negation.
    std::uint64_t mag = ~static_cast<std::uint64_t>(v) + 1;
    return -Fp(mag);
  }

  constexpr std::uint64_t value() const { return v_; }

  /// Centered representative in (-p/2, p/2].
  constexpr std::int64_t centered() const {
    return v_ > kModulus / 2 ? static_cast<std::int64_t>(v_) - static_cast<std::int64_t>(kModulus)
                             : static_cast<std::int64_t>(v_);
  }

  constexpr Fp& operator+=(Fp o) {
    std::uint64_t s = v_ + o.v_;  // < 2^62, no overflow
    v_ = s >= kModulus ? s - kModulus : s;
    return *this;
  }
  constexpr Fp& operator-=(Fp o) {
    v_ = v_ >= o.v_ ? v_ - o.v_ : v_ + kModulus - o.v_;
    return *this;
  }
  constexpr Fp& operator*=(Fp o) {
    unsigned __int128 prod = static_cast<unsigned __int128>(v_) * o.v_;
    std::uint64_t lo = static_cast<std::uint64_t>(prod) & kModulus;
    std::uint64_t hi = static_cast<std::uint64_t>(prod >> 61);
    std::uint64_t s = lo + hi;
    v_ = s >= kModulus ? s - kModulus : s;
    return *this;
  }

  friend constexpr Fp operator+(Fp a, Fp b) { return a += b; }
  friend constexpr Fp operator-(Fp a, Fp b) { return a -= b; }
  friend constexpr Fp operator*(Fp a, Fp b) { return a *= b; }
  constexpr Fp operator-() const { return Fp() - *this; }

  friend constexpr bool operator==(Fp a, Fp b) = default;

 private:
  static constexpr std::uint64_t reduce64(std::uint64_t v) {
    std::uint64_t s = (v & kModulus) + (v >> 61);
    return s >= kModulus ? s - kModulus : s;
  }

  std::uint64_t v_ = 0;
};

using FpVector = std::vector<Fp>;

inline FpVector& add_into(FpVector& acc, std::span<const Fp> other) {
  if (acc.size() != other.size()) throw std::invalid_argument("add_into: length mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += other[i];
  return acc;
}

inline FpVector& sub_into(FpVector& acc, std::span<const Fp> other) {
  if (acc.size() != other.size()) throw std::invalid_argument("sub_into: length mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] -= other[i];
  return acc;
}

inline Fp dot(std::span<const Fp> a, std::span<const Fp> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  Fp acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// ---------------------------------------------------------------------------
// Little-endian serialization. Field elements travel as 8-byte LE words.

inline void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get_u64_le(std::span<const std::uint8_t> in) {
  if (in.size() < 8) throw std::out_of_range("get_u64_le: short buffer");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

inline void append_elements(std::vector<std::uint8_t>& out, std::span<const Fp> elems) {
  out.reserve(out.size() + elems.size() * Fp::kWireBytes);
  for (Fp e : elems) put_u64_le(out, e.value());
}

/// Parses 8-byte LE words; rejects non-canonical values.
inline FpVector parse_elements(std::span<const std::uint8_t> in) {
  if (in.size() % Fp::kWireBytes != 0) throw std::invalid_argument("parse_elements: ragged payload");
  FpVector out;
  out.reserve(in.size() / Fp::kWireBytes);
  for (std::size_t off = 0; off < in.size(); off += Fp::kWireBytes) {
    std::uint64_t v = get_u64_le(in.subspan(off, 8));
    if (v >= Fp::kModulus) throw std::invalid_argument("parse_elements: non-canonical field element");
    out.emplace_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Signed fixed-point embedding of reals into Z_p.
///
/// encode(x) = round(x * 2^frac_bits) mod p, rounding half away from zero.
/// decode uses the centered representative so residues above p/2 come back
/// negative.
class FixedPointCodec {
 public:
  static constexpr int kDefaultFracBits = 15;

  explicit constexpr FixedPointCodec(int frac_bits = kDefaultFracBits) : frac_bits_(frac_bits) {
    if (frac_bits < 0 || frac_bits > 40) throw std::invalid_argument("FixedPointCodec: bad frac_bits");
  }

  constexpr int frac_bits() const { return frac_bits_; }
  double scale() const { return std::ldexp(1.0, frac_bits_); }

  /// Largest magnitude accepted by encode: p / 2^(frac_bits + 1).
  double max_magnitude() const { return static_cast<double>(Fp::kModulus) / std::ldexp(1.0, frac_bits_ + 1); }

  Fp encode(double x) const {
    if (!std::isfinite(x) || std::fabs(x) >= max_magnitude()) {
      throw std::overflow_error("fixed_encode: value out of representable range");
    }
    double scaled = std::round(x * scale());  // std::round is half-away-from-zero
    return Fp::from_signed(static_cast<std::int64_t>(scaled));
  }

  double decode(Fp e) const { return static_cast<double>(e.centered()) / scale(); }

  FpVector encode(std::span<const double> xs) const {
    FpVector out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(encode(x));
    return out;
  }

  std::vector<double> decode(std::span<const Fp> es) const {
    std::vector<double> out;
    out.reserve(es.size());
    for (Fp e : es) out.push_back(decode(e));
    return out;
  }

 private:
  int frac_bits_;
};

}  // namespace sparsagg

#endif  // SPARSAGG_FIELD_HPP_
