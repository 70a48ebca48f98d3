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

// Single-server deviations injected into simulated rounds. At most one
// server is corrupt.

#ifndef SPARSAGG_ADVERSARY_HPP_
#define SPARSAGG_ADVERSARY_HPP_

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sparsagg/correlated.hpp"
#include "sparsagg/field.hpp"
#include "sparsagg/net.hpp"

namespace sparsagg {

enum class AdversaryKind {
  kNone,
  kWrongPermutation,          // swaps two destinations in its first active shuffle pass
  kShareTamper,               // adds an offset to one element it forwards in a shuffle pass
  kAdditiveAggregationError,  // shifts its own share of the aggregate before opening
  kInflatedNoise,             // samples its noise with std scaled by `factor`
  kInconsistentOpening,       // sends altered copies when the MAC check value is opened
  kWrongPadding,              // shifts both of its padding shares of each client vector
};

inline constexpr std::array<std::pair<AdversaryKind, std::string_view>, 7> kAdversaryNames{{
    {AdversaryKind::kNone, "none"},
    {AdversaryKind::kWrongPermutation, "wrong_permutation"},
    {AdversaryKind::kShareTamper, "share_tamper"},
    {AdversaryKind::kAdditiveAggregationError, "additive_aggregation_error"},
    {AdversaryKind::kInflatedNoise, "inflated_noise"},
    {AdversaryKind::kInconsistentOpening, "inconsistent_opening"},
    {AdversaryKind::kWrongPadding, "wrong_padding"},
}};

inline std::string_view to_string(AdversaryKind k) {
  for (const auto& [kind, name] : kAdversaryNames)
    if (kind == k) return name;
  return "unknown";
}

inline AdversaryKind parse_adversary_kind(std::string_view s) {
  for (const auto& [kind, name] : kAdversaryNames)
    if (name == s) return kind;
  throw std::invalid_argument("unknown adversary kind: " + std::string(s));
}

/// Shuffle passes run for active pairs j = 1, 0, 2 (pass index 0, 1, 2).
inline constexpr std::array<int, 3> kPassPairs{1, 0, 2};

/// First pass index in which `p` is one of the two active servers.
inline int first_active_pass(PartyId p) {
  for (int pass = 0; pass < 3; ++pass) {
    const PartyId j(kPassPairs[pass]);
    if (p == j || p == j.next()) return pass;
  }
  return -1;  // unreachable: every server is active in two passes
}

struct AdversaryBehavior {
  AdversaryKind kind = AdversaryKind::kNone;
  PartyId corrupt{0};
  double factor = 2.0;   // std multiplier for kInflatedNoise
  Fp offset = Fp::one(); // additive error for tamper-style kinds

  bool active() const { return kind != AdversaryKind::kNone; }
  bool is(AdversaryKind k, PartyId party) const { return kind == k && corrupt == party; }

  /// Installs the message-level deviations on the fabric. Local deviations
  /// are applied by the protocol code that owns the corrupt server's state.
  void install(Network& net) const {
    if (kind == AdversaryKind::kShareTamper) {
      const std::uint8_t target = tag::shuffle(first_active_pass(corrupt), false);
      const Endpoint me = Endpoint::server(corrupt);
      const Fp e = offset;
      net.set_send_hook([=](const Endpoint& from, const Endpoint&, Frame& f) {
        if (from == me && f.tag == target) bump_first(f, e);
      });
    } else if (kind == AdversaryKind::kInconsistentOpening) {
      const Endpoint me = Endpoint::server(corrupt);
      const Fp e = offset;
      net.set_send_hook([=](const Endpoint& from, const Endpoint&, Frame& f) {
        if (from == me && f.tag == tag::kMacOpen) bump_first(f, e);
      });
    } else {
      net.set_send_hook(nullptr);
    }
  }

 private:
  static void bump_first(Frame& f, Fp e) {
    FpVector v = f.elements();
    if (v.empty()) return;
    v[0] += e;
    f.payload.clear();
    append_elements(f.payload, v);
  }
};

}  // namespace sparsagg

#endif  // SPARSAGG_ADVERSARY_HPP_
