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

// Per-round record of traffic and verdicts, the unit of experiment reports.

#ifndef SPARSAGG_TRANSCRIPT_HPP_
#define SPARSAGG_TRANSCRIPT_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsagg/dpnoise.hpp"
#include "sparsagg/errors.hpp"
#include "sparsagg/net.hpp"
#include "sparsagg/rss.hpp"

namespace sparsagg {

struct RoundTranscript {
  std::uint32_t round = 0;
  Mode mode = Mode::kSemiHonest;
  std::vector<std::uint32_t> participants;
  std::vector<std::uint32_t> rejected;
  AbortReason abort_reason = AbortReason::kNone;
  std::string abort_message;
  LinkTable links;
  std::vector<PhaseStats> phases;
  std::uint64_t upload_logical_bits = 0;  // all clients together
  std::vector<KsReport> ks_reports;
  std::optional<std::uint64_t> mac_f;
  std::string model_hash;

  bool aborted() const { return abort_reason != AbortReason::kNone; }

  void capture(const Network& net) {
    links = net.totals();
    phases = net.phases();
  }

  LinkStats inter_server() const {
    LinkStats s;
    for (const auto& [l, st] : links)
      if (l.first.is_server() && l.second.is_server()) s += st;
    return s;
  }
  LinkStats uploads() const {
    LinkStats s;
    for (const auto& [l, st] : links)
      if (!l.first.is_server()) s += st;
    return s;
  }
  double estimated_seconds(const NetModel& m = {}) const { return estimate_wallclock(phases, m); }
};

inline nlohmann::json to_json(const LinkStats& s) {
  return {{"messages", s.messages},
          {"payload_bytes", s.payload_bytes},
          {"wire_bytes", s.wire_bytes},
          {"logical_bits", s.logical_bits}};
}

inline nlohmann::json to_json(const KsReport& r) {
  return {{"party", r.party},       {"verifier", r.verifier}, {"d_ks", r.d_ks},
          {"d_crit", r.d_crit},     {"alpha", r.alpha},       {"decision", r.pass ? "pass" : "abort"},
          {"seeds", {{"mask", r.mask_seed}, {"reference", r.reference_seed}}}};
}

inline nlohmann::json to_json(const RoundTranscript& t, bool with_links = true) {
  nlohmann::json j{{"round", t.round},
                   {"mode", std::string(to_string(t.mode))},
                   {"participants", t.participants.size()},
                   {"rejected", t.rejected},
                   {"abort_reason", std::string(to_string(t.abort_reason))},
                   {"upload_logical_bits", t.upload_logical_bits},
                   {"inter_server", to_json(t.inter_server())},
                   {"estimated_seconds", t.estimated_seconds()}};
  if (!t.abort_message.empty()) j["abort_message"] = t.abort_message;
  if (t.mac_f) j["mac_f"] = *t.mac_f;
  if (!t.model_hash.empty()) j["model_hash"] = t.model_hash;
  auto& ks = j["ks"] = nlohmann::json::array();
  for (const KsReport& r : t.ks_reports) ks.push_back(to_json(r));
  if (with_links) {
    auto& links = j["links"] = nlohmann::json::array();
    for (const auto& [l, st] : t.links) {
      nlohmann::json e = to_json(st);
      e["from"] = l.first.name();
      e["to"] = l.second.name();
      links.push_back(std::move(e));
    }
    auto& phases = j["phases"] = nlohmann::json::array();
    for (const PhaseStats& ph : t.phases) {
      LinkStats sum;
      for (const auto& [l, st] : ph.links) sum += st;
      nlohmann::json e = to_json(sum);
      e["name"] = ph.name;
      phases.push_back(std::move(e));
    }
  }
  return j;
}

}  // namespace sparsagg

#endif  // SPARSAGG_TRANSCRIPT_HPP_
