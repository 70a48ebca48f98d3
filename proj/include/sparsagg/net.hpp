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

// In-process transport between the three servers and the clients. Every
// frame is counted per directed link and per named phase so that runs can be
// priced under a latency/bandwidth model afterwards.

#ifndef SPARSAGG_NET_HPP_
#define SPARSAGG_NET_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sparsagg/field.hpp"

namespace sparsagg {

/// A server (id 0..2) or a client (id 0..n-1).
struct Endpoint {
  enum class Kind : std::uint8_t { kServer, kClient };
  Kind kind = Kind::kServer;
  std::uint32_t id = 0;

  static Endpoint server(int i) { return {Kind::kServer, static_cast<std::uint32_t>(i)}; }
  static Endpoint client(std::uint32_t i) { return {Kind::kClient, i}; }

  bool is_server() const { return kind == Kind::kServer; }
  std::string name() const { return (is_server() ? "S" : "C") + std::to_string(id); }

  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

/// Phase tags carried in the first frame byte.
namespace tag {
inline constexpr std::uint8_t kUpload = 0x01;
inline constexpr std::uint8_t kShuffleBase = 0x10;  // + 2*pass + (key ? 1 : 0)
inline constexpr std::uint8_t kReshare = 0x20;
inline constexpr std::uint8_t kOpen = 0x28;
inline constexpr std::uint8_t kMacOpen = 0x30;
inline constexpr std::uint8_t kMacRandOpen = 0x31;
inline constexpr std::uint8_t kNoiseDeal = 0x40;
inline constexpr std::uint8_t kMaskDeal = 0x41;
inline constexpr std::uint8_t kKappaOpen = 0x42;
inline constexpr std::uint8_t kDeltaOpen = 0x50;
inline constexpr std::uint8_t kModelHash = 0x60;

inline std::uint8_t shuffle(int pass, bool key) {
  return static_cast<std::uint8_t>(kShuffleBase + 2 * pass + (key ? 1 : 0));
}
}  // namespace tag

/// Wire frame: tag u8 | round u32 LE | sender u8 | length u64 LE | payload.
/// Client senders are written as 0xFF.
struct Frame {
  static constexpr std::size_t kHeaderBytes = 1 + 4 + 1 + 8;
  static constexpr std::uint8_t kClientSender = 0xFF;
  static constexpr std::uint64_t kMaxPayload = std::uint64_t{1} << 32;

  std::uint8_t tag = 0;
  std::uint32_t round = 0;
  std::uint8_t sender = 0;
  std::vector<std::uint8_t> payload;

  std::size_t wire_size() const { return kHeaderBytes + payload.size(); }

  std::vector<std::uint8_t> encode() const {
    std::vector<std::uint8_t> out;
    out.reserve(wire_size());
    out.push_back(tag);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(round >> (8 * i)));
    out.push_back(sender);
    put_u64_le(out, payload.size());
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
  }

  static Frame decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderBytes) throw std::invalid_argument("Frame::decode: short header");
    Frame f;
    f.tag = bytes[0];
    for (int i = 0; i < 4; ++i) f.round |= static_cast<std::uint32_t>(bytes[1 + i]) << (8 * i);
    f.sender = bytes[5];
    std::uint64_t len = get_u64_le(bytes.subspan(6, 8));
    if (len != bytes.size() - kHeaderBytes) throw std::invalid_argument("Frame::decode: length mismatch");
    f.payload.assign(bytes.begin() + kHeaderBytes, bytes.end());
    return f;
  }

  /// Convenience: frame carrying field elements.
  static Frame of_elements(std::uint8_t tag, std::uint32_t round, std::uint8_t sender, std::span<const Fp> elems) {
    Frame f{tag, round, sender, {}};
    append_elements(f.payload, elems);
    return f;
  }
  FpVector elements() const { return parse_elements(payload); }
};

struct LinkStats {
  std::uint64_t messages = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t wire_bytes = 0;
  std::uint64_t logical_bits = 0;

  LinkStats& operator+=(const LinkStats& o) {
    messages += o.messages;
    payload_bytes += o.payload_bytes;
    wire_bytes += o.wire_bytes;
    logical_bits += o.logical_bits;
    return *this;
  }
};

using Link = std::pair<Endpoint, Endpoint>;
using LinkTable = std::map<Link, LinkStats>;

/// Traffic of one named phase. Phases run one after another; links inside a
/// phase run in parallel.
struct PhaseStats {
  std::string name;
  LinkTable links;
};

struct NetModel {
  double latency_ms = 40.0;
  double bandwidth_mbps = 100.0;
};

/// Critical-path estimate: for each phase, one latency plus the busiest
/// link's wire bits over the bandwidth.
inline double estimate_wallclock(std::span<const PhaseStats> phases, const NetModel& model) {
  if (model.latency_ms < 0 || model.bandwidth_mbps <= 0) throw std::invalid_argument("NetModel: bad parameters");
  double total = 0.0;
  for (const PhaseStats& ph : phases) {
    double busiest = 0.0;
    for (const auto& [link, st] : ph.links) busiest = std::max(busiest, 8.0 * static_cast<double>(st.wire_bytes));
    total += model.latency_ms / 1e3 + busiest / (model.bandwidth_mbps * 1e6);
  }
  return total;
}

/// Single-phase form: `bits` over one link plus one latency.
inline double estimate_wallclock(double bits, const NetModel& model, int sequential_phases = 1) {
  return sequential_phases * model.latency_ms / 1e3 + bits / (model.bandwidth_mbps * 1e6);
}

/// Thread-safe in-process message fabric with per-link FIFO queues.
class Network {
 public:
  /// Called on every frame before it is queued; may rewrite it. Used to
  /// model a corrupt sender.
  using SendHook = std::function<void(const Endpoint& from, const Endpoint& to, Frame& frame)>;

  explicit Network(std::uint32_t num_clients = 0) : num_clients_(num_clients) {}

  void set_num_clients(std::uint32_t n) { num_clients_ = n; }
  void set_send_hook(SendHook hook) {
    std::lock_guard lk(mu_);
    hook_ = std::move(hook);
  }

  /// Subsequent traffic is attributed to `name`. Reusing a name appends to
  /// the existing phase.
  void begin_phase(const std::string& name) {
    std::lock_guard lk(mu_);
    auto it = std::find_if(phases_.begin(), phases_.end(), [&](const PhaseStats& p) { return p.name == name; });
    current_ = static_cast<std::size_t>(it - phases_.begin());
    if (it == phases_.end()) phases_.push_back({name, {}});
  }

  /// `logical_bits` is the accounting size of the payload (61 bits per
  /// element, 128 per seed); the caller knows the payload composition.
  void send(const Endpoint& from, const Endpoint& to, Frame frame, std::uint64_t logical_bits) {
    check(from);
    check(to);
    if (frame.payload.size() > Frame::kMaxPayload) throw std::length_error("Network::send: frame exceeds 2^32 bytes");
    std::lock_guard lk(mu_);
    if (hook_) hook_(from, to, frame);
    LinkStats d{1, frame.payload.size(), frame.wire_size(), logical_bits};
    totals_[{from, to}] += d;
    if (phases_.empty()) phases_.push_back({"default", {}});
    phases_[current_].links[{from, to}] += d;
    queues_[{from, to}].push_back(std::move(frame));
  }

  /// Sends field elements; logical size is 61 bits per element.
  void send_elements(const Endpoint& from, const Endpoint& to, std::uint8_t t, std::uint32_t round,
                     std::span<const Fp> elems) {
    send(from, to, Frame::of_elements(t, round, sender_byte(from), elems), elems.size() * Fp::kBits);
  }

  Frame recv(const Endpoint& from, const Endpoint& to) {
    check(from);
    check(to);
    std::lock_guard lk(mu_);
    auto it = queues_.find({from, to});
    if (it == queues_.end() || it->second.empty()) {
      throw std::runtime_error("Network::recv: no message on " + from.name() + "->" + to.name());
    }
    Frame f = std::move(it->second.front());
    it->second.pop_front();
    return f;
  }

  /// Receives and checks the expected tag; returns the elements.
  FpVector recv_elements(const Endpoint& from, const Endpoint& to, std::uint8_t expected_tag) {
    Frame f = recv(from, to);
    if (f.tag != expected_tag) throw std::runtime_error("Network::recv: unexpected phase tag");
    return f.elements();
  }

  std::size_t pending() const {
    std::lock_guard lk(mu_);
    std::size_t n = 0;
    for (const auto& [l, q] : queues_) n += q.size();
    return n;
  }

  LinkTable totals() const {
    std::lock_guard lk(mu_);
    return totals_;
  }
  std::vector<PhaseStats> phases() const {
    std::lock_guard lk(mu_);
    return phases_;
  }

  /// Sum over server-to-server links.
  LinkStats inter_server() const {
    std::lock_guard lk(mu_);
    LinkStats s;
    for (const auto& [l, st] : totals_)
      if (l.first.is_server() && l.second.is_server()) s += st;
    return s;
  }
  /// Sum over links leaving one client.
  LinkStats client_upload(std::uint32_t client) const {
    std::lock_guard lk(mu_);
    LinkStats s;
    for (const auto& [l, st] : totals_)
      if (!l.first.is_server() && l.first.id == client) s += st;
    return s;
  }

  /// Drops queued frames and counters; called between rounds.
  void reset() {
    std::lock_guard lk(mu_);
    queues_.clear();
    totals_.clear();
    phases_.clear();
    current_ = 0;
  }

  static std::uint8_t sender_byte(const Endpoint& e) {
    return e.is_server() ? static_cast<std::uint8_t>(e.id) : Frame::kClientSender;
  }

 private:
  void check(const Endpoint& e) const {
    if (e.is_server() ? e.id >= 3 : e.id >= num_clients_) {
      throw std::out_of_range("Network: unknown endpoint " + e.name());
    }
  }

  mutable std::mutex mu_;
  std::atomic<std::uint32_t> num_clients_;
  SendHook hook_;
  std::map<Link, std::deque<Frame>> queues_;
  LinkTable totals_;
  std::vector<PhaseStats> phases_;
  std::size_t current_ = 0;
};

}  // namespace sparsagg

#endif  // SPARSAGG_NET_HPP_
