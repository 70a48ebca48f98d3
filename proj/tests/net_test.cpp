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

#include <gtest/gtest.h>

#include <thread>

#include "sparsagg/experiments.hpp"
#include "sparsagg/net.hpp"

namespace sparsagg {
namespace {

TEST(FrameTest, EncodeDecodeRoundTrip) {
  Frame f{tag::kReshare, 0xA1B2C3D4u, 2, {1, 2, 3, 4, 5}};
  auto bytes = f.encode();
  ASSERT_EQ(bytes.size(), Frame::kHeaderBytes + 5);
  EXPECT_EQ(bytes[0], tag::kReshare);
  EXPECT_EQ(bytes[1], 0xD4);
  Frame g = Frame::decode(bytes);
  EXPECT_EQ(g.tag, f.tag);
  EXPECT_EQ(g.round, f.round);
  EXPECT_EQ(g.sender, f.sender);
  EXPECT_EQ(g.payload, f.payload);
  bytes.pop_back();
  EXPECT_THROW(Frame::decode(bytes), std::invalid_argument);
  EXPECT_THROW(Frame::decode(std::vector<std::uint8_t>(5)), std::invalid_argument);
}

TEST(NetworkTest, SingleElementAccounting) {
  Network net;
  const Fp one = Fp::one();
  net.send_elements(Endpoint::server(0), Endpoint::server(1), tag::kOpen, 0, std::span(&one, 1));
  const auto t = net.totals().at({Endpoint::server(0), Endpoint::server(1)});
  EXPECT_EQ(t.messages, 1u);
  EXPECT_EQ(t.payload_bytes, 8u);
  EXPECT_EQ(t.wire_bytes, 22u);
  EXPECT_EQ(t.logical_bits, 61u);
  EXPECT_EQ(net.recv_elements(Endpoint::server(0), Endpoint::server(1), tag::kOpen), FpVector{one});
  EXPECT_EQ(net.pending(), 0u);
}

TEST(NetworkTest, UnknownEndpointsAndEmptyQueues) {
  Network net(2);
  EXPECT_THROW(net.send_elements(Endpoint::server(3), Endpoint::server(0), tag::kOpen, 0, {}), std::out_of_range);
  EXPECT_THROW(net.send_elements(Endpoint::client(2), Endpoint::server(0), tag::kOpen, 0, {}), std::out_of_range);
  EXPECT_NO_THROW(net.send_elements(Endpoint::client(1), Endpoint::server(0), tag::kOpen, 0, {}));
  EXPECT_THROW(net.recv(Endpoint::server(1), Endpoint::server(2)), std::runtime_error);
  EXPECT_THROW(net.recv_elements(Endpoint::client(1), Endpoint::server(0), tag::kReshare), std::runtime_error);
}

TEST(NetworkTest, PhasesAndReset) {
  Network net;
  net.begin_phase("a");
  net.send(Endpoint::server(0), Endpoint::server(2), Frame{1, 0, 0, {0}}, 8);
  net.begin_phase("b");
  net.send(Endpoint::server(2), Endpoint::server(0), Frame{1, 0, 2, {0, 0}}, 16);
  net.begin_phase("a");
  net.send(Endpoint::server(0), Endpoint::server(2), Frame{1, 0, 0, {0}}, 8);
  auto ph = net.phases();
  ASSERT_EQ(ph.size(), 2u);
  EXPECT_EQ(ph[0].links.at({Endpoint::server(0), Endpoint::server(2)}).messages, 2u);
  EXPECT_EQ(net.inter_server().logical_bits, 32u);
  net.reset();
  EXPECT_EQ(net.pending(), 0u);
  EXPECT_TRUE(net.phases().empty());
}

TEST(NetworkTest, PerLinkFifoUnderConcurrency) {
  Network net;
  constexpr int kPerThread = 2000;
  std::vector<std::thread> threads;
  for (int s = 0; s < 3; ++s) {
    threads.emplace_back([&net, s] {
      for (int i = 0; i < kPerThread; ++i) {
        const Fp v(static_cast<std::uint64_t>(i));
        net.send_elements(Endpoint::server(s), Endpoint::server(PartyId(s) + 1), tag::kOpen, 0, std::span(&v, 1));
      }
    });
  }
  for (auto& t : threads) t.join();
  for (int s = 0; s < 3; ++s) {
    for (int i = 0; i < kPerThread; ++i) {
      auto v = net.recv_elements(Endpoint::server(s), Endpoint::server(PartyId(s) + 1), tag::kOpen);
      ASSERT_EQ(v[0], Fp(static_cast<std::uint64_t>(i)));
    }
  }
}

TEST(NetworkTest, HookRewritesFrames) {
  Network net;
  net.set_send_hook([](const Endpoint&, const Endpoint&, Frame& f) { f.payload.push_back(9); });
  net.send(Endpoint::server(0), Endpoint::server(1), Frame{1, 0, 0, {}}, 0);
  EXPECT_EQ(net.recv(Endpoint::server(0), Endpoint::server(1)).payload, (std::vector<std::uint8_t>{9}));
  net.set_send_hook(nullptr);
  net.send(Endpoint::server(0), Endpoint::server(1), Frame{1, 0, 0, {}}, 0);
  EXPECT_TRUE(net.recv(Endpoint::server(0), Endpoint::server(1)).payload.empty());
}

TEST(WallclockTest, Examples) {
  const NetModel m;
  EXPECT_NEAR(estimate_wallclock(0.0, m), 0.040, 1e-12);
  EXPECT_NEAR(estimate_wallclock(1e8, m), 1.040, 1e-12);
  EXPECT_NEAR(estimate_wallclock(0.0, m, 3), 0.120, 1e-12);
  EXPECT_THROW(estimate_wallclock(std::vector<PhaseStats>{}, NetModel{40, 0}), std::invalid_argument);
}

TEST(WallclockTest, BusiestLinkDominates) {
  std::vector<PhaseStats> ph(1);
  ph[0].links[{Endpoint::server(0), Endpoint::server(1)}].wire_bytes = 1250000;  // 10 Mbit
  ph[0].links[{Endpoint::server(1), Endpoint::server(2)}].wire_bytes = 125000;
  EXPECT_NEAR(estimate_wallclock(ph, NetModel{}), 0.040 + 0.1, 1e-12);
}

TEST(ScalingTest, InterServerTrafficIsLinearInParticipants) {
  std::vector<double> xs, ys;
  for (std::size_t n : {4, 8, 12, 16, 24}) {
    AggregateConfig cfg;
    cfg.n = n;
    cfg.d = 2000;
    cfg.density = 0.01;
    cfg.mode = Mode::kMalicious;
    auto out = run_aggregate(cfg);
    ASSERT_TRUE(out.correct);
    xs.push_back(double(n));
    ys.push_back(double(out.transcript.inter_server().wire_bytes));
  }
  const double n = double(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i] / n, my += ys[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  EXPECT_GT(sxy * sxy / (sxx * syy), 0.999);
}

}  // namespace
}  // namespace sparsagg
