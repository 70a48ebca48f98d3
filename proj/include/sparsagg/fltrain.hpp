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

// Federated training loop over a synthetic least-squares task: local SGD,
// top-k, clipping, secure aggregation, distributed noise, verification and
// the model update.

#ifndef SPARSAGG_FLTRAIN_HPP_
#define SPARSAGG_FLTRAIN_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsagg/accountant.hpp"
#include "sparsagg/adversary.hpp"
#include "sparsagg/correlated.hpp"
#include "sparsagg/dpnoise.hpp"
#include "sparsagg/errors.hpp"
#include "sparsagg/field.hpp"
#include "sparsagg/integrity.hpp"
#include "sparsagg/net.hpp"
#include "sparsagg/permutation.hpp"
#include "sparsagg/prg.hpp"
#include "sparsagg/rss.hpp"
#include "sparsagg/sparvecagg.hpp"
#include "sparsagg/transcript.hpp"

namespace sparsagg {

/// Client i holds (A_i, b_i) with m rows; F_i(w) = ||A_i w - b_i||^2 / (2m).
/// The global objective is the mean of the F_i.
class SyntheticTask {
 public:
  struct Params {
    std::size_t clients = 10;
    std::size_t dim = 20;
    std::size_t samples = 50;      // rows per client
    double label_noise = 0.1;
    double heterogeneity = 0.5;    // spread of per-client optima
  };

  static SyntheticTask generate(const Params& s, std::uint64_t seed) {
    if (s.clients == 0 || s.dim == 0 || s.samples == 0) throw std::invalid_argument("SyntheticTask: empty task");
    SyntheticTask t;
    t.params_ = s;
    ChaChaRng rng(Seed::from_u64(seed).derive("task"), "data");
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::VectorXd w_true(s.dim);
    for (auto& v : w_true) v = nd(rng);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(s.dim, s.dim);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(s.dim);
    for (std::size_t i = 0; i < s.clients; ++i) {
      Eigen::MatrixXd A(s.samples, s.dim);
      for (Eigen::Index r = 0; r < A.rows(); ++r)
        for (Eigen::Index c = 0; c < A.cols(); ++c) A(r, c) = nd(rng);
      Eigen::VectorXd wi = w_true;
      for (auto& v : wi) v += s.heterogeneity * nd(rng);
      Eigen::VectorXd b = A * wi;
      for (auto& v : b) v += s.label_noise * nd(rng);
      H += A.transpose() * A;
      g += A.transpose() * b;
      t.A_.push_back(std::move(A));
      t.b_.push_back(std::move(b));
    }
    t.w_star_ = H.ldlt().solve(g);
    return t;
  }

  std::size_t dim() const { return params_.dim; }
  std::size_t clients() const { return params_.clients; }
  std::size_t samples() const { return params_.samples; }
  const Eigen::MatrixXd& A(std::size_t i) const { return A_.at(i); }
  const Eigen::VectorXd& b(std::size_t i) const { return b_.at(i); }
  const Eigen::VectorXd& w_star() const { return w_star_; }

  double client_loss(std::size_t i, const Eigen::VectorXd& w) const {
    return (A_.at(i) * w - b_.at(i)).squaredNorm() / (2.0 * static_cast<double>(params_.samples));
  }
  double loss(const Eigen::VectorXd& w) const {
    double s = 0;
    for (std::size_t i = 0; i < A_.size(); ++i) s += client_loss(i, w);
    return s / static_cast<double>(A_.size());
  }
  double optimum_loss() const { return loss(w_star_); }

  /// Gradient of the mean squared error over the given rows.
  Eigen::VectorXd gradient(std::size_t i, const Eigen::VectorXd& w, std::span<const std::size_t> rows) const {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
    for (std::size_t r : rows) {
      const auto row = A_.at(i).row(static_cast<Eigen::Index>(r));
      grad += row.transpose() * (row.dot(w) - b_.at(i)(static_cast<Eigen::Index>(r)));
    }
    return grad / static_cast<double>(rows.size());
  }

  /// Largest eigenvalue of A_i^T A_i / m.
  double smoothness(std::size_t i) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A_.at(i).transpose() * A_.at(i) / double(params_.samples));
    return es.eigenvalues().maxCoeff();
  }

 private:
  Params params_;
  std::vector<Eigen::MatrixXd> A_;
  std::vector<Eigen::VectorXd> b_;
  Eigen::VectorXd w_star_;
};

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}
inline std::vector<double> from_eigen(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

/// E epochs of mini-batch SGD from w; returns w^E - w. batch_size 0 means
/// full batch. Row order is reshuffled each epoch from `rng`.
inline std::vector<double> local_update(const SyntheticTask& task, std::size_t client, std::span<const double> w,
                                        int epochs, double eta, std::size_t batch_size, ChaChaRng& rng) {
  const Eigen::VectorXd w0 = to_eigen(w);
  Eigen::VectorXd wi = w0;
  const std::size_t m = task.samples();
  const std::size_t bs = batch_size == 0 ? m : std::min(batch_size, m);
  std::vector<std::size_t> rows(m);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (int e = 0; e < epochs; ++e) {
    if (bs < m) std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t start = 0; start < m; start += bs) {
      const std::size_t len = std::min(bs, m - start);
      wi -= eta * task.gradient(client, wi, std::span(rows).subspan(start, len));
    }
  }
  return from_eigen(wi - w0);
}

/// The k largest magnitudes; equal magnitudes go to the lower index. Slots
/// come back in ascending index order.
inline SparseVector<double> topk_sparsify(std::span<const double> v, std::size_t k) {
  if (k > v.size()) throw std::invalid_argument("topk_sparsify: k exceeds dimension");
  std::vector<std::uint64_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::uint64_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::uint64_t a, std::uint64_t b) {
                      const double ma = std::fabs(v[a]), mb = std::fabs(v[b]);
                      return ma != mb ? ma > mb : a < b;
                    });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  SparseVector<double> s;
  s.dim = v.size();
  s.indices = idx;
  for (std::uint64_t i : idx) s.values.push_back(v[i]);
  return s;
}

/// x / max(1, ||x|| / C).
inline SparseVector<double> clip(SparseVector<double> x, double C) {
  if (!(C > 0)) throw std::invalid_argument("clip: C must be positive");
  double n2 = 0;
  for (double v : x.values) n2 += v * v;
  const double scale = std::max(1.0, std::sqrt(n2) / C);
  if (scale > 1.0)
    for (double& v : x.values) v /= scale;
  return x;
}

inline SparseVector<Fp> fixed_encode(const SparseVector<double>& x, const FixedPointCodec& codec = FixedPointCodec()) {
  SparseVector<Fp> out;
  out.dim = x.dim;
  out.indices = x.indices;
  for (double v : x.values) out.values.push_back(codec.encode(v));
  return out;
}

/// Independent Bernoulli(q) inclusion per client from a public seed, so
/// every server derives the same sample.
inline std::vector<std::uint32_t> sample_clients(const Seed& seed, std::uint32_t round, std::size_t n, double q) {
  if (!(q > 0 && q <= 1)) throw std::invalid_argument("sample_clients: q outside (0, 1]");
  ChaChaRng rng(seed.derive("sampling"), "r" + std::to_string(round));
  std::vector<std::uint32_t> out;
  for (std::uint32_t c = 0; c < n; ++c)
    if (rng.uniform01() < q) out.push_back(c);
  return out;
}

struct TrainConfig {
  SyntheticTask::Params task;
  double q = 1.0;
  std::uint32_t rounds = 10;
  int local_epochs = 1;
  double eta_l = 0.05;
  std::size_t batch_size = 0;
  double clip = 1.0;
  std::size_t k = 0;          // 0: derive from density
  double density = 1.0;       // lambda, used when k == 0
  double sigma = 0.0;
  double delta = 1e-5;        // for the epsilon metric
  Mode mode = Mode::kSemiHonest;
  AdversaryBehavior adversary;
  std::uint64_t seed = 1;

  std::size_t effective_k() const {
    if (k > 0) return std::min(k, task.dim);
    return std::min<std::size_t>(task.dim,
                                 std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(density * task.dim))));
  }

  void validate() const {
    if (!(q > 0 && q <= 1)) throw std::invalid_argument("config: q must be in (0, 1]");
    if (!(clip > 0)) throw std::invalid_argument("config: clip must be positive");
    if (k > task.dim) throw std::invalid_argument("config: k exceeds dimension");
    if (!(density > 0 && density <= 1)) throw std::invalid_argument("config: density must be in (0, 1]");
    if (!(sigma >= 0)) throw std::invalid_argument("config: sigma must be nonnegative");
    NoiseParams{sigma, clip, task.dim}.validate(task.clients);
  }
};

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.task.clients = j.value("n", c.task.clients);
  c.task.dim = j.value("d", c.task.dim);
  c.task.samples = j.value("samples_per_client", c.task.samples);
  c.task.label_noise = j.value("label_noise", c.task.label_noise);
  c.task.heterogeneity = j.value("heterogeneity", c.task.heterogeneity);
  c.q = j.value("q", c.q);
  c.rounds = j.value("T", c.rounds);
  c.local_epochs = j.value("E", c.local_epochs);
  c.eta_l = j.value("eta_l", c.eta_l);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.clip = j.value("C", c.clip);
  c.k = j.value("k", c.k);
  c.density = j.value("lambda", c.density);
  c.sigma = j.value("sigma", c.sigma);
  c.delta = j.value("delta", c.delta);
  c.mode = parse_mode(j.value("mode", std::string("semi_honest")));
  c.seed = j.value("seed", c.seed);
  if (j.contains("adversary")) {
    const auto& a = j["adversary"];
    c.adversary.kind = parse_adversary_kind(a.value("kind", std::string("none")));
    const int corrupt = a.value("corrupt_party", 0);
    if (corrupt < 0 || corrupt > 2) throw std::invalid_argument("config: corrupt_party must be 0, 1 or 2");
    c.adversary.corrupt = PartyId(corrupt);
    c.adversary.factor = a.value("factor", 2.0);
  }
  return c;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"n", c.task.clients},
          {"d", c.task.dim},
          {"samples_per_client", c.task.samples},
          {"label_noise", c.task.label_noise},
          {"heterogeneity", c.task.heterogeneity},
          {"q", c.q},
          {"T", c.rounds},
          {"E", c.local_epochs},
          {"eta_l", c.eta_l},
          {"batch_size", c.batch_size},
          {"C", c.clip},
          {"k", c.effective_k()},
          {"sigma", c.sigma},
          {"delta", c.delta},
          {"mode", std::string(to_string(c.mode))},
          {"adversary",
           {{"kind", std::string(to_string(c.adversary.kind))},
            {"corrupt_party", c.adversary.corrupt.value()},
            {"factor", c.adversary.factor}}},
          {"seed", c.seed}};
}

/// Field-exact bookkeeping of one round, for checks outside the protocol.
struct RoundLedger {
  FpVector update_sum;                            // sum of encoded client vectors
  std::array<std::vector<std::int64_t>, 3> eta;   // each server's noise
  FpVector opened;                                // Delta as opened by S_0
};

struct RoundResult {
  std::vector<double> w;  // model after the round (unchanged on abort)
  RoundTranscript transcript;
  RoundLedger ledger;
};

/// Everything that persists across rounds.
struct TrainState {
  const SyntheticTask* task = nullptr;
  std::array<PartyKeys, 3> keys;
  Seed public_seed;  // client sampling
  Seed client_seed;  // client-side randomness
  std::vector<double> w;
  std::uint32_t round = 0;

  static TrainState init(const SyntheticTask& task, std::uint64_t seed) {
    TrainState s;
    s.task = &task;
    const Seed root = Seed::from_u64(seed);
    s.keys = setup_correlated_randomness(root.derive("servers"));
    s.public_seed = root.derive("public");
    s.client_seed = root.derive("clients");
    s.w.assign(task.dim(), 0.0);
    return s;
  }
};

/// Clipped, quantized top-k update of one client.
inline SparseVector<Fp> client_update(const TrainState& st, const TrainConfig& cfg, std::uint32_t c) {
  ChaChaRng rng(st.client_seed, "sgd/r" + std::to_string(st.round) + "/c" + std::to_string(c));
  auto delta = local_update(*st.task, c, st.w, cfg.local_epochs, cfg.eta_l, cfg.batch_size, rng);
  return fixed_encode(clip(topk_sparsify(delta, cfg.effective_k()), cfg.clip));
}

/// Server side of one round for uploads from `clients`: aggregate, verify
/// (malicious), add noise, open, update w and compare model hashes
/// (malicious). Aborts are caught and recorded; `w` is then unchanged.
inline RoundResult secure_round(Network& net, const std::array<PartyKeys, 3>& keys,
                                std::span<const ClientUpload> uploads, const AggregationParams& ap,
                                const NoiseParams& np, std::span<const double> w_prev) {
  const std::size_t d = ap.dim;
  const FixedPointCodec codec;
  const bool mal = ap.mode == Mode::kMalicious;
  const AdversaryBehavior* adv = ap.adversary;
  if (w_prev.size() != d) throw std::invalid_argument("secure_round: model dimension mismatch");

  RoundResult res;
  res.w.assign(w_prev.begin(), w_prev.end());
  RoundTranscript& tr = res.transcript;
  tr.round = ap.round;
  tr.mode = ap.mode;
  for (const ClientUpload& u : uploads) tr.upload_logical_bits += upload_logical_bits(u);
  if (uploads.empty()) return res;

  try {
    AggregateResult agg = aggregate_round(net, keys, uploads, ap);
    tr.participants = agg.accepted;
    tr.rejected = agg.rejected;
    if (agg.verdict) tr.mac_f = agg.verdict->f.value();

    ServerNoise noise = sample_and_share_noise(net, keys, np, ap.round, adv);
    res.ledger.eta = noise.eta;
    if (mal) {
      std::array<KsReport, 3> reps;
      try {
        verify_all_noise(net, keys, noise, np, ap.round, adv, &reps);
      } catch (const NoiseKsAbort&) {
        tr.ks_reports.assign(reps.begin(), reps.end());
        throw;
      }
      tr.ks_reports.assign(reps.begin(), reps.end());
    }
    SharedVector delta = sec_noise_add(agg.sum, noise);
    if (adv && adv->kind == AdversaryKind::kAdditiveAggregationError && d > 0) {
      delta[adv->corrupt].a[0] += adv->offset;
    }

    net.begin_phase("delta/open");
    auto opened = open_all(net, delta, Mode::kSemiHonest, tag::kDeltaOpen, ap.round);
    res.ledger.opened = opened[0];
    const double denom = static_cast<double>(agg.accepted.size());
    std::array<std::vector<double>, 3> w;
    for (int i = 0; i < 3; ++i) {
      w[i] = res.w;
      for (std::size_t j = 0; j < d; ++j) w[i][j] += codec.decode(opened[i][j]) / denom;
    }
    if (mal) tr.model_hash = to_hex(model_hash_check(net, w, ap.round, &opened));
    res.w = w[0];
  } catch (const ProtocolAbort& e) {
    tr.abort_reason = e.reason();
    tr.abort_message = e.what();
    res.w.assign(w_prev.begin(), w_prev.end());
  }
  net.set_send_hook(nullptr);
  tr.capture(net);
  return res;
}

/// One training round: sample, run the client pipeline, then secure_round.
inline RoundResult run_round(const TrainState& st, const TrainConfig& cfg, Network& net) {
  const std::size_t d = st.task->dim();
  net.reset();
  net.set_num_clients(static_cast<std::uint32_t>(st.task->clients()));

  const auto sample = sample_clients(st.public_seed, st.round, st.task->clients(), cfg.q);
  std::vector<ClientUpload> uploads;
  FpVector update_sum(d);
  for (std::uint32_t c : sample) {
    SparseVector<Fp> x = client_update(st, cfg, c);
    for (std::size_t j = 0; j < x.k(); ++j) update_sum[x.indices[j]] += x.values[j];
    ChaChaRng rng(st.client_seed, "encode/r" + std::to_string(st.round) + "/c" + std::to_string(c));
    uploads.push_back(client_encode(x, cfg.effective_k(), cfg.mode, rng, c));
  }
  AggregationParams ap{d, cfg.effective_k(), cfg.mode, st.round,
                       cfg.adversary.active() ? &cfg.adversary : nullptr};
  RoundResult res = secure_round(net, st.keys, uploads, ap, NoiseParams{cfg.sigma, cfg.clip, d}, st.w);
  res.ledger.update_sum = std::move(update_sum);
  return res;
}

struct RoundMetrics {
  std::uint32_t round = 0;
  std::size_t participants = 0;
  double loss = 0.0;
  double distance = 0.0;  // ||w - w*||
  std::optional<double> epsilon;
  std::uint64_t upload_bits = 0;
  std::uint64_t inter_server_bytes = 0;
  double estimated_seconds = 0.0;
  AbortReason abort_reason = AbortReason::kNone;
};

inline nlohmann::json to_json(const RoundMetrics& m) {
  return {{"round", m.round},
          {"participants", m.participants},
          {"loss", m.loss},
          {"distance_to_optimum", m.distance},
          {"epsilon", m.epsilon ? nlohmann::json(*m.epsilon) : nlohmann::json(nullptr)},
          {"upload_bits", m.upload_bits},
          {"bytes", m.inter_server_bytes},
          {"estimated_seconds", m.estimated_seconds},
          {"abort_reason", std::string(to_string(m.abort_reason))}};
}

struct TrainingRun {
  std::vector<double> w;
  std::vector<RoundMetrics> metrics;
  std::vector<RoundTranscript> transcripts;
  std::optional<std::uint32_t> aborted_at;
};

/// Epsilon spent after `rounds` rounds; empty when sigma = 0 (no privacy).
inline std::optional<double> spent_epsilon(const TrainConfig& cfg, std::uint32_t rounds) {
  if (cfg.sigma <= 0 || rounds == 0) return std::nullopt;
  if (cfg.q >= 1) {
    // Without subsampling the mechanism is the plain Gaussian one with RDP
    // alpha / (2 sigma^2) per round.
    double best = std::numeric_limits<double>::infinity();
    for (int a = kAlphaMin; a <= kAlphaMax; ++a)
      best = std::min(best, compose_and_convert(a / (2 * cfg.sigma * cfg.sigma), rounds, a, cfg.delta));
    return best;
  }
  return optimize_epsilon(cfg.q, cfg.sigma, cfg.delta, rounds).epsilon;
}

inline TrainingRun run_training(const SyntheticTask& task, const TrainConfig& cfg) {
  cfg.validate();
  TrainState st = TrainState::init(task, cfg.seed);
  Network net;
  TrainingRun run;
  run.w = st.w;
  for (std::uint32_t t = 0; t < cfg.rounds; ++t) {
    st.round = t;
    RoundResult r = run_round(st, cfg, net);
    RoundMetrics m;
    m.round = t;
    m.participants = r.transcript.participants.size();
    m.upload_bits = r.transcript.upload_logical_bits;
    m.inter_server_bytes = r.transcript.inter_server().wire_bytes;
    m.estimated_seconds = r.transcript.estimated_seconds();
    m.abort_reason = r.transcript.abort_reason;
    st.w = r.w;
    m.loss = task.loss(to_eigen(st.w));
    m.distance = (to_eigen(st.w) - task.w_star()).norm();
    m.epsilon = spent_epsilon(cfg, t + 1);
    run.metrics.push_back(m);
    const bool aborted = r.transcript.aborted();
    run.transcripts.push_back(std::move(r.transcript));
    if (aborted) {
      run.aborted_at = t;
      break;
    }
  }
  run.w = st.w;
  return run;
}

/// Plaintext FedAvg with the same sampling, local updates, top-k and
/// clipping, and no quantization, sharing or noise.
inline std::vector<double> plaintext_fedavg(const SyntheticTask& task, const TrainConfig& cfg) {
  TrainState st = TrainState::init(task, cfg.seed);
  for (std::uint32_t t = 0; t < cfg.rounds; ++t) {
    st.round = t;
    const auto sample = sample_clients(st.public_seed, t, task.clients(), cfg.q);
    if (sample.empty()) continue;
    std::vector<double> sum(task.dim(), 0.0);
    for (std::uint32_t c : sample) {
      ChaChaRng rng(st.client_seed, "sgd/r" + std::to_string(t) + "/c" + std::to_string(c));
      auto delta = local_update(task, c, st.w, cfg.local_epochs, cfg.eta_l, cfg.batch_size, rng);
      auto x = clip(topk_sparsify(delta, cfg.effective_k()), cfg.clip);
      for (std::size_t j = 0; j < x.k(); ++j) sum[x.indices[j]] += x.values[j];
    }
    for (std::size_t j = 0; j < sum.size(); ++j) st.w[j] += sum[j] / static_cast<double>(sample.size());
  }
  return st.w;
}

}  // namespace sparsagg

#endif  // SPARSAGG_FLTRAIN_HPP_
