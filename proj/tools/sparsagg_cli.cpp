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

// Command-line driver: experiments, accounting and replay of upload bundles.
// Every report is a deterministic function of the config and the seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sparsagg/sparsagg.hpp"

namespace {

using nlohmann::json;
using namespace sparsagg;

constexpr const char* kVersion = "sparsagg 1.0.0";

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

json load_config(const Common& c) {
  json j = json::object();
  if (!c.config.empty()) {
    std::ifstream f(c.config);
    if (!f) throw std::invalid_argument("cannot open config " + c.config);
    j = json::parse(f);
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  }
  if (c.seed) j["seed"] = *c.seed;
  return j;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open output " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void report(const json& j) { stream() << j.dump(2) << "\n"; }
  void line(const json& j) { stream() << j.dump() << "\n"; }

 private:
  std::ofstream file_;
};

json provenance(std::uint64_t seed) { return {{"seed", seed}, {"version", kVersion}}; }

AdversaryBehavior adversary_from(const json& j) {
  AdversaryBehavior a;
  if (!j.contains("adversary")) return a;
  const json& x = j["adversary"];
  a.kind = parse_adversary_kind(x.value("kind", std::string("none")));
  const int corrupt = x.value("corrupt_party", 0);
  if (corrupt < 0 || corrupt > 2) throw std::invalid_argument("corrupt_party must be 0, 1 or 2");
  a.corrupt = PartyId(corrupt);
  a.factor = x.value("factor", a.factor);
  return a;
}

json adversary_json(const AdversaryBehavior& a) {
  return {{"kind", std::string(to_string(a.kind))}, {"corrupt_party", a.corrupt.value()}, {"factor", a.factor}};
}

AggregateConfig aggregate_config(const json& j) {
  AggregateConfig c;
  c.n = j.value("n", c.n);
  c.d = j.value("d", c.d);
  c.density = j.value("lambda", c.density);
  c.clip = j.value("C", c.clip);
  c.sigma = j.value("sigma", c.sigma);
  c.mode = parse_mode(j.value("mode", std::string("semi_honest")));
  c.adversary = adversary_from(j);
  c.field_values = j.value("field_values", c.field_values);
  c.seed = j.value("seed", c.seed);
  if (c.n == 0 || c.d == 0) throw std::invalid_argument("aggregate: n and d must be positive");
  if (!(c.density > 0 && c.density <= 1)) throw std::invalid_argument("aggregate: lambda must be in (0, 1]");
  NoiseParams{c.sigma, c.clip, c.d}.validate(c.n);
  return c;
}

json aggregate_config_json(const AggregateConfig& c) {
  return {{"n", c.n},         {"d", c.d},
          {"lambda", c.density}, {"C", c.clip},
          {"sigma", c.sigma}, {"mode", std::string(to_string(c.mode))},
          {"adversary", adversary_json(c.adversary)}, {"field_values", c.field_values},
          {"seed", c.seed}};
}

json cost_table(Mode mode, std::size_t d, std::size_t k) {
  return {{"sparvecagg", expected_upload_bits(mode, k)},
          {"dense_rss", baseline_client_cost(BaselineKind::kDenseRss, d, k)},
          {"uncompressed_permutation", baseline_client_cost(BaselineKind::kUncompressedPerm, d, k)},
          {"index_value_strawman", baseline_client_cost(BaselineKind::kIndexValueStrawman, d, k)}};
}

int cmd_aggregate(const Common& common, const std::string& bundles_in, const std::string& bundles_out) {
  const json j = load_config(common);
  const AggregateConfig cfg = aggregate_config(j);
  Output out(common.out);

  if (!bundles_in.empty()) {
    // Replay: the servers run on uploads read from disk.
    std::vector<ClientUpload> ups = read_bundle_dir(bundles_in);
    if (ups.empty()) throw std::invalid_argument("no bundles under " + bundles_in);
    const std::size_t d = ups.front().dim, k = ups.front().k;
    const Mode mode = ups.front().mode;
    for (const auto& u : ups)
      if (u.dim != d || u.k != k || u.mode != mode) throw std::invalid_argument("bundles disagree on d, k or mode");
    const auto keys = setup_correlated_randomness(Seed::from_u64(cfg.seed).derive("servers"));
    Network net;
    AggregationParams ap{d, k, mode, 0, cfg.adversary.active() ? &cfg.adversary : nullptr};
    RoundResult r = secure_round(net, keys, ups, ap, NoiseParams{cfg.sigma, cfg.clip, d}, std::vector<double>(d, 0.0));
    json sum = json::array();
    if (!r.transcript.aborted())
      for (std::size_t i = 0; i < d; ++i)
        if (r.ledger.opened[i] != Fp()) sum.push_back({i, r.ledger.opened[i].centered()});
    out.report({{"command", "aggregate"},
                {"source", "bundles"},
                {"config", {{"d", d}, {"k", k}, {"mode", std::string(to_string(mode))}, {"clients", ups.size()},
                            {"sigma", cfg.sigma}, {"adversary", adversary_json(cfg.adversary)}}},
                {"results",
                 {{"aborted", r.transcript.aborted()},
                  {"abort_reason", std::string(to_string(r.transcript.abort_reason))},
                  {"aggregate_nonzeros", sum},
                  {"transcript", to_json(r.transcript)}}},
                {"provenance", provenance(cfg.seed)}});
    return 0;
  }

  if (!bundles_out.empty()) {
    const AggregateInputs in = make_aggregate_inputs(cfg);
    for (const ClientUpload& u : in.uploads)
      write_bundle(std::filesystem::path(bundles_out) / ("client" + std::to_string(u.client)), u);
  }

  const AggregateOutcome o = run_aggregate(cfg);
  std::uint64_t max_bits = 0, min_bits = UINT64_MAX;
  for (auto b : o.upload_bits) max_bits = std::max(max_bits, b), min_bits = std::min(min_bits, b);
  out.report({{"command", "aggregate"},
              {"config", aggregate_config_json(cfg)},
              {"results",
               {{"k", o.k},
                {"correct", o.correct},
                {"aborted", o.transcript.aborted()},
                {"abort_reason", std::string(to_string(o.transcript.abort_reason))},
                {"upload_bits_per_client", {{"min", min_bits}, {"max", max_bits}}},
                {"expected_upload_bits", expected_upload_bits(cfg.mode, o.k)},
                {"client_cost_table", cost_table(cfg.mode, cfg.d, o.k)},
                {"inter_server_bytes", o.transcript.inter_server().wire_bytes},
                {"estimated_seconds", o.transcript.estimated_seconds()},
                {"transcript", to_json(o.transcript)}}},
              {"provenance", provenance(cfg.seed)}});
  return o.transcript.aborted() || o.correct ? 0 : 1;
}

std::vector<double> number_list(const json& j, const char* key, std::vector<double> dflt) {
  if (!j.contains(key)) return dflt;
  return j[key].get<std::vector<double>>();
}

int cmd_dp_sum(const Common& common) {
  const json j = load_config(common);
  DpSumConfig base;
  base.n = j.value("n", base.n);
  base.d = j.value("d", base.d);
  base.delta = j.value("delta", base.delta);
  base.clip = j.value("C", base.clip);
  base.mode = parse_mode(j.value("mode", std::string("semi_honest")));
  base.seed = j.value("seed", base.seed);
  const auto eps = number_list(j, "epsilons", {1, 5, 10});
  const auto lambdas = number_list(j, "lambdas", {0.001, 0.005, 0.01});
  const std::uint32_t reps = j.value("repetitions", 20u);
  if (base.n == 0 || base.d == 0 || reps == 0) throw std::invalid_argument("dp-sum: n, d and repetitions must be positive");

  json rows = json::array();
  for (double e : eps) {
    for (double l : lambdas) {
      DpSumConfig c = base;
      c.epsilon = e;
      c.density = l;
      double s = 0, s2 = 0;
      for (std::uint32_t r = 0; r < reps; ++r) {
        const double m = dp_sum_mse(c, r);
        s += m;
        s2 += m * m;
      }
      const double mean = s / reps;
      const double sd = reps > 1 ? std::sqrt(std::max(0.0, (s2 - reps * mean * mean) / (reps - 1))) : 0.0;
      rows.push_back({{"epsilon", e}, {"lambda", l}, {"sigma", dp_sum_sigma(c)}, {"mse", mean}, {"mse_std", sd}});
    }
  }
  Output out(common.out);
  out.report({{"command", "dp-sum"},
              {"config",
               {{"n", base.n}, {"d", base.d}, {"delta", base.delta}, {"C", base.clip},
                {"mode", std::string(to_string(base.mode))}, {"epsilons", eps}, {"lambdas", lambdas},
                {"repetitions", reps}, {"seed", base.seed}}},
              {"results", rows},
              {"provenance", provenance(base.seed)}});
  return 0;
}

int cmd_train(const Common& common) {
  const TrainConfig cfg = train_config_from_json(load_config(common));
  cfg.validate();
  const SyntheticTask task = SyntheticTask::generate(cfg.task, cfg.seed);
  const TrainingRun run = run_training(task, cfg);
  Output out(common.out);
  out.line({{"config", to_json(cfg)}, {"provenance", provenance(cfg.seed)}, {"optimum_loss", task.optimum_loss()}});
  for (std::size_t i = 0; i < run.metrics.size(); ++i) {
    json m = to_json(run.metrics[i]);
    if (run.transcripts[i].aborted()) m["abort_message"] = run.transcripts[i].abort_message;
    out.line(m);
  }
  if (run.aborted_at) std::cerr << "training aborted in round " << *run.aborted_at << "\n";
  return 0;
}

int cmd_accountant(const Common& common, double q, double sigma, double delta, long rounds,
                   std::optional<double> epsilon) {
  const PrivacyEstimate e = optimize_epsilon(q, sigma, delta, rounds);
  json req = nullptr;
  if (epsilon) req = std::sqrt(sigma_for_budget(*epsilon, delta, q, rounds));
  Output out(common.out);
  out.report({{"epsilon", e.epsilon},
              {"alpha_star", e.alpha_star},
              {"tau", e.tau},
              {"sigma_required", req},
              {"config", {{"q", q}, {"sigma", sigma}, {"delta", delta}, {"rounds", rounds},
                          {"target_epsilon", epsilon ? json(*epsilon) : json(nullptr)}}}});
  return 0;
}

int cmd_noise_verify(const Common& common) {
  const json j = load_config(common);
  NoiseVerifyConfig c;
  c.d = j.value("d", c.d);
  c.sigma = j.value("sigma", c.sigma);
  c.clip = j.value("C", c.clip);
  c.alpha = j.value("alpha", c.alpha);
  c.trials = j.value("trials", c.trials);
  c.adversary = adversary_from(j);
  c.seed = j.value("seed", c.seed);
  if (c.d == 0 || !(c.sigma > 0)) throw std::invalid_argument("noise-verify: need d > 0 and sigma > 0");
  const NoiseVerifyOutcome o = run_noise_verify(c);
  Output out(common.out);
  out.report({{"command", "noise-verify"},
              {"config",
               {{"d", c.d}, {"sigma", c.sigma}, {"C", c.clip}, {"alpha", c.alpha}, {"trials", c.trials},
                {"adversary", adversary_json(c.adversary)}, {"seed", c.seed}}},
              {"results",
               {{"trials", o.trials},
                {"passed", o.passed},
                {"pass_rate", o.pass_rate()},
                {"d_crit", o.d_crit},
                {"mean_d_ks", o.mean_d_ks},
                {"max_d_ks", o.max_d_ks}}},
              {"provenance", provenance(c.seed)}});
  return 0;
}

int cmd_bench(const Common& common) {
  const json j = load_config(common);
  AggregateConfig base = aggregate_config(j);
  std::vector<std::size_t> ns{10, 20, 50, 100};
  if (j.contains("ns")) ns = j["ns"].get<std::vector<std::size_t>>();
  json rows = json::array();
  for (std::size_t n : ns) {
    json row{{"n", n}};
    std::uint64_t bytes[2] = {0, 0};
    int idx = 0;
    for (Mode m : {Mode::kSemiHonest, Mode::kMalicious}) {
      AggregateConfig c = base;
      c.n = n;
      c.mode = m;
      c.adversary = {};
      const AggregateOutcome o = run_aggregate(c);
      bytes[idx++] = o.transcript.inter_server().wire_bytes;
      row[std::string(to_string(m))] = {{"correct", o.correct},
                                        {"inter_server_bytes", o.transcript.inter_server().wire_bytes},
                                        {"upload_bits_per_client", expected_upload_bits(m, o.k)},
                                        {"estimated_seconds", o.transcript.estimated_seconds()}};
    }
    row["malicious_over_semi_honest"] = bytes[0] ? double(bytes[1]) / double(bytes[0]) : 0.0;
    rows.push_back(std::move(row));
  }
  Output out(common.out);
  out.report({{"command", "bench"},
              {"config", aggregate_config_json(base)},
              {"network_model", {{"latency_ms", NetModel{}.latency_ms}, {"bandwidth_mbps", NetModel{}.bandwidth_mbps}}},
              {"results", rows},
              {"provenance", provenance(base.seed)}});
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON config file");
  sub->add_option("--seed", c.seed, "seed (overrides the config)");
  sub->add_option("--out", c.out, "write the report here instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse secure aggregation: experiments and tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  std::string bundles_in, bundles_out;
  auto* agg = app.add_subcommand("aggregate", "aggregate random sparse vectors and check the result");
  add_common(agg, common);
  agg->add_option("--bundles", bundles_in, "replay uploads from this directory of bundles");
  agg->add_option("--write-bundles", bundles_out, "also write the generated uploads here");

  auto* dp = app.add_subcommand("dp-sum", "MSE of the differentially private sparse sum");
  add_common(dp, common);

  auto* train = app.add_subcommand("train", "federated training; JSON lines per round");
  add_common(train, common);

  double q = 0.1, sigma = 1.0, delta = 1e-5;
  long rounds = 1;
  std::optional<double> epsilon;
  auto* acc = app.add_subcommand("accountant", "privacy spent and noise required");
  add_common(acc, common);
  acc->add_option("--q", q, "sampling rate")->required();
  acc->add_option("--sigma", sigma, "noise multiplier")->required();
  acc->add_option("--delta", delta, "target delta")->required();
  acc->add_option("--rounds", rounds, "number of rounds")->required();
  acc->add_option("--epsilon", epsilon, "target epsilon for sigma_required");

  auto* nv = app.add_subcommand("noise-verify", "KS verification pass rate of the noise check");
  add_common(nv, common);

  auto* bench = app.add_subcommand("bench", "communication of both modes across client counts");
  add_common(bench, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (agg->parsed()) return cmd_aggregate(common, bundles_in, bundles_out);
    if (dp->parsed()) return cmd_dp_sum(common);
    if (train->parsed()) return cmd_train(common);
    if (acc->parsed()) return cmd_accountant(common, q, sigma, delta, rounds, epsilon);
    if (nv->parsed()) return cmd_noise_verify(common);
    if (bench->parsed()) return cmd_bench(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
