/* Copyright 2026 The growtrim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "growtrim/benchmark.h"

#include <cstdio>
#include <sstream>

#include "growtrim/candidates.h"
#include "growtrim/errors.h"
#include "growtrim/ranking.h"
#include "growtrim/rng.h"

namespace growtrim {

namespace {

constexpr std::uint64_t kSplitSalt = 1;
constexpr std::uint64_t kBaseSalt = 2;
constexpr std::uint64_t kInitSalt = 3;
constexpr std::uint64_t kTrainSalt = 4;

double lookup(const std::vector<std::pair<int, double>>& values, int k) {
  for (const auto& [kk, v] : values) {
    if (kk == k) return v;
  }
  throw InvalidArgument("no value recorded for k = " + std::to_string(k));
}

}  // namespace

double ControllerScore::ap_at(int k) const { return lookup(ap, k); }
double ControllerScore::ndcg_at(int k) const { return lookup(ndcg, k); }

std::string ControllerScore::label() const {
  return std::string(controller_kind_name(kind)) + (trained ? "" : " (untrained)");
}

const ControllerScore& BenchmarkResult::row(ControllerKind kind, bool trained) const {
  for (const auto& r : rows) {
    if (r.kind == kind && r.trained == trained) return r;
  }
  throw InvalidArgument("benchmark row not found");
}

NetworkArch benchmark_base(std::uint64_t seed, int cells,
                           const TemplateOptions& options) {
  if (cells < 1) throw InvalidArgument("cells must be >= 1");
  NetworkArch arch = make_initial_arch(options);
  Rng rng(mix_seed(seed, kBaseSalt));
  for (int c = 1; c < cells; ++c) {
    const std::vector<Candidate> grown = grow_candidates(arch);
    arch = grown[static_cast<std::size_t>(rng.below(grown.size()))].arch;
  }
  return arch;
}

BenchmarkResult benchmark_controllers(const BenchmarkConfig& config) {
  if (config.pool_size < 1 || config.train_size < 1) {
    throw InvalidArgument("pool and training sizes must be >= 1");
  }
  for (int k : config.ks) {
    if (k > config.pool_size) throw KTooLarge("k exceeds the evaluation pool");
  }
  const NetworkArch base =
      config.base ? *config.base : benchmark_base(config.seed, config.base_cells);
  std::vector<Candidate> candidates = generate_candidates(base);
  const std::size_t needed =
      static_cast<std::size_t>(config.pool_size + config.train_size);
  if (candidates.size() < needed) {
    throw InvalidArgument("base offers " + std::to_string(candidates.size()) +
                          " candidates, " + std::to_string(needed) + " needed");
  }
  Rng rng(mix_seed(config.seed, kSplitSalt));
  rng.shuffle(candidates);

  const MemoryEstimate base_mem = estimate_memory(base, config.memory);
  const double base_acc = synthetic_accuracy(base, config.seed, config.synthetic);
  auto measure = [&](const NetworkArch& arch) {
    const MemoryEstimate mem = estimate_memory(arch, config.memory);
    return efficiency({synthetic_accuracy(arch, config.seed, config.synthetic),
                       static_cast<double>(mem.peak_intermediate_bytes),
                       static_cast<double>(mem.param_bytes), base_acc,
                       static_cast<double>(base_mem.peak_intermediate_bytes),
                       static_cast<double>(base_mem.param_bytes), config.lambda},
                      config.metric_mode);
  };

  std::vector<TrainingExample> training;
  for (int i = 0; i < config.train_size; ++i) {
    const auto& arch = candidates[static_cast<std::size_t>(i)].arch;
    training.push_back({arch, measure(arch)});
  }
  std::vector<NetworkArch> pool;
  std::vector<double> measured;
  std::vector<std::uint64_t> hashes;
  for (std::size_t i = static_cast<std::size_t>(config.train_size); i < needed; ++i) {
    pool.push_back(candidates[i].arch);
    measured.push_back(measure(pool.back()));
    hashes.push_back(canonical_hash(pool.back()));
  }

  BenchmarkResult result;
  result.candidate_count = static_cast<int>(candidates.size());
  result.pool_size = config.pool_size;
  result.train_size = config.train_size;
  auto score_row = [&](const ControllerParams& params, bool trained, double loss) {
    const RankingPair pair =
        make_ranking_pair(predict_scores(params, pool, config.rank_set_size), measured, hashes);
    ControllerScore row;
    row.kind = params.kind;
    row.trained = trained;
    row.final_loss = loss;
    for (int k : config.ks) {
      row.ap.emplace_back(k, ap_at_k(pair, k));
      row.ndcg.emplace_back(k, ndcg_at_k(pair, k));
    }
    result.rows.push_back(std::move(row));
  };

  for (ControllerKind kind : {ControllerKind::kScc, ControllerKind::kSingleRnn,
                              ControllerKind::kDoubleRnn}) {
    const auto salt = static_cast<std::uint64_t>(kind);
    const ControllerParams init = ControllerParams::random(
        kind, config.d_emb, config.d_h, mix_seed(mix_seed(config.seed, kInitSalt), salt),
        config.init_range);
    score_row(init, false, 0.0);
    TrainConfig tc = config.train;
    tc.seed = mix_seed(mix_seed(config.seed, kTrainSalt), salt);
    const TrainResult trained = train(init, training, tc);
    score_row(trained.params, true,
              trained.loss_trace.empty() ? 0.0 : trained.loss_trace.back());
  }
  return result;
}

nlohmann::json benchmark_to_json(const BenchmarkResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    nlohmann::json row = {{"controller", std::string(controller_kind_name(r.kind))},
                          {"trained", r.trained}};
    for (const auto& [k, v] : r.ap) row["AP@" + std::to_string(k)] = v;
    for (const auto& [k, v] : r.ndcg) row["NDCG@" + std::to_string(k)] = v;
    if (r.trained) row["final_loss"] = r.final_loss;
    rows.push_back(std::move(row));
  }
  return {{"candidate_count", result.candidate_count},
          {"pool_size", result.pool_size},
          {"train_size", result.train_size},
          {"rows", std::move(rows)}};
}

std::string benchmark_table(const BenchmarkResult& result) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-24s", "controller");
  os << buf;
  if (!result.rows.empty()) {
    for (const auto& [k, v] : result.rows.front().ap) {
      std::snprintf(buf, sizeof(buf), "%10s", ("AP@" + std::to_string(k)).c_str());
      os << buf;
    }
    for (const auto& [k, v] : result.rows.front().ndcg) {
      std::snprintf(buf, sizeof(buf), "%10s", ("NDCG@" + std::to_string(k)).c_str());
      os << buf;
    }
  }
  os << "\n";
  for (const auto& r : result.rows) {
    std::snprintf(buf, sizeof(buf), "%-24s", r.label().c_str());
    os << buf;
    for (const auto& [k, v] : r.ap) {
      std::snprintf(buf, sizeof(buf), "%10.3f", v);
      os << buf;
    }
    for (const auto& [k, v] : r.ndcg) {
      std::snprintf(buf, sizeof(buf), "%10.3f", v);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace growtrim
