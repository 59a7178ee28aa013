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

// Controller comparison harness: train the SCC and the two absolute-score
// baselines on measured candidates, then compare how well each recovers the
// true top-k of a disjoint candidate pool.

#ifndef GROWTRIM_BENCHMARK_H_
#define GROWTRIM_BENCHMARK_H_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "growtrim/arch.h"
#include "growtrim/controller.h"
#include "growtrim/evaluator.h"
#include "growtrim/memory.h"
#include "growtrim/metric.h"
#include "json.hpp"

namespace growtrim {

struct BenchmarkConfig {
  std::uint64_t seed = 0;
  int pool_size = 500;
  int train_size = 400;
  int d_emb = 100;
  int d_h = 100;
  double init_range = 0.08;
  TrainConfig train;
  // Ranker reset interval at inference; 0 ranks the pool as one sequence.
  int rank_set_size = 0;
  SyntheticConfig synthetic;
  double lambda = 0.5;
  MetricMode metric_mode = MetricMode::kGoalConsistent;
  MemoryConfig memory;
  std::vector<int> ks = {50, 100};
  // Cells per block of the generated base when `base` is not set.
  int base_cells = 3;
  std::optional<NetworkArch> base;
};

struct ControllerScore {
  ControllerKind kind = ControllerKind::kScc;
  bool trained = false;
  std::vector<std::pair<int, double>> ap;    // (k, AP@k)
  std::vector<std::pair<int, double>> ndcg;  // (k, NDCG@k)
  double final_loss = 0.0;                   // last epoch, trained rows only

  double ap_at(int k) const;
  double ndcg_at(int k) const;
  std::string label() const;
};

struct BenchmarkResult {
  int candidate_count = 0;
  int pool_size = 0;
  int train_size = 0;
  std::vector<ControllerScore> rows;

  const ControllerScore& row(ControllerKind kind, bool trained) const;
};

// Initial network grown with seeded random cells to `cells` per block.
NetworkArch benchmark_base(std::uint64_t seed, int cells,
                           const TemplateOptions& options = {});

// Throws InvalidArgument when the base cannot supply enough distinct
// candidates for disjoint training and evaluation sets.
BenchmarkResult benchmark_controllers(const BenchmarkConfig& config);

nlohmann::json benchmark_to_json(const BenchmarkResult& result);
std::string benchmark_table(const BenchmarkResult& result);

}  // namespace growtrim

#endif  // GROWTRIM_BENCHMARK_H_
