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

// Round-based search: generate candidates from the base network, pick the
// top k (seeded sampling in round 1, controller ranking afterwards), evaluate
// them, score them against the base, promote the best one to the next base
// and fine-tune the controller on everything measured so far.
//
// Output directory:
//   rounds/round_NNN.json     one record per round
//   controller/ckpt_NNN.json  controller after round NNN
//   state.json                resumable engine state
//   best_arch.json            current base network
//   search_log.txt            one line per round

#ifndef GROWTRIM_SEARCH_H_
#define GROWTRIM_SEARCH_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "growtrim/arch.h"
#include "growtrim/candidates.h"
#include "growtrim/controller.h"
#include "growtrim/evaluator.h"
#include "growtrim/memory.h"
#include "growtrim/metric.h"
#include "json.hpp"

namespace growtrim {

struct ControllerConfig {
  int d_emb = 100;
  int d_h = 100;
  double init_range = 0.08;
  TrainConfig train;  // the seed is derived per round
  bool reset_each_round = false;
};

struct SearchConfig {
  double lambda = 0.5;
  int k = 100;
  int max_rounds = 10;
  std::uint64_t seed = 0;
  // Rounds in a row whose winner has y <= 0 before stopping; 0 disables.
  int stop_patience = 3;
  int budget = 3;  // epochs passed to the evaluator
  MetricMode metric_mode = MetricMode::kGoalConsistent;
  MemoryConfig memory;
  std::string evaluator = "synthetic";  // synthetic | external
  SyntheticConfig synthetic;
  TrainerSpec trainer;
  ControllerConfig controller;
  TrimOptions trim;
  TemplateOptions init_template;
  std::optional<NetworkArch> init_arch;

  // Throws InvalidArgument.
  void validate() const;
};

nlohmann::json search_config_to_json(const SearchConfig& config);
// Missing keys keep their defaults; unknown keys throw FormatError.
SearchConfig search_config_from_json(const nlohmann::json& j);
SearchConfig load_search_config(const std::filesystem::path& path);

struct CandidateRecord {
  NetworkArch arch;
  std::uint64_t hash = 0;
  std::string action;  // base | grow | trim
  std::string detail;
  EvalStatus status = EvalStatus::kOk;
  std::string message;
  double accuracy = 0.0;
  std::int64_t param_bytes = 0;
  std::int64_t peak_bytes = 0;
  double y = 0.0;
  std::optional<double> predicted;

  std::int64_t total_bytes() const { return param_bytes + peak_bytes; }
  bool ok() const { return status == EvalStatus::kOk; }
};

nlohmann::json candidate_record_to_json(const CandidateRecord& record);

struct RoundRecord {
  int round = 0;
  CandidateRecord base;
  int candidate_count = 0;
  std::vector<CandidateRecord> evaluated;
  CandidateRecord winner;
  int failures = 0;
  std::vector<double> scc_loss_trace;
  std::size_t history_size = 0;
};

nlohmann::json round_record_to_json(const RoundRecord& record);

struct WinnerSummary {
  int round = 0;
  std::uint64_t hash = 0;
  double y = 0.0;
  double accuracy = 0.0;
  std::int64_t total_bytes = 0;
};

struct EngineState {
  int rounds_completed = 0;
  CandidateRecord base;
  ControllerParams controller;
  ControllerParams velocity;
  std::vector<TrainingExample> history;
  int stale_rounds = 0;
  std::vector<WinnerSummary> winners;
};

inline constexpr int kStateVersion = 1;

std::unique_ptr<Evaluator> make_evaluator(const SearchConfig& config);

class SearchEngine {
 public:
  // Evaluates the initial base network.
  SearchEngine(SearchConfig config, std::shared_ptr<Evaluator> evaluator);

  // Throws CorruptCheckpoint.
  static SearchEngine restore(SearchConfig config,
                              std::shared_ptr<Evaluator> evaluator,
                              const std::filesystem::path& state_file);

  // Throws NoCandidates or EvaluatorFailure.
  RoundRecord run_round();

  bool finished() const;
  const EngineState& state() const { return state_; }
  const SearchConfig& config() const { return config_; }

  nlohmann::json state_to_json() const;
  void checkpoint(const std::filesystem::path& state_file) const;

 private:
  SearchEngine(SearchConfig config, std::shared_ptr<Evaluator> evaluator,
               EngineState state);

  CandidateRecord score(const NetworkArch& arch, const EvalResult& result) const;

  SearchConfig config_;
  std::shared_ptr<Evaluator> evaluator_;
  EngineState state_;
};

struct SearchResult {
  NetworkArch best;
  std::vector<RoundRecord> rounds;  // rounds run by this call
  std::vector<WinnerSummary> winners;  // every round, including resumed ones
  bool stopped_early = false;
};

// Runs rounds until the engine is finished. With a non-empty `out_dir` the
// layout above is written after every round; `resume` continues from
// out_dir/state.json when it exists.
SearchResult run_search(const SearchConfig& config,
                        const std::filesystem::path& out_dir = {},
                        std::shared_ptr<Evaluator> evaluator = nullptr,
                        bool resume = false);

}  // namespace growtrim

#endif  // GROWTRIM_SEARCH_H_
