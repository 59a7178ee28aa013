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

#include "growtrim/cli.h"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "growtrim/arch_json.h"
#include "growtrim/benchmark.h"
#include "growtrim/candidates.h"
#include "growtrim/controller.h"
#include "growtrim/errors.h"
#include "growtrim/memory.h"
#include "growtrim/ranking.h"
#include "growtrim/search.h"

namespace growtrim {

using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config;
  std::string format = "json";
  std::uint64_t seed = 0;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Search configuration file (JSON)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--format", f.format, "Output format")
      ->check(CLI::IsMember({"json", "text"}));
  cmd->add_option("--seed", f.seed, "Random seed");
}

SearchConfig base_config(const CommonFlags& f) {
  return f.config.empty() ? SearchConfig{} : load_search_config(f.config);
}

NetworkArch base_arch(const std::string& arch_path, const SearchConfig& config) {
  if (!arch_path.empty()) return load_arch(arch_path);
  if (config.init_arch) return *config.init_arch;
  return make_initial_arch(config.init_template);
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    write_file(out_path, text);
  }
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

// ---------------------------------------------------------------------------

struct GenFlags {
  CommonFlags common;
  std::string arch;
  std::string mode = "both";
  bool raw = false;
  bool keep_param_growth = false;
};

void run_gen(const GenFlags& f, std::ostream& out) {
  const SearchConfig config = base_config(f.common);
  const NetworkArch base = base_arch(f.arch, config);
  const auto violations = validate(base);
  if (!violations.empty()) {
    throw InvalidArchitecture("base network is invalid: " + violations.front().message);
  }
  TrimOptions trim = config.trim;
  if (f.keep_param_growth) trim.require_param_reduction = false;

  const SearchSpaceSizes sizes = search_space_sizes(base);
  std::int64_t raw_count = 0;
  if (f.mode != "trim") raw_count += static_cast<std::int64_t>(enumerate_grow_actions(base).size());
  if (f.mode != "grow") raw_count += static_cast<std::int64_t>(enumerate_trim_actions(base).size());

  std::vector<Candidate> candidates;
  if (f.mode == "grow") {
    candidates = grow_candidates(base);
    sort_canonical(candidates);
  } else if (f.mode == "trim") {
    candidates = trim_candidates(base, trim);
    sort_canonical(candidates);
  } else {
    candidates = generate_candidates(base, trim);
  }

  if (f.common.format == "text") {
    std::ostringstream os;
    os << "base " << hash_hex(canonical_hash(base)) << "\n"
       << "grow_size " << sizes.grow_size << "\n"
       << "trim_size " << sizes.trim_size << "\n"
       << "raw_count " << raw_count << "\n"
       << "count " << candidates.size() << "\n";
    if (!f.raw) {
      for (const auto& c : candidates) {
        os << hash_hex(canonical_hash(c.arch)) << "  "
           << provenance_detail(c.provenance) << "\n";
      }
    }
    emit(os.str(), f.common.out, out);
    return;
  }
  json j = {{"base_hash", hash_hex(canonical_hash(base))},
            {"mode", f.mode},
            {"sizes",
             {{"grow_size", sizes.grow_size},
              {"trim_size", sizes.trim_size},
              {"input_choices", sizes.input_choices},
              {"op_choices", sizes.op_choices},
              {"combine_codes", sizes.combine_codes},
              {"literal_grow_size", sizes.literal_grow_size}}},
            {"raw_count", raw_count},
            {"count", candidates.size()}};
  if (!f.raw) {
    json list = json::array();
    for (const auto& c : candidates) {
      list.push_back({{"hash", hash_hex(canonical_hash(c.arch))},
                      {"action", provenance_action(c.provenance)},
                      {"detail", provenance_detail(c.provenance)},
                      {"arch", arch_to_json(c.arch)}});
    }
    j["candidates"] = std::move(list);
  }
  emit(j.dump(2) + "\n", f.common.out, out);
}

// ---------------------------------------------------------------------------

struct EstimateFlags {
  CommonFlags common;
  std::string arch;
  std::optional<std::int64_t> bytes_per_element;
  std::optional<std::int64_t> bytes_per_weight;
  std::string csv;
};

void run_estimate(const EstimateFlags& f, std::ostream& out) {
  const SearchConfig config = base_config(f.common);
  MemoryConfig memory = config.memory;
  if (f.bytes_per_element) memory.bytes_per_element = *f.bytes_per_element;
  if (f.bytes_per_weight) memory.bytes_per_weight = *f.bytes_per_weight;
  if (memory.bytes_per_element < 1 || memory.bytes_per_weight < 1) {
    throw InvalidArgument("byte sizes must be >= 1");
  }
  const NetworkArch arch = load_arch(f.arch);
  const auto violations = validate(arch);
  if (!violations.empty()) {
    throw InvalidArchitecture("network is invalid: " + violations.front().message);
  }
  const MemoryEstimate estimate = estimate_memory(arch, memory);
  if (!f.csv.empty()) write_file(f.csv, lifetime_csv(estimate));

  if (f.common.format == "text") {
    std::ostringstream os;
    os << "param_count " << param_count(arch, memory) << "\n"
       << "param_bytes " << estimate.param_bytes << "\n"
       << "peak_elements " << estimate.peak_elements() << "\n"
       << "peak_intermediate_bytes " << estimate.peak_intermediate_bytes << "\n"
       << "total_bytes " << estimate.total_bytes() << "\n\n"
       << lifetime_csv(estimate);
    emit(os.str(), f.common.out, out);
    return;
  }
  json j = memory_to_json(estimate);
  j["hash"] = hash_hex(canonical_hash(arch));
  j["param_count"] = param_count(arch, memory);
  j["peak_elements"] = estimate.peak_elements();
  emit(j.dump(2) + "\n", f.common.out, out);
}

// ---------------------------------------------------------------------------

struct RankFlags {
  CommonFlags common;
  std::string arch;
  std::string candidates;
  std::string controller;
  int k = 0;
  int set_size = 0;
};

void run_rank(const RankFlags& f, std::ostream& out) {
  const SearchConfig config = base_config(f.common);
  std::vector<NetworkArch> archs;
  if (!f.candidates.empty()) {
    const json j = load_json(f.candidates);
    const json& list = j.is_object() ? j.at("candidates") : j;
    for (const json& item : list) {
      archs.push_back(arch_from_json(item.contains("arch") ? item.at("arch") : item));
    }
  } else {
    for (auto& c : generate_candidates(base_arch(f.arch, config), config.trim)) {
      archs.push_back(std::move(c.arch));
    }
  }
  if (archs.empty()) throw NoCandidates("nothing to rank");
  const ControllerParams params =
      f.controller.empty()
          ? ControllerParams::random(ControllerKind::kScc, config.controller.d_emb,
                                     config.controller.d_h, f.common.seed,
                                     config.controller.init_range)
          : load_controller(f.controller);
  const std::vector<double> scores = predict_scores(params, archs, f.set_size);
  std::vector<std::uint64_t> hashes;
  for (const auto& a : archs) hashes.push_back(canonical_hash(a));
  const std::vector<int> order = order_by_score(scores, hashes);
  const std::size_t k = f.k > 0 ? std::min<std::size_t>(order.size(), f.k) : order.size();

  if (f.common.format == "text") {
    std::ostringstream os;
    for (std::size_t i = 0; i < k; ++i) {
      const auto id = static_cast<std::size_t>(order[i]);
      os << (i + 1) << "  " << hash_hex(hashes[id]) << "  "
         << fmt("%.6f", scores[id]) << "\n";
    }
    emit(os.str(), f.common.out, out);
    return;
  }
  json list = json::array();
  for (std::size_t i = 0; i < k; ++i) {
    const auto id = static_cast<std::size_t>(order[i]);
    list.push_back({{"rank", i + 1},
                    {"hash", hash_hex(hashes[id])},
                    {"score", scores[id]},
                    {"arch", arch_to_json(archs[id])}});
  }
  emit(json{{"controller", std::string(controller_kind_name(params.kind))},
            {"count", archs.size()},
            {"ranked", std::move(list)}}
               .dump(2) + "\n",
       f.common.out, out);
}

// ---------------------------------------------------------------------------

struct SearchFlags {
  CommonFlags common;
  std::optional<double> lambda;
  std::optional<int> k;
  std::optional<int> rounds;
  std::optional<int> patience;
  std::optional<std::string> evaluator;
  std::optional<std::string> trainer_cmd;
  std::optional<std::int64_t> bytes_per_element;
  std::optional<std::int64_t> bytes_per_weight;
  std::optional<std::string> metric_mode;
  std::string init_arch;
  bool seed_given = false;
  bool resume = false;
  bool reset_controller = false;
};

void run_search_command(const SearchFlags& f, std::ostream& out) {
  SearchConfig config = base_config(f.common);
  if (f.seed_given) config.seed = f.common.seed;
  if (f.lambda) config.lambda = *f.lambda;
  if (f.k) config.k = *f.k;
  if (f.rounds) config.max_rounds = *f.rounds;
  if (f.patience) config.stop_patience = *f.patience;
  if (f.evaluator) config.evaluator = *f.evaluator;
  if (f.trainer_cmd) config.trainer.command = split_command(*f.trainer_cmd);
  if (f.bytes_per_element) config.memory.bytes_per_element = *f.bytes_per_element;
  if (f.bytes_per_weight) config.memory.bytes_per_weight = *f.bytes_per_weight;
  if (f.metric_mode) config.metric_mode = metric_mode_from_name(*f.metric_mode);
  if (!f.init_arch.empty()) config.init_arch = load_arch(f.init_arch);
  if (f.reset_controller) config.controller.reset_each_round = true;
  config.validate();

  const SearchResult result = run_search(config, f.common.out, nullptr, f.resume);
  if (f.common.format == "text") {
    for (const auto& w : result.winners) {
      out << "round " << w.round << "  winner " << hash_hex(w.hash) << "  y "
          << fmt("%.6f", w.y) << "  accuracy " << fmt("%.4f", w.accuracy)
          << "  total_bytes " << w.total_bytes << "\n";
    }
    out << "best " << hash_hex(canonical_hash(result.best))
        << (result.stopped_early ? "  (stopped early)" : "") << "\n";
    return;
  }
  json winners = json::array();
  for (const auto& w : result.winners) {
    winners.push_back({{"round", w.round},
                       {"hash", hash_hex(w.hash)},
                       {"y", w.y},
                       {"accuracy", w.accuracy},
                       {"total_bytes", w.total_bytes}});
  }
  out << json{{"rounds", result.winners.size()},
              {"stopped_early", result.stopped_early},
              {"best_hash", hash_hex(canonical_hash(result.best))},
              {"winners", std::move(winners)},
              {"best_arch", arch_to_json(result.best)}}
             .dump(2)
      << "\n";
}

// ---------------------------------------------------------------------------

struct EvalControllerFlags {
  CommonFlags common;
  BenchmarkConfig bench;
  std::string arch;
  std::optional<double> lambda;
  std::optional<std::string> metric_mode;
};

void run_eval_controller(EvalControllerFlags f, std::ostream& out) {
  const SearchConfig config = base_config(f.common);
  f.bench.seed = f.common.seed;
  f.bench.lambda = f.lambda.value_or(config.lambda);
  f.bench.metric_mode =
      f.metric_mode ? metric_mode_from_name(*f.metric_mode) : config.metric_mode;
  f.bench.memory = config.memory;
  f.bench.synthetic = config.synthetic;
  if (!f.arch.empty()) f.bench.base = load_arch(f.arch);
  const BenchmarkResult result = benchmark_controllers(f.bench);
  emit(f.common.format == "text" ? benchmark_table(result)
                                 : benchmark_to_json(result).dump(2) + "\n",
       f.common.out, out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Memory-aware architecture search by growing and trimming cells",
               "growtrim"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate the grow/trim candidates of a base network");
  add_common(gen_cmd, gen.common);
  gen_cmd->add_option("--arch", gen.arch, "Base network (JSON); defaults to the initial template")
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--mode", gen.mode, "Which candidates to generate")
      ->check(CLI::IsMember({"grow", "trim", "both"}));
  gen_cmd->add_option("--out", gen.common.out, "Output file (default: stdout)");
  gen_cmd->add_flag("--raw", gen.raw, "Only report counts, not the candidates");
  gen_cmd->add_flag("--keep-param-growth", gen.keep_param_growth,
                    "Keep trims that end up with more weights than the base");

  EstimateFlags est;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate parameter and peak intermediate memory");
  add_common(est_cmd, est.common);
  est_cmd->add_option("--arch", est.arch, "Network (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  est_cmd->add_option("--bytes-per-element", est.bytes_per_element,
                      "Bytes per activation element");
  est_cmd->add_option("--bytes-per-weight", est.bytes_per_weight, "Bytes per weight");
  est_cmd->add_option("--csv", est.csv, "Also write the lifetime table as CSV");
  est_cmd->add_option("--out", est.common.out, "Output file (default: stdout)");

  RankFlags rk;
  auto* rank_cmd = app.add_subcommand("rank", "Rank candidates with a controller");
  add_common(rank_cmd, rk.common);
  auto* rank_src = rank_cmd->add_option_group("source");
  rank_src->add_option("--arch", rk.arch, "Base network whose candidates are ranked")
      ->check(CLI::ExistingFile);
  rank_src->add_option("--candidates", rk.candidates, "Candidate list from gen, or a JSON array")
      ->check(CLI::ExistingFile);
  rank_src->require_option(0, 1);
  rank_cmd->add_option("--controller", rk.controller,
                       "Controller checkpoint (default: seeded random SCC)")
      ->check(CLI::ExistingFile);
  rank_cmd->add_option("--k", rk.k, "Only print the top k")->check(CLI::NonNegativeNumber);
  rank_cmd->add_option("--set-size", rk.set_size, "Reset the ranker every N candidates")
      ->check(CLI::NonNegativeNumber);
  rank_cmd->add_option("--out", rk.common.out, "Output file (default: stdout)");

  SearchFlags sf;
  auto* search_cmd = app.add_subcommand("search", "Run the round-based search");
  search_cmd->add_option("--config", sf.common.config, "Search configuration file (JSON)")
      ->check(CLI::ExistingFile);
  search_cmd->add_option("--format", sf.common.format, "Summary format")
      ->check(CLI::IsMember({"json", "text"}));
  auto* seed_opt = search_cmd->add_option("--seed", sf.common.seed, "Random seed");
  search_cmd->add_option("--out", sf.common.out, "Output directory")->required();
  search_cmd->add_option("--lambda", sf.lambda, "Accuracy/memory trade-off in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  search_cmd->add_option("--k", sf.k, "Candidates evaluated per round")
      ->check(CLI::PositiveNumber);
  search_cmd->add_option("--rounds", sf.rounds, "Maximum number of rounds")
      ->check(CLI::PositiveNumber);
  search_cmd->add_option("--patience", sf.patience,
                         "Stop after this many rounds without a positive winner (0: never)")
      ->check(CLI::NonNegativeNumber);
  search_cmd->add_option("--evaluator", sf.evaluator, "Accuracy evaluator")
      ->check(CLI::IsMember({"synthetic", "external"}));
  search_cmd->add_option("--trainer-cmd", sf.trainer_cmd,
                         "Trainer command line for the external evaluator");
  search_cmd->add_option("--bytes-per-element", sf.bytes_per_element,
                         "Bytes per activation element");
  search_cmd->add_option("--bytes-per-weight", sf.bytes_per_weight, "Bytes per weight");
  search_cmd->add_option("--metric-mode", sf.metric_mode, "Sign convention of the metric")
      ->check(CLI::IsMember({"goal_consistent", "paper_literal"}));
  search_cmd->add_option("--init-arch", sf.init_arch, "Initial base network (JSON)")
      ->check(CLI::ExistingFile);
  search_cmd->add_flag("--resume", sf.resume, "Continue from OUT/state.json if present");
  search_cmd->add_flag("--reset-controller", sf.reset_controller,
                       "Re-initialize the controller every round");

  EvalControllerFlags ec;
  auto* ec_cmd = app.add_subcommand("eval-controller",
                                    "Compare the SCC with the baseline controllers");
  add_common(ec_cmd, ec.common);
  ec_cmd->add_option("--arch", ec.arch, "Base network (default: seeded 3-cell base)")
      ->check(CLI::ExistingFile);
  ec_cmd->add_option("--pool", ec.bench.pool_size, "Evaluation pool size")
      ->check(CLI::PositiveNumber);
  ec_cmd->add_option("--train-size", ec.bench.train_size, "Training examples")
      ->check(CLI::PositiveNumber);
  ec_cmd->add_option("--d-emb", ec.bench.d_emb, "Embedding size")->check(CLI::PositiveNumber);
  ec_cmd->add_option("--d-h", ec.bench.d_h, "Hidden size")->check(CLI::PositiveNumber);
  ec_cmd->add_option("--epochs", ec.bench.train.epochs, "Training epochs")
      ->check(CLI::NonNegativeNumber);
  ec_cmd->add_option("--lr", ec.bench.train.lr, "Learning rate")->check(CLI::NonNegativeNumber);
  ec_cmd->add_option("--set-size", ec.bench.train.set_size, "Candidates per training set")
      ->check(CLI::PositiveNumber);
  ec_cmd->add_flag("--standardize,!--no-standardize", ec.bench.train.standardize_targets,
                   "Standardize targets before training");
  ec_cmd->add_option("--k-values", ec.bench.ks, "Cut-offs to report")->delimiter(',');
  ec_cmd->add_option("--lambda", ec.lambda, "Trade-off used for the targets")
      ->check(CLI::Range(0.0, 1.0));
  ec_cmd->add_option("--metric-mode", ec.metric_mode, "Sign convention of the metric")
      ->check(CLI::IsMember({"goal_consistent", "paper_literal"}));
  ec_cmd->add_option("--out", ec.common.out, "Output file (default: stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }
  sf.seed_given = seed_opt->count() > 0;

  try {
    if (gen_cmd->parsed()) run_gen(gen, out);
    if (est_cmd->parsed()) run_estimate(est, out);
    if (rank_cmd->parsed()) run_rank(rk, out);
    if (search_cmd->parsed()) run_search_command(sf, out);
    if (ec_cmd->parsed()) run_eval_controller(ec, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const KTooLarge& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace growtrim
