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

#include "growtrim/search.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "growtrim/arch_json.h"
#include "growtrim/errors.h"
#include "growtrim/ranking.h"
#include "growtrim/rng.h"

namespace growtrim {

using nlohmann::json;

namespace {

constexpr std::uint64_t kControllerInitSalt = 0x5cc0;
constexpr std::uint64_t kTrainSalt = 0x7a11;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!j.is_object()) throw FormatError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw FormatError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("config key '") + key + "': " + e.what());
  }
}

std::string round_name(int round) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%03d", round);
  return buf;
}

std::uint64_t parse_hash(const json& j) {
  return std::stoull(j.get<std::string>(), nullptr, 16);
}

CandidateRecord candidate_record_from_json(const json& j) {
  CandidateRecord r;
  r.arch = arch_from_json(j.at("arch"));
  r.hash = parse_hash(j.at("hash"));
  r.action = j.at("action").get<std::string>();
  r.detail = j.at("detail").get<std::string>();
  r.accuracy = j.at("accuracy").get<double>();
  r.param_bytes = j.at("param_bytes").get<std::int64_t>();
  r.peak_bytes = j.at("peak_bytes").get<std::int64_t>();
  r.y = j.at("y").get<double>();
  if (r.hash != canonical_hash(r.arch)) {
    throw CorruptCheckpoint("base record hash does not match its architecture");
  }
  return r;
}

json winner_to_json(const WinnerSummary& w) {
  return {{"round", w.round},
          {"hash", hash_hex(w.hash)},
          {"y", w.y},
          {"accuracy", w.accuracy},
          {"total_bytes", w.total_bytes}};
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void SearchConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must be in [0, 1]");
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (max_rounds < 1) throw InvalidArgument("max_rounds must be >= 1");
  if (stop_patience < 0) throw InvalidArgument("stop_patience must be >= 0");
  if (budget < 1) throw InvalidArgument("budget must be >= 1");
  if (memory.bytes_per_element < 1 || memory.bytes_per_weight < 1) {
    throw InvalidArgument("bytes per element and per weight must be >= 1");
  }
  if (evaluator != "synthetic" && evaluator != "external") {
    throw InvalidArgument("evaluator must be 'synthetic' or 'external'");
  }
  if (evaluator == "external" && trainer.command.empty()) {
    throw InvalidArgument("the external evaluator needs a trainer command");
  }
  if (!(trainer.timeout_seconds > 0.0) || trainer.parallelism < 1) {
    throw InvalidArgument("trainer timeout and parallelism must be positive");
  }
  if (controller.d_emb < 1 || controller.d_h < 1) {
    throw InvalidArgument("controller dimensions must be >= 1");
  }
  if (!(controller.train.lr >= 0.0) || controller.train.epochs < 0 ||
      controller.train.set_size < 1) {
    throw InvalidArgument("invalid controller training settings");
  }
}

json search_config_to_json(const SearchConfig& c) {
  json j = {
      {"lambda", c.lambda},
      {"k", c.k},
      {"max_rounds", c.max_rounds},
      {"seed", c.seed},
      {"stop_patience", c.stop_patience},
      {"budget", c.budget},
      {"metric_mode", std::string(metric_mode_name(c.metric_mode))},
      {"memory",
       {{"bytes_per_weight", c.memory.bytes_per_weight},
        {"bytes_per_element", c.memory.bytes_per_element},
        {"include_bias", c.memory.include_bias},
        {"include_stem", c.memory.include_stem},
        {"include_head", c.memory.include_head}}},
      {"evaluator", c.evaluator},
      {"synthetic",
       {{"floor", c.synthetic.floor},
        {"ceil", c.synthetic.ceil},
        {"alpha", c.synthetic.alpha},
        {"beta", c.synthetic.beta},
        {"sigma", c.synthetic.sigma}}},
      {"trainer",
       {{"command", c.trainer.command},
        {"timeout_seconds", c.trainer.timeout_seconds},
        {"parallelism", c.trainer.parallelism}}},
      {"controller",
       {{"d_emb", c.controller.d_emb},
        {"d_h", c.controller.d_h},
        {"init_range", c.controller.init_range},
        {"lr", c.controller.train.lr},
        {"momentum", c.controller.train.momentum},
        {"epochs", c.controller.train.epochs},
        {"set_size", c.controller.train.set_size},
        {"standardize_targets", c.controller.train.standardize_targets},
        {"clip_norm", c.controller.train.clip_norm},
        {"reset_each_round", c.controller.reset_each_round}}},
      {"trim", {{"require_param_reduction", c.trim.require_param_reduction}}},
      {"template",
       {{"num_blocks", c.init_template.num_blocks},
        {"strides", c.init_template.strides},
        {"channel_width", c.init_template.channel_width},
        {"input_shape",
         {{"height", c.init_template.input_shape.height},
          {"width", c.init_template.input_shape.width},
          {"channels", c.init_template.input_shape.channels}}},
        {"stem", c.init_template.stem_enabled},
        {"num_classes", c.init_template.num_classes}}},
  };
  if (c.init_arch) j["init_arch"] = arch_to_json(*c.init_arch);
  return j;
}

SearchConfig search_config_from_json(const json& j) {
  check_keys(j,
             {"lambda", "k", "max_rounds", "seed", "stop_patience", "budget",
              "metric_mode", "memory", "evaluator", "synthetic", "trainer",
              "controller", "trim", "template", "init_arch"},
             "config");
  SearchConfig c;
  read(j, "lambda", c.lambda);
  read(j, "k", c.k);
  read(j, "max_rounds", c.max_rounds);
  read(j, "seed", c.seed);
  read(j, "stop_patience", c.stop_patience);
  read(j, "budget", c.budget);
  if (j.contains("metric_mode")) {
    std::string mode;
    read(j, "metric_mode", mode);
    c.metric_mode = metric_mode_from_name(mode);
  }
  if (j.contains("memory")) {
    const json& m = j["memory"];
    check_keys(m, {"bytes_per_weight", "bytes_per_element", "include_bias",
                   "include_stem", "include_head"},
               "memory");
    read(m, "bytes_per_weight", c.memory.bytes_per_weight);
    read(m, "bytes_per_element", c.memory.bytes_per_element);
    read(m, "include_bias", c.memory.include_bias);
    read(m, "include_stem", c.memory.include_stem);
    read(m, "include_head", c.memory.include_head);
  }
  read(j, "evaluator", c.evaluator);
  if (j.contains("synthetic")) {
    const json& s = j["synthetic"];
    check_keys(s, {"floor", "ceil", "alpha", "beta", "sigma"}, "synthetic");
    read(s, "floor", c.synthetic.floor);
    read(s, "ceil", c.synthetic.ceil);
    read(s, "alpha", c.synthetic.alpha);
    read(s, "beta", c.synthetic.beta);
    read(s, "sigma", c.synthetic.sigma);
  }
  if (j.contains("trainer")) {
    const json& t = j["trainer"];
    check_keys(t, {"command", "timeout_seconds", "parallelism"}, "trainer");
    if (t.contains("command") && t["command"].is_string()) {
      c.trainer.command = split_command(t["command"].get<std::string>());
    } else {
      read(t, "command", c.trainer.command);
    }
    read(t, "timeout_seconds", c.trainer.timeout_seconds);
    read(t, "parallelism", c.trainer.parallelism);
  }
  if (j.contains("controller")) {
    const json& s = j["controller"];
    check_keys(s, {"d_emb", "d_h", "init_range", "lr", "momentum", "epochs",
                   "set_size", "standardize_targets", "clip_norm",
                   "reset_each_round"},
               "controller");
    read(s, "d_emb", c.controller.d_emb);
    read(s, "d_h", c.controller.d_h);
    read(s, "init_range", c.controller.init_range);
    read(s, "lr", c.controller.train.lr);
    read(s, "momentum", c.controller.train.momentum);
    read(s, "epochs", c.controller.train.epochs);
    read(s, "set_size", c.controller.train.set_size);
    read(s, "standardize_targets", c.controller.train.standardize_targets);
    read(s, "clip_norm", c.controller.train.clip_norm);
    read(s, "reset_each_round", c.controller.reset_each_round);
  }
  if (j.contains("trim")) {
    check_keys(j["trim"], {"require_param_reduction"}, "trim");
    read(j["trim"], "require_param_reduction", c.trim.require_param_reduction);
  }
  if (j.contains("template")) {
    const json& t = j["template"];
    check_keys(t, {"num_blocks", "strides", "channel_width", "input_shape",
                   "stem", "num_classes"},
               "template");
    read(t, "num_blocks", c.init_template.num_blocks);
    read(t, "strides", c.init_template.strides);
    read(t, "channel_width", c.init_template.channel_width);
    read(t, "stem", c.init_template.stem_enabled);
    read(t, "num_classes", c.init_template.num_classes);
    if (t.contains("input_shape")) {
      const json& s = t["input_shape"];
      check_keys(s, {"height", "width", "channels"}, "template.input_shape");
      read(s, "height", c.init_template.input_shape.height);
      read(s, "width", c.init_template.input_shape.width);
      read(s, "channels", c.init_template.input_shape.channels);
    }
  }
  if (j.contains("init_arch")) {
    const json& a = j["init_arch"];
    c.init_arch = a.is_string() ? load_arch(a.get<std::string>()) : arch_from_json(a);
  }
  return c;
}

SearchConfig load_search_config(const std::filesystem::path& path) {
  json j = load_json(path);
  if (j.is_object() && j.contains("init_arch") && j["init_arch"].is_string()) {
    std::filesystem::path arch_path = j["init_arch"].get<std::string>();
    if (arch_path.is_relative()) {
      j["init_arch"] = (path.parent_path() / arch_path).string();
    }
  }
  return search_config_from_json(j);
}

json candidate_record_to_json(const CandidateRecord& r) {
  json j = {{"hash", hash_hex(r.hash)},
            {"action", r.action},
            {"detail", r.detail},
            {"status", std::string(eval_status_name(r.status))},
            {"accuracy", r.accuracy},
            {"param_bytes", r.param_bytes},
            {"peak_bytes", r.peak_bytes},
            {"total_bytes", r.total_bytes()},
            {"y", r.y}};
  if (!r.message.empty()) j["message"] = r.message;
  if (r.predicted) j["predicted"] = *r.predicted;
  j["arch"] = arch_to_json(r.arch);
  return j;
}

json round_record_to_json(const RoundRecord& r) {
  json evaluated = json::array();
  for (const auto& c : r.evaluated) evaluated.push_back(candidate_record_to_json(c));
  return {{"round", r.round},
          {"base", candidate_record_to_json(r.base)},
          {"candidate_count", r.candidate_count},
          {"failures", r.failures},
          {"history_size", r.history_size},
          {"winner", candidate_record_to_json(r.winner)},
          {"scc_loss_trace", r.scc_loss_trace},
          {"evaluated", std::move(evaluated)}};
}

std::unique_ptr<Evaluator> make_evaluator(const SearchConfig& config) {
  if (config.evaluator == "external") {
    return std::make_unique<ExternalEvaluator>(config.trainer);
  }
  return std::make_unique<SyntheticEvaluator>(config.synthetic);
}

SearchEngine::SearchEngine(SearchConfig config, std::shared_ptr<Evaluator> evaluator,
                           EngineState state)
    : config_(std::move(config)),
      evaluator_(std::move(evaluator)),
      state_(std::move(state)) {}

SearchEngine::SearchEngine(SearchConfig config, std::shared_ptr<Evaluator> evaluator)
    : config_(std::move(config)), evaluator_(std::move(evaluator)) {
  config_.validate();
  if (!evaluator_) evaluator_ = make_evaluator(config_);
  const NetworkArch base = config_.init_arch ? *config_.init_arch
                                             : make_initial_arch(config_.init_template);
  const auto violations = validate(base);
  if (!violations.empty()) {
    throw InvalidArchitecture("initial network is invalid: " +
                              violations.front().message);
  }
  const auto results = evaluator_->evaluate(
      {{"base", base, mix_seed(config_.seed, 0), config_.budget}});
  if (results.size() != 1 || !results.front().ok()) {
    throw EvaluatorFailure("evaluation of the initial network failed" +
                           (results.empty() ? std::string()
                                            : ": " + results.front().message));
  }
  const MemoryEstimate mem = estimate_memory(base, config_.memory);
  CandidateRecord& b = state_.base;
  b.arch = base;
  b.hash = canonical_hash(base);
  b.action = "base";
  b.detail = "initial network";
  b.accuracy = results.front().accuracy;
  b.param_bytes = mem.param_bytes;
  b.peak_bytes = mem.peak_intermediate_bytes;
  state_.controller = ControllerParams::random(
      ControllerKind::kScc, config_.controller.d_emb, config_.controller.d_h,
      mix_seed(config_.seed, kControllerInitSalt), config_.controller.init_range);
  state_.velocity = ControllerParams::zeros(ControllerKind::kScc,
                                            config_.controller.d_emb,
                                            config_.controller.d_h);
}

CandidateRecord SearchEngine::score(const NetworkArch& arch,
                                    const EvalResult& result) const {
  CandidateRecord r;
  r.arch = arch;
  r.hash = canonical_hash(arch);
  r.status = result.status;
  r.message = result.message;
  if (!result.ok()) return r;
  const MemoryEstimate mem = estimate_memory(arch, config_.memory);
  r.accuracy = result.accuracy;
  r.param_bytes = mem.param_bytes;
  r.peak_bytes = mem.peak_intermediate_bytes;
  const CandidateRecord& base = state_.base;
  r.y = efficiency({r.accuracy, static_cast<double>(r.peak_bytes),
                    static_cast<double>(r.param_bytes), base.accuracy,
                    static_cast<double>(base.peak_bytes),
                    static_cast<double>(base.param_bytes), config_.lambda},
                   config_.metric_mode);
  return r;
}

RoundRecord SearchEngine::run_round() {
  const int round = state_.rounds_completed + 1;
  const std::uint64_t round_seed = mix_seed(config_.seed, static_cast<std::uint64_t>(round));
  std::vector<Candidate> candidates =
      generate_candidates(state_.base.arch, config_.trim);
  if (candidates.empty()) {
    throw NoCandidates("the base network can neither grow nor trim");
  }
  const std::size_t n = candidates.size();
  const std::size_t k = std::min(n, static_cast<std::size_t>(config_.k));

  std::vector<std::size_t> selected;
  std::vector<double> predicted;
  if (round == 1) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(round_seed);
    rng.shuffle(order);
    selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(selected.begin(), selected.end());
  } else {
    std::vector<NetworkArch> archs;
    std::vector<std::uint64_t> hashes;
    archs.reserve(n);
    for (const auto& c : candidates) {
      archs.push_back(c.arch);
      hashes.push_back(canonical_hash(c.arch));
    }
    predicted = rank(state_.controller, archs);
    const std::vector<int> order = order_by_score(predicted, hashes);
    for (std::size_t i = 0; i < k; ++i) {
      selected.push_back(static_cast<std::size_t>(order[i]));
    }
  }

  std::vector<EvalRequest> requests;
  requests.reserve(k);
  for (std::size_t i : selected) {
    requests.push_back({hash_hex(canonical_hash(candidates[i].arch)),
                        candidates[i].arch, round_seed, config_.budget});
  }
  const std::vector<EvalResult> results = evaluator_->evaluate(requests);
  if (results.size() != requests.size()) {
    throw EvaluatorFailure("evaluator returned the wrong number of results");
  }

  RoundRecord record;
  record.round = round;
  record.base = state_.base;
  record.candidate_count = static_cast<int>(n);
  for (std::size_t j = 0; j < k; ++j) {
    const Candidate& c = candidates[selected[j]];
    CandidateRecord r = score(c.arch, results[j]);
    r.action = provenance_action(c.provenance);
    r.detail = provenance_detail(c.provenance);
    if (!predicted.empty()) r.predicted = predicted[selected[j]];
    if (!r.ok()) ++record.failures;
    record.evaluated.push_back(std::move(r));
  }
  if (2 * static_cast<std::size_t>(record.failures) > k) {
    throw EvaluatorFailure(std::to_string(record.failures) + " of " +
                           std::to_string(k) + " evaluations failed in round " +
                           std::to_string(round));
  }

  const CandidateRecord* winner = nullptr;
  for (const auto& r : record.evaluated) {
    if (!r.ok()) continue;
    if (winner == nullptr || r.y > winner->y ||
        (r.y == winner->y && r.hash < winner->hash)) {
      winner = &r;
    }
  }
  record.winner = *winner;

  for (const auto& r : record.evaluated) {
    if (r.ok()) state_.history.push_back({r.arch, r.y});
  }
  if (config_.controller.reset_each_round) {
    state_.controller = ControllerParams::random(
        ControllerKind::kScc, config_.controller.d_emb, config_.controller.d_h,
        mix_seed(round_seed, kControllerInitSalt), config_.controller.init_range);
    state_.velocity = ControllerParams::zeros(ControllerKind::kScc,
                                              config_.controller.d_emb,
                                              config_.controller.d_h);
  }
  TrainConfig train_config = config_.controller.train;
  train_config.seed = mix_seed(round_seed, kTrainSalt);
  TrainResult trained =
      train(state_.controller, state_.history, train_config, &state_.velocity);
  state_.controller = std::move(trained.params);
  state_.velocity = std::move(trained.velocity);
  record.scc_loss_trace = std::move(trained.loss_trace);
  record.history_size = state_.history.size();

  state_.base = record.winner;
  state_.rounds_completed = round;
  state_.stale_rounds = record.winner.y > 0.0 ? 0 : state_.stale_rounds + 1;
  state_.winners.push_back({round, record.winner.hash, record.winner.y,
                            record.winner.accuracy, record.winner.total_bytes()});
  return record;
}

bool SearchEngine::finished() const {
  if (state_.rounds_completed >= config_.max_rounds) return true;
  return config_.metric_mode == MetricMode::kGoalConsistent &&
         config_.stop_patience > 0 && state_.stale_rounds >= config_.stop_patience;
}

json SearchEngine::state_to_json() const {
  json history = json::array();
  for (const auto& ex : state_.history) {
    history.push_back({{"arch", arch_to_json(ex.arch)}, {"target", ex.target}});
  }
  json winners = json::array();
  for (const auto& w : state_.winners) winners.push_back(winner_to_json(w));
  json payload = {{"rounds_completed", state_.rounds_completed},
                  {"stale_rounds", state_.stale_rounds},
                  {"base", candidate_record_to_json(state_.base)},
                  {"winners", std::move(winners)},
                  {"history", std::move(history)},
                  {"controller", controller_to_json(state_.controller)},
                  {"velocity", controller_to_json(state_.velocity)}};
  const std::string hash = hash_hex(fnv1a64(payload.dump()));
  return {{"format", "growtrim-state"},
          {"version", kStateVersion},
          {"payload_hash", hash},
          {"payload", std::move(payload)}};
}

void SearchEngine::checkpoint(const std::filesystem::path& state_file) const {
  // Write then rename so a crash never leaves a half-written state.
  std::filesystem::path tmp = state_file;
  tmp += ".tmp";
  write_file(tmp, state_to_json().dump() + "\n");
  std::filesystem::rename(tmp, state_file);
}

SearchEngine SearchEngine::restore(SearchConfig config,
                                   std::shared_ptr<Evaluator> evaluator,
                                   const std::filesystem::path& state_file) {
  config.validate();
  if (!evaluator) evaluator = make_evaluator(config);
  json j;
  try {
    j = json::parse(read_file(state_file));
  } catch (const json::parse_error& e) {
    throw CorruptCheckpoint(state_file.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw CorruptCheckpoint(e.what());
  }
  EngineState state;
  try {
    if (j.at("version").get<int>() != kStateVersion) {
      throw CorruptCheckpoint("unsupported state version in " + state_file.string());
    }
    const json& payload = j.at("payload");
    if (hash_hex(fnv1a64(payload.dump())) != j.at("payload_hash").get<std::string>()) {
      throw CorruptCheckpoint("payload hash mismatch in " + state_file.string());
    }
    state.rounds_completed = payload.at("rounds_completed").get<int>();
    state.stale_rounds = payload.at("stale_rounds").get<int>();
    state.base = candidate_record_from_json(payload.at("base"));
    for (const json& w : payload.at("winners")) {
      state.winners.push_back({w.at("round").get<int>(), parse_hash(w.at("hash")),
                               w.at("y").get<double>(), w.at("accuracy").get<double>(),
                               w.at("total_bytes").get<std::int64_t>()});
    }
    for (const json& ex : payload.at("history")) {
      state.history.push_back({arch_from_json(ex.at("arch")), ex.at("target").get<double>()});
    }
    state.controller = controller_from_json(payload.at("controller"));
    state.velocity = controller_from_json(payload.at("velocity"));
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(state_file.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw CorruptCheckpoint(state_file.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw CorruptCheckpoint(state_file.string() + ": bad hash field");
  }
  if (state.controller.d_emb != config.controller.d_emb ||
      state.controller.d_h != config.controller.d_h) {
    throw InvalidArgument("checkpoint controller size differs from the config");
  }
  return SearchEngine(std::move(config), std::move(evaluator), std::move(state));
}

SearchResult run_search(const SearchConfig& config,
                        const std::filesystem::path& out_dir,
                        std::shared_ptr<Evaluator> evaluator, bool resume) {
  namespace fs = std::filesystem;
  config.validate();
  if (!evaluator) evaluator = make_evaluator(config);
  const bool files = !out_dir.empty();
  const fs::path state_file = out_dir / "state.json";
  const fs::path log_file = out_dir / "search_log.txt";

  std::optional<SearchEngine> engine;
  if (files && resume && fs::exists(state_file)) {
    engine.emplace(SearchEngine::restore(config, evaluator, state_file));
  } else {
    engine.emplace(config, evaluator);
    if (files) {
      for (const char* sub : {"rounds", "controller"}) {
        const fs::path dir = out_dir / sub;
        if (!fs::exists(dir)) continue;
        for (const auto& entry : fs::directory_iterator(dir)) {
          const std::string name = entry.path().filename().string();
          if (name.rfind("round_", 0) == 0 || name.rfind("ckpt_", 0) == 0) {
            fs::remove(entry.path());
          }
        }
      }
      const auto& b = engine->state().base;
      write_file(log_file, "round 0 base " + hash_hex(b.hash) + " accuracy " +
                               format_double(b.accuracy) + " total_bytes " +
                               std::to_string(b.total_bytes()) + "\n");
      save_arch(b.arch, out_dir / "best_arch.json");
      engine->checkpoint(state_file);
    }
  }

  SearchResult result;
  while (!engine->finished()) {
    RoundRecord record = engine->run_round();
    if (files) {
      const std::string nnn = round_name(record.round);
      write_file(out_dir / "rounds" / ("round_" + nnn + ".json"),
                 round_record_to_json(record).dump(2) + "\n");
      save_controller(engine->state().controller,
                      out_dir / "controller" / ("ckpt_" + nnn + ".json"));
      save_arch(record.winner.arch, out_dir / "best_arch.json");
      engine->checkpoint(state_file);
      std::ofstream log(log_file, std::ios::app);
      const auto& w = record.winner;
      log << "round " << record.round << " candidates " << record.candidate_count
          << " evaluated " << record.evaluated.size() << " failures "
          << record.failures << " winner " << hash_hex(w.hash) << " " << w.action
          << " y " << format_double(w.y) << " accuracy "
          << format_double(w.accuracy) << " total_bytes " << w.total_bytes()
          << "\n";
    }
    result.rounds.push_back(std::move(record));
  }
  result.best = engine->state().base.arch;
  result.winners = engine->state().winners;
  result.stopped_early = engine->state().rounds_completed < config.max_rounds;
  return result;
}

}  // namespace growtrim
