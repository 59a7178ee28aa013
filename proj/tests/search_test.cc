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

#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "growtrim/arch_json.h"
#include "growtrim/errors.h"
#include "growtrim/search.h"
#include "test_util.h"

#ifndef GROWTRIM_STUB_TRAINER
#define GROWTRIM_STUB_TRAINER "stub_trainer"
#endif

namespace growtrim {
namespace {

namespace fs = std::filesystem;

SearchConfig small_config(std::uint64_t seed = 1) {
  SearchConfig c;
  c.seed = seed;
  c.k = 20;
  c.max_rounds = 3;
  c.stop_patience = 0;
  c.init_template.num_blocks = 3;
  c.init_template.strides = {1, 2, 1};
  c.init_template.channel_width = 16;
  c.init_template.input_shape = {16, 16, 3};
  c.controller.d_emb = 8;
  c.controller.d_h = 8;
  c.controller.train.epochs = 3;
  c.controller.train.lr = 0.05;
  c.controller.train.set_size = 8;
  return c;
}

std::vector<std::uint64_t> winner_hashes(const SearchResult& r) {
  std::vector<std::uint64_t> out;
  for (const auto& w : r.winners) out.push_back(w.hash);
  return out;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("growtrim_search_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

// Fails everything except the initial network.
class FlakyEvaluator : public Evaluator {
 public:
  explicit FlakyEvaluator(std::size_t good) : good_(good) {}
  std::vector<EvalResult> evaluate(const std::vector<EvalRequest>& requests) override {
    std::vector<EvalResult> out;
    for (std::size_t i = 0; i < requests.size(); ++i) {
      EvalResult r{requests[i].id, EvalStatus::kOk, 0.5, std::nullopt, ""};
      if (requests[i].id != "base" && i >= good_) r.status = EvalStatus::kTrainerError;
      out.push_back(r);
    }
    return out;
  }
  std::string name() const override { return "flaky"; }

 private:
  std::size_t good_;
};

TEST(Search, WinnerIsArgmaxOfEvaluated) {
  SearchEngine engine(small_config(), std::make_shared<SyntheticEvaluator>());
  EXPECT_EQ(engine.state().base.y, 0.0);
  for (int round = 1; round <= 3; ++round) {
    const std::uint64_t before = engine.state().base.hash;
    const RoundRecord r = engine.run_round();
    EXPECT_EQ(r.round, round);
    EXPECT_EQ(r.base.hash, before);
    ASSERT_EQ(r.evaluated.size(), 20u);
    const CandidateRecord* best = nullptr;
    for (const auto& c : r.evaluated) {
      EXPECT_EQ(c.hash, canonical_hash(c.arch));
      EXPECT_EQ(c.predicted.has_value(), round > 1);
      if (!best || c.y > best->y || (c.y == best->y && c.hash < best->hash)) best = &c;
    }
    EXPECT_EQ(r.winner.hash, best->hash);
    EXPECT_EQ(engine.state().base.hash, best->hash);
    const MemoryEstimate m = estimate_memory(r.winner.arch);
    EXPECT_EQ(r.winner.param_bytes, m.param_bytes);
    EXPECT_EQ(r.winner.peak_bytes, m.peak_intermediate_bytes);
  }
}

TEST(Search, HistoryGrowsByEvaluatedCount) {
  SearchConfig c = small_config();
  SearchEngine engine(c, std::make_shared<FlakyEvaluator>(15));
  std::size_t expected = 0;
  for (int round = 0; round < 3; ++round) {
    const RoundRecord r = engine.run_round();
    EXPECT_EQ(r.failures, 5);
    expected += 15;
    EXPECT_EQ(r.history_size, expected);
    EXPECT_EQ(engine.state().history.size(), expected);
    EXPECT_EQ(r.scc_loss_trace.size(), 3u);
  }
}

TEST(Search, TooManyFailuresAbort) {
  SearchEngine engine(small_config(), std::make_shared<FlakyEvaluator>(9));
  EXPECT_THROW(engine.run_round(), EvaluatorFailure);
  SearchEngine ok(small_config(), std::make_shared<FlakyEvaluator>(10));
  EXPECT_NO_THROW(ok.run_round());
}

TEST(Search, FailingBaseAborts) {
  auto never = std::make_shared<FunctionEvaluator>([](const EvalRequest&) { return 0.5; });
  EXPECT_NO_THROW(SearchEngine(small_config(), never));
  class Dead : public Evaluator {
   public:
    std::vector<EvalResult> evaluate(const std::vector<EvalRequest>& r) override {
      return {{r[0].id, EvalStatus::kTrainerUnreachable, 0.0, std::nullopt, "gone"}};
    }
    std::string name() const override { return "dead"; }
  };
  EXPECT_THROW(SearchEngine(small_config(), std::make_shared<Dead>()), EvaluatorFailure);
}

TEST(Search, KIsClampedToCandidateCount) {
  SearchConfig c = small_config();
  c.k = 100000;
  SearchEngine engine(c, std::make_shared<SyntheticEvaluator>());
  const RoundRecord r = engine.run_round();
  EXPECT_EQ(static_cast<int>(r.evaluated.size()), r.candidate_count);
}

TEST(Search, MemoryOnlyNeverGrowsWhenTrimsAreEvaluated) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SearchConfig c = small_config(seed);
    c.lambda = 0.0;
    c.k = 100000;
    c.max_rounds = 5;
    c.synthetic.sigma = 0.0;
    const SearchResult r = run_search(c);
    ASSERT_EQ(r.rounds.size(), 5u);
    for (const auto& round : r.rounds) {
      EXPECT_LE(round.winner.total_bytes(), round.base.total_bytes()) << round.round;
    }
  }
}

TEST(Search, MaxRoundsOne) {
  SearchConfig c = small_config();
  c.max_rounds = 1;
  const SearchResult r = run_search(c);
  EXPECT_EQ(r.rounds.size(), 1u);
  EXPECT_EQ(r.winners.size(), 1u);
  EXPECT_FALSE(r.stopped_early);
  EXPECT_EQ(r.best, r.rounds[0].winner.arch);
}

TEST(Search, DeterministicReplay) {
  SearchConfig c = small_config(7);
  c.max_rounds = 4;
  const SearchResult a = run_search(c);
  const SearchResult b = run_search(c);
  EXPECT_EQ(winner_hashes(a), winner_hashes(b));
  EXPECT_EQ(a.best, b.best);
  c.seed = 8;
  EXPECT_NE(winner_hashes(run_search(c)), winner_hashes(a));
}

TEST(Search, StopsAfterPatienceWithoutGain) {
  SearchConfig c = small_config();
  c.lambda = 1.0;
  c.max_rounds = 10;
  c.stop_patience = 3;
  auto flat = std::make_shared<FunctionEvaluator>([](const EvalRequest&) { return 0.5; });
  const SearchResult r = run_search(c, {}, flat);
  EXPECT_EQ(r.rounds.size(), 3u);
  EXPECT_TRUE(r.stopped_early);
  for (const auto& round : r.rounds) EXPECT_EQ(round.winner.y, 0.0);

  c.metric_mode = MetricMode::kPaperLiteral;
  c.max_rounds = 5;
  EXPECT_EQ(run_search(c, {}, flat).rounds.size(), 5u);
}

TEST(Search, ExternalStubMatchesSyntheticEvaluator) {
  SearchConfig c = small_config(3);
  c.max_rounds = 2;
  const SearchResult local = run_search(c);
  c.evaluator = "external";
  c.trainer.command = {GROWTRIM_STUB_TRAINER, "synthetic"};
  const SearchResult ext = run_search(c);
  EXPECT_EQ(winner_hashes(local), winner_hashes(ext));
  for (std::size_t i = 0; i < local.rounds.size(); ++i) {
    EXPECT_EQ(local.rounds[i].winner.y, ext.rounds[i].winner.y);
  }
}

TEST_F(TempDir, CheckpointRestoreMatchesUninterruptedRun) {
  SearchConfig c = small_config(5);
  c.max_rounds = 4;
  SearchEngine full(c, std::make_shared<SyntheticEvaluator>());
  std::vector<std::uint64_t> straight;
  while (!full.finished()) straight.push_back(full.run_round().winner.hash);

  SearchEngine first(c, std::make_shared<SyntheticEvaluator>());
  std::vector<std::uint64_t> resumed;
  resumed.push_back(first.run_round().winner.hash);
  resumed.push_back(first.run_round().winner.hash);
  first.checkpoint(dir_ / "state.json");
  SearchEngine second =
      SearchEngine::restore(c, std::make_shared<SyntheticEvaluator>(), dir_ / "state.json");
  EXPECT_EQ(second.state().rounds_completed, 2);
  while (!second.finished()) resumed.push_back(second.run_round().winner.hash);
  EXPECT_EQ(resumed, straight);
  EXPECT_EQ(second.state_to_json(), full.state_to_json());
}

TEST_F(TempDir, RunSearchWritesLayoutAndResumes) {
  SearchConfig c = small_config(6);
  c.max_rounds = 4;
  const SearchResult straight = run_search(c);

  c.max_rounds = 2;
  const SearchResult part = run_search(c, dir_);
  EXPECT_EQ(part.rounds.size(), 2u);
  for (const char* f : {"state.json", "best_arch.json", "search_log.txt",
                        "rounds/round_001.json", "rounds/round_002.json",
                        "controller/ckpt_002.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
  c.max_rounds = 4;
  const SearchResult rest = run_search(c, dir_, nullptr, true);
  EXPECT_EQ(rest.rounds.size(), 2u);
  EXPECT_EQ(rest.rounds[0].round, 3);
  EXPECT_EQ(winner_hashes(rest), winner_hashes(straight));
  EXPECT_EQ(load_arch(dir_ / "best_arch.json"), straight.best);
  const nlohmann::json round = nlohmann::json::parse(std::ifstream(dir_ / "rounds/round_004.json"));
  EXPECT_EQ(round["round"], 4);
  EXPECT_EQ(round["evaluated"].size(), 20u);
  std::ifstream log(dir_ / "search_log.txt");
  int lines = 0;
  for (std::string line; std::getline(log, line);) ++lines;
  EXPECT_EQ(lines, 5);  // base + 4 rounds

  // A fresh run clears earlier round files.
  c.max_rounds = 1;
  run_search(c, dir_);
  EXPECT_FALSE(fs::exists(dir_ / "rounds/round_002.json"));
}

TEST_F(TempDir, CorruptStateIsRejected) {
  SearchConfig c = small_config();
  c.max_rounds = 1;
  run_search(c, dir_);
  const fs::path state = dir_ / "state.json";
  const nlohmann::json good = nlohmann::json::parse(std::ifstream(state));
  auto evaluator = std::make_shared<SyntheticEvaluator>();
  auto write = [&](const std::string& text) {
    std::ofstream out(dir_ / "bad.json", std::ios::trunc);
    out << text;
  };
  const std::string text = good.dump();
  write(text.substr(0, text.size() / 2));
  EXPECT_THROW(SearchEngine::restore(c, evaluator, dir_ / "bad.json"), CorruptCheckpoint);

  nlohmann::json j = good;
  j["version"] = kStateVersion + 1;
  write(j.dump());
  EXPECT_THROW(SearchEngine::restore(c, evaluator, dir_ / "bad.json"), CorruptCheckpoint);

  j = good;
  j["payload"]["rounds_completed"] = 7;
  write(j.dump());
  EXPECT_THROW(SearchEngine::restore(c, evaluator, dir_ / "bad.json"), CorruptCheckpoint);

  SearchConfig wider = c;
  wider.controller.d_h = 9;
  EXPECT_THROW(SearchEngine::restore(wider, evaluator, state), InvalidArgument);
  EXPECT_THROW(SearchEngine::restore(c, evaluator, dir_ / "missing.json"), Error);
  EXPECT_NO_THROW(SearchEngine::restore(c, evaluator, state));
}

TEST(SearchConfig, JsonRoundTripAndValidation) {
  SearchConfig c = small_config(9);
  c.lambda = 0.25;
  c.metric_mode = MetricMode::kPaperLiteral;
  c.trainer.command = {"python3", "-m", "trainer"};
  c.init_arch = make_initial_arch();
  const nlohmann::json j = search_config_to_json(c);
  const SearchConfig back = search_config_from_json(j);
  EXPECT_EQ(search_config_to_json(back), j);
  EXPECT_EQ(back.lambda, 0.25);
  EXPECT_EQ(back.metric_mode, MetricMode::kPaperLiteral);
  EXPECT_EQ(back.trainer.command, c.trainer.command);
  EXPECT_EQ(back.init_arch, c.init_arch);

  nlohmann::json unknown = j;
  unknown["lamda"] = 0.3;
  EXPECT_THROW(search_config_from_json(unknown), FormatError);
  nlohmann::json cmd = nlohmann::json::object();
  cmd["trainer"] = {{"command", "python3 'my trainer.py'"}};
  EXPECT_EQ(search_config_from_json(cmd).trainer.command,
            (std::vector<std::string>{"python3", "my trainer.py"}));
  EXPECT_EQ(search_config_from_json(nlohmann::json::object()).k, 100);

  SearchConfig bad = small_config();
  bad.lambda = 1.5;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = small_config();
  bad.evaluator = "external";
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = small_config();
  bad.k = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  EXPECT_NO_THROW(small_config().validate());
}

}  // namespace
}  // namespace growtrim
