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

#include <cstdlib>
#include <set>

#include "growtrim/errors.h"
#include "growtrim/evaluator.h"
#include "growtrim/memory.h"
#include "test_util.h"

#ifndef GROWTRIM_STUB_TRAINER
#define GROWTRIM_STUB_TRAINER "stub_trainer"
#endif

namespace growtrim {
namespace {

std::vector<EvalRequest> requests(std::size_t n, std::uint64_t seed = 0) {
  const auto cands = generate_candidates(make_initial_arch());
  std::vector<EvalRequest> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"c" + std::to_string(i), cands[i % cands.size()].arch, seed + i, 3});
  }
  return out;
}

TrainerSpec stub(std::vector<std::string> args, double timeout = 20.0) {
  TrainerSpec spec;
  spec.command = {GROWTRIM_STUB_TRAINER};
  for (auto& a : args) spec.command.push_back(std::move(a));
  spec.timeout_seconds = timeout;
  return spec;
}

TEST(Synthetic, DeterministicBoundedAndSeeded) {
  const NetworkArch arch = make_initial_arch();
  const double a = synthetic_accuracy(arch, 1);
  EXPECT_EQ(a, synthetic_accuracy(arch, 1));
  EXPECT_NE(a, synthetic_accuracy(arch, 2));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const double v = synthetic_accuracy(testing::random_base(seed), seed);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Synthetic, NoiselessClosedForm) {
  SyntheticConfig c;
  c.sigma = 0.0;
  const NetworkArch arch = make_initial_arch();
  // 368640 cell weights, no pooling
  const double expected = 0.10 + 0.85 * (1.0 - std::exp(-1.5 * 0.36864));
  EXPECT_NEAR(synthetic_accuracy(arch, 0, c), expected, 1e-12);
  EXPECT_EQ(synthetic_accuracy(arch, 0, c), synthetic_accuracy(arch, 99, c));

  NetworkArch pooled = arch;
  for (Block& b : pooled.blocks) b.cells[0].op2 = OpKind::kMaxPool3x3;
  const double p = static_cast<double>(cell_param_count(pooled)) / 1e6;
  EXPECT_NEAR(synthetic_accuracy(pooled, 0, c),
              0.10 + 0.85 * (1.0 - std::exp(-1.5 * p)) * (1.0 - 0.3 * 0.5), 1e-12);
}

TEST(Synthetic, MonotoneInWeightsWithoutNoise) {
  SyntheticConfig c;
  c.sigma = 0.0;
  const NetworkArch base = make_initial_arch();
  const double a0 = synthetic_accuracy(base, 0, c);
  for (const Candidate& g : grow_candidates(base)) {
    const OpCensus census = op_census(g.arch);
    if (census.pooling_or_identity == 0) EXPECT_GT(synthetic_accuracy(g.arch, 0, c), a0);
  }
}

TEST(Synthetic, EvaluatorsKeepOrder) {
  const auto reqs = requests(6);
  SyntheticEvaluator synthetic;
  const auto res = synthetic.evaluate(reqs);
  ASSERT_EQ(res.size(), 6u);
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    EXPECT_EQ(res[i].id, reqs[i].id);
    EXPECT_TRUE(res[i].ok());
    EXPECT_EQ(res[i].accuracy, synthetic_accuracy(reqs[i].arch, reqs[i].seed));
  }
  FunctionEvaluator fn([](const EvalRequest& r) { return static_cast<double>(r.seed) / 10; });
  const auto f = fn.evaluate(reqs);
  EXPECT_DOUBLE_EQ(f[3].accuracy, 0.3);
  EXPECT_EQ(fn.name(), "function");
}

TEST(Protocol, SplitCommand) {
  EXPECT_EQ(split_command("python3 -m trainer --data 'a b' \"c\\\"d\" e\\ f"),
            (std::vector<std::string>{"python3", "-m", "trainer", "--data", "a b", "c\"d", "e f"}));
  EXPECT_EQ(split_command("  "), std::vector<std::string>{});
  EXPECT_EQ(split_command("x ''"), (std::vector<std::string>{"x", ""}));
  EXPECT_THROW(split_command("x 'y"), InvalidArgument);
}

TEST(Protocol, RequestShape) {
  const auto r = requests(1, 7)[0];
  const nlohmann::json j = request_to_json(r);
  EXPECT_EQ(j["id"], "c0");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["epochs"], 3);
  EXPECT_TRUE(j["arch"].is_object());
  EXPECT_EQ(j.size(), 4u);
}

TEST(External, SyntheticStubMatchesInProcessOracle) {
  const auto reqs = requests(12, 5);
  const auto ext = external_evaluate(reqs, stub({"synthetic"}));
  const auto local = SyntheticEvaluator().evaluate(reqs);
  ASSERT_EQ(ext.size(), reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    EXPECT_EQ(ext[i].id, reqs[i].id);
    ASSERT_TRUE(ext[i].ok()) << ext[i].message;
    EXPECT_DOUBLE_EQ(ext[i].accuracy, local[i].accuracy);
    EXPECT_TRUE(ext[i].wall_time.has_value());
  }
}

TEST(External, OutOfOrderRepliesAreMatchedById) {
  auto reqs = requests(5);
  const auto res = external_evaluate(reqs, stub({"reverse"}));
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    EXPECT_EQ(res[i].id, reqs[i].id);
    EXPECT_TRUE(res[i].ok());
  }
}

TEST(External, NoiseIsIgnored) {
  const auto res = external_evaluate(requests(4), stub({"noise"}));
  for (const auto& r : res) {
    EXPECT_TRUE(r.ok());
    EXPECT_EQ(r.accuracy, 0.5);
  }
}

TEST(External, TrainerErrors) {
  const auto res = external_evaluate(requests(3), stub({"error"}));
  for (const auto& r : res) {
    EXPECT_EQ(r.status, EvalStatus::kTrainerError);
    EXPECT_EQ(r.message, "out of memory");
  }
}

TEST(External, MalformedReplies) {
  const auto res = external_evaluate(requests(5), stub({"bad-accuracy"}));
  EXPECT_EQ(res[0].status, EvalStatus::kMalformedResponse);
  EXPECT_EQ(res[1].status, EvalStatus::kMalformedResponse);
  EXPECT_EQ(res[2].status, EvalStatus::kMalformedResponse);
  EXPECT_TRUE(res[3].ok());
  EXPECT_EQ(res[3].accuracy, 0.25);
  EXPECT_TRUE(res[4].ok());

  const auto garbage = external_evaluate(requests(3), stub({"garbage-first"}));
  EXPECT_EQ(garbage[0].status, EvalStatus::kMalformedResponse);
  EXPECT_TRUE(garbage[1].ok());
  EXPECT_TRUE(garbage[2].ok());
}

TEST(External, EarlyExitFailsOutstanding) {
  const auto res = external_evaluate(requests(5), stub({"die-after", "2"}));
  EXPECT_TRUE(res[0].ok());
  EXPECT_TRUE(res[1].ok());
  for (std::size_t i = 2; i < 5; ++i) {
    EXPECT_EQ(res[i].status, EvalStatus::kTrainerUnreachable);
  }
}

TEST(External, TimeoutKillsAndRestarts) {
  const auto res = external_evaluate(requests(4), stub({"hang-on", "c1"}, 1.0));
  EXPECT_TRUE(res[0].ok());
  EXPECT_EQ(res[1].status, EvalStatus::kTimeout);
  EXPECT_TRUE(res[2].ok());
  EXPECT_TRUE(res[3].ok());
}

TEST(External, MissingBinaryIsUnreachable) {
  TrainerSpec spec;
  spec.command = {"/nonexistent/trainer-binary"};
  const auto res = external_evaluate(requests(2), spec);
  for (const auto& r : res) EXPECT_EQ(r.status, EvalStatus::kTrainerUnreachable);
}

TEST(External, ParallelWorkersUseSeparateProcesses) {
  TrainerSpec spec = stub({"synthetic"});
  spec.parallelism = 3;
  const auto reqs = requests(9, 1);
  const auto res = external_evaluate(reqs, spec);
  std::set<double> pids;
  const auto local = SyntheticEvaluator().evaluate(reqs);
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    ASSERT_TRUE(res[i].ok());
    EXPECT_EQ(res[i].id, reqs[i].id);
    EXPECT_DOUBLE_EQ(res[i].accuracy, local[i].accuracy);
    pids.insert(*res[i].wall_time);
  }
  EXPECT_EQ(pids.size(), 3u);
}

TEST(External, RejectsBadInput) {
  auto reqs = requests(2);
  reqs[1].id = reqs[0].id;
  EXPECT_THROW(external_evaluate(reqs, stub({"synthetic"})), InvalidArgument);
  EXPECT_THROW(external_evaluate(requests(1), TrainerSpec{}), InvalidArgument);
  EXPECT_TRUE(external_evaluate({}, stub({"synthetic"})).empty());
  TrainerSpec zero = stub({"synthetic"});
  zero.timeout_seconds = 0;
  EXPECT_THROW(external_evaluate(requests(1), zero), InvalidArgument);
}

TEST(External, StatusNames) {
  EXPECT_EQ(eval_status_name(EvalStatus::kOk), "ok");
  EXPECT_EQ(eval_status_name(EvalStatus::kTimeout), "timeout");
  EXPECT_EQ(eval_status_name(EvalStatus::kTrainerUnreachable), "trainer_unreachable");
}

}  // namespace
}  // namespace growtrim
