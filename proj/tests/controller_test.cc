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

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "growtrim/candidates.h"
#include "growtrim/controller.h"
#include "growtrim/errors.h"
#include "test_util.h"

namespace growtrim {
namespace {

constexpr ControllerKind kKinds[] = {ControllerKind::kScc, ControllerKind::kSingleRnn,
                                     ControllerKind::kDoubleRnn};

std::vector<NetworkArch> sample_archs(std::uint64_t seed, std::size_t n) {
  const auto cands = generate_candidates(testing::random_base(seed, 3, 2));
  Rng rng(seed);
  std::vector<NetworkArch> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(cands[static_cast<std::size_t>(rng.below(cands.size()))].arch);
  }
  return out;
}

bool same_params(ControllerParams a, ControllerParams b) {
  auto ta = tensors(a);
  auto tb = tensors(b);
  if (ta.size() != tb.size()) return false;
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (ta[k].name != tb[k].name || ta[k].rows != tb[k].rows || ta[k].cols != tb[k].cols) {
      return false;
    }
    for (Eigen::Index i = 0; i < ta[k].rows * ta[k].cols; ++i) {
      if (ta[k].data[i] != tb[k].data[i]) return false;
    }
  }
  return a.kind == b.kind && a.vocab == b.vocab;
}

TEST(Tokens, TwoCellBlock) {
  TemplateOptions options;
  options.num_blocks = 1;
  options.strides = {1};
  NetworkArch arch = make_initial_arch(options);
  arch.blocks[0].cells = {
      {0, 0, OpKind::kDepthwiseConv3x3, OpKind::kFactorized1x7_7x1, CombineSpec::from_code(0b001)},
      {1, 0, OpKind::kConv3x3, OpKind::kConv3x3, CombineSpec::from_code(0b110)}};
  const std::vector<int> tokens = tokenize(arch, Vocabulary{});
  EXPECT_EQ(tokens, (std::vector<int>{0, 15, 15, 4, 6, 11, 2, 16, 15, 3, 3, 14, 2}));
  EXPECT_EQ(Vocabulary{}.size(), 31);
}

TEST(Tokens, StrideTwoAndOverflow) {
  NetworkArch arch = make_initial_arch();
  const auto tokens = tokenize(arch, Vocabulary{});
  EXPECT_EQ(tokens.size(), 5u * 7u);
  EXPECT_EQ(tokens[7], Vocabulary::kBlockStride2);
  Vocabulary tiny;
  tiny.max_context = 1;
  arch.blocks[0].cells[0].input2 = 0;
  arch = apply_grow(arch, {Cell{1, 0, OpKind::kConv3x3, OpKind::kConv3x3,
                                CombineSpec::from_code(0b101)}});
  EXPECT_THROW(tokenize(arch, tiny), VocabularyOverflow);
}

TEST(Params, ShapesAndCounts) {
  const int v = Vocabulary{}.size();
  for (ControllerKind kind : kKinds) {
    const ControllerParams p = ControllerParams::zeros(kind, 5, 3);
    EXPECT_TRUE(p.consistent());
    const std::size_t gru = 3 * 3 * (5 + 3 + 2);
    const std::size_t second = kind == ControllerKind::kSingleRnn ? 0 : 3 * 3 * (3 + 3 + 2);
    EXPECT_EQ(parameter_count(p), static_cast<std::size_t>(v) * 5 + gru + second + 3 + 1);
    EXPECT_EQ(controller_kind_from_name(controller_kind_name(kind)), kind);
  }
  ControllerParams bad = ControllerParams::zeros(ControllerKind::kScc, 5, 3);
  bad.head_w.resize(4);
  EXPECT_FALSE(bad.consistent());
}

TEST(Params, RandomRespectsRangeAndSeed) {
  ControllerParams a = ControllerParams::random(ControllerKind::kScc, 6, 6, 9, 0.08);
  const ControllerParams b = ControllerParams::random(ControllerKind::kScc, 6, 6, 9, 0.08);
  const ControllerParams c = ControllerParams::random(ControllerKind::kScc, 6, 6, 10, 0.08);
  EXPECT_TRUE(same_params(a, b));
  EXPECT_FALSE(same_params(a, c));
  for (const auto& t : tensors(a)) {
    for (Eigen::Index i = 0; i < t.rows * t.cols; ++i) {
      EXPECT_LE(std::abs(t.data[i]), 0.08);
    }
  }
}

TEST(Forward, ZeroWeightsGiveZeroFeaturesAndScores) {
  const auto archs = sample_archs(1, 5);
  for (ControllerKind kind : kKinds) {
    const ControllerParams p = ControllerParams::zeros(kind, 4, 4);
    for (double s : predict_scores(p, archs)) EXPECT_EQ(s, 0.0);
    EXPECT_TRUE(encode(p, archs[0]).isZero());
  }
}

TEST(Forward, FeaturesAreBounded) {
  const auto archs = sample_archs(2, 20);
  const ControllerParams p = ControllerParams::random(ControllerKind::kScc, 8, 8, 3, 3.0);
  const Eigen::MatrixXd f = encode_all(p, archs);
  ASSERT_EQ(f.cols(), 20);
  ASSERT_EQ(f.rows(), 8);
  EXPECT_LE(f.cwiseAbs().maxCoeff(), 1.0);
  for (Eigen::Index i = 0; i < f.cols(); ++i) {
    EXPECT_TRUE(f.col(i).isApprox(encode(p, archs[static_cast<std::size_t>(i)])));
  }
}

TEST(Forward, RankerSeesOrderBaselinesDoNot) {
  auto archs = sample_archs(3, 6);
  const ControllerParams scc = ControllerParams::random(ControllerKind::kScc, 6, 6, 4, 0.5);
  const auto forward = rank(scc, archs);
  std::vector<NetworkArch> reversed(archs.rbegin(), archs.rend());
  const auto backward = rank(scc, reversed);
  // The first candidate's score depends on what precedes it.
  EXPECT_NE(forward[0], backward[archs.size() - 1]);
  // With a reset after every candidate the context disappears.
  const auto single = rank(scc, archs, 1);
  for (std::size_t i = 0; i < archs.size(); ++i) {
    EXPECT_DOUBLE_EQ(single[i], rank(scc, {archs[i]})[0]);
  }

  for (ControllerKind kind : {ControllerKind::kSingleRnn, ControllerKind::kDoubleRnn}) {
    const ControllerParams p = ControllerParams::random(kind, 6, 6, 4, 0.5);
    const auto a = predict_scores(p, archs);
    const auto b = predict_scores(p, reversed);
    for (std::size_t i = 0; i < archs.size(); ++i) {
      EXPECT_DOUBLE_EQ(a[i], b[archs.size() - 1 - i]);
      EXPECT_DOUBLE_EQ(a[i], baseline_score(p, archs[i]));
    }
    EXPECT_THROW(rank(p, archs), InvalidArgument);
  }
  EXPECT_THROW(rank(scc, {}), InvalidArgument);
}

TEST(Forward, CanonicalRankingIgnoresInputOrder) {
  auto archs = sample_archs(5, 9);
  const ControllerParams p = ControllerParams::random(ControllerKind::kScc, 6, 6, 4, 0.5);
  const auto a = rank_canonical(p, archs);
  std::vector<NetworkArch> reversed(archs.rbegin(), archs.rend());
  const auto b = rank_canonical(p, reversed);
  for (std::size_t i = 0; i < archs.size(); ++i) {
    EXPECT_DOUBLE_EQ(a[i], b[archs.size() - 1 - i]);
  }
  EXPECT_EQ(predict_scores(p, archs), a);
}

TEST(Gradients, MatchFiniteDifferences) {
  for (ControllerKind kind : kKinds) {
    for (std::uint64_t seed : {1u, 2u}) {
      const testing::GradCheck g = testing::grad_check(kind, 4, seed);
      EXPECT_LT(g.worst, 1e-4) << controller_kind_name(kind) << " " << g.worst_tensor;
      EXPECT_GT(g.checked, 0u);
    }
  }
}

TEST(Gradients, AccumulateIntoGrad) {
  const auto archs = sample_archs(6, 3);
  const std::vector<double> y = {0.1, -0.2, 0.3};
  const ControllerParams p = ControllerParams::random(ControllerKind::kDoubleRnn, 4, 4, 1, 0.5);
  ControllerParams once = ControllerParams::zeros(ControllerKind::kDoubleRnn, 4, 4);
  ControllerParams twice = once;
  set_loss(p, archs, y, &once);
  set_loss(p, archs, y, &twice);
  set_loss(p, archs, y, &twice);
  EXPECT_TRUE(twice.head_w.isApprox(2.0 * once.head_w));
  EXPECT_TRUE(twice.embedding.isApprox(2.0 * once.embedding));
}

std::vector<TrainingExample> examples(std::uint64_t seed, std::size_t n) {
  std::vector<TrainingExample> out;
  Rng rng(seed);
  for (auto& a : sample_archs(seed, n)) out.push_back({a, rng.uniform(-0.5, 0.5)});
  return out;
}

TEST(Train, ZeroLearningRateLeavesParamsUnchanged) {
  const ControllerParams p = ControllerParams::random(ControllerKind::kScc, 4, 4, 2);
  TrainConfig config;
  config.lr = 0.0;
  config.epochs = 3;
  config.set_size = 1;
  const TrainResult r = train(p, examples(1, 6), config);
  EXPECT_TRUE(same_params(r.params, p));
  EXPECT_EQ(r.loss_trace.size(), 3u);
}

TEST(Train, FitsConstantTargets) {
  for (ControllerKind kind : kKinds) {
    const ControllerParams p = ControllerParams::random(kind, 8, 8, 3);
    auto batch = examples(2, 12);
    for (auto& ex : batch) ex.target = 0.3;
    TrainConfig config;
    config.lr = 0.05;
    config.epochs = 60;
    config.set_size = 4;
    const TrainResult r = train(p, batch, config);
    EXPECT_LT(r.loss_trace.back(), 1e-3) << controller_kind_name(kind);
    EXPECT_LT(r.loss_trace.back(), r.loss_trace.front());
    for (double s : predict_scores(r.params, {batch[0].arch}, 4)) EXPECT_NEAR(s, 0.3, 0.05);
  }
}

TEST(Train, DeterministicAndResumable) {
  const ControllerParams p = ControllerParams::random(ControllerKind::kScc, 6, 6, 5);
  const auto batch = examples(3, 10);
  TrainConfig config;
  config.lr = 0.05;
  config.epochs = 4;
  config.set_size = 3;
  config.seed = 11;
  const TrainResult a = train(p, batch, config);
  const TrainResult b = train(p, batch, config);
  EXPECT_TRUE(same_params(a.params, b.params));
  EXPECT_TRUE(same_params(a.velocity, b.velocity));
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  const TrainResult resumed = train(a.params, batch, config, &a.velocity);
  const TrainResult fresh = train(a.params, batch, config);
  EXPECT_FALSE(same_params(resumed.params, fresh.params));
}

TEST(Train, RejectsBadInputs) {
  const ControllerParams p = ControllerParams::random(ControllerKind::kScc, 4, 4, 5);
  TrainConfig config;
  EXPECT_THROW(train(p, {}, config), InvalidArgument);
  config.set_size = 0;
  EXPECT_THROW(train(p, examples(1, 3), config), InvalidArgument);
  config.set_size = 2;
  auto batch = examples(1, 3);
  batch[1].target = std::nan("");
  EXPECT_THROW(train(p, batch, config), InvalidArgument);
}

TEST(Train, DivergenceIsReported) {
  const ControllerParams p = ControllerParams::random(ControllerKind::kSingleRnn, 4, 4, 5);
  auto batch = examples(4, 8);
  for (auto& ex : batch) ex.target *= 1e200;
  TrainConfig config;
  config.lr = 1e10;
  config.epochs = 5;
  EXPECT_THROW(train(p, batch, config), NonFiniteLoss);
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("growtrim_ckpt_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(CheckpointTest, RoundTripIsExact) {
  for (ControllerKind kind : kKinds) {
    const ControllerParams p = ControllerParams::random(kind, 5, 7, 8);
    EXPECT_TRUE(same_params(controller_from_json(controller_to_json(p)), p));
    const auto path = dir_ / "c.json";
    save_controller(p, path);
    const ControllerParams q = load_controller(path);
    EXPECT_TRUE(same_params(q, p));
    const auto archs = sample_archs(9, 4);
    EXPECT_EQ(predict_scores(q, archs), predict_scores(p, archs));
  }
}

TEST_F(CheckpointTest, CorruptionIsDetected) {
  const ControllerParams p = ControllerParams::random(ControllerKind::kScc, 3, 3, 8);
  nlohmann::json j = controller_to_json(p);
  nlohmann::json bad = j;
  bad["format"] = "other";
  EXPECT_THROW(controller_from_json(bad), CorruptCheckpoint);
  bad = j;
  bad["version"] = kCheckpointVersion + 1;
  EXPECT_THROW(controller_from_json(bad), CorruptCheckpoint);
  bad = j;
  bad["d_h"] = 4;
  EXPECT_THROW(controller_from_json(bad), CorruptCheckpoint);
  EXPECT_THROW(controller_from_json(nlohmann::json::array()), CorruptCheckpoint);

  const auto path = dir_ / "t.json";
  save_controller(p, path);
  std::string text;
  {
    std::ifstream in(path);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  {
    std::ofstream out(path, std::ios::trunc);
    out << text.substr(0, text.size() / 2);
  }
  EXPECT_THROW(load_controller(path), CorruptCheckpoint);
  EXPECT_THROW(load_controller(dir_ / "missing.json"), Error);
}

}  // namespace
}  // namespace growtrim
