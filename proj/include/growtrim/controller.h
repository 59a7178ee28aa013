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

// Structure correlation controller and the two absolute-score baselines.
//
// A candidate is flattened into a token sequence, embedded, and run through
// a gated recurrent encoder whose final hidden state is the candidate's
// feature. The SCC feeds the features of a whole candidate set, one per
// step, through a second recurrent layer (the ranker) and reads a score from
// a dense head after each step, so each score depends on the candidates seen
// before it. The baselines score every candidate on its own: SingleRNN puts
// the head on the encoder feature, DoubleRNN stacks a second recurrent layer
// over the encoder's hidden sequence first.
//
// All recurrent layers use the update
//   r  = sigmoid(Wx_r x + bx_r + Wh_r h + bh_r)
//   z  = sigmoid(Wx_z x + bx_z + Wh_z h + bh_z)
//   n  = tanh(Wx_n x + bx_n + r * (Wh_n h + bh_n))
//   h' = (1 - z) * n + z * h
// with gate rows stacked as [r; z; n] and h0 = 0.

#ifndef GROWTRIM_CONTROLLER_H_
#define GROWTRIM_CONTROLLER_H_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "growtrim/arch.h"
#include "json.hpp"

namespace growtrim {

enum class ControllerKind { kScc, kSingleRnn, kDoubleRnn };

std::string_view controller_kind_name(ControllerKind kind);
ControllerKind controller_kind_from_name(std::string_view name);

// Token layout: block-start tokens (one per stride), a cell terminator, the
// eight op kinds, the four combine codes, then one token per input slot.
struct Vocabulary {
  static constexpr int kBlockStride1 = 0;
  static constexpr int kBlockStride2 = 1;
  static constexpr int kCellEnd = 2;
  static constexpr int kOpBase = 3;
  static constexpr int kCodeBase = kOpBase + kNumOpKinds;
  static constexpr int kSlotBase = kCodeBase + 4;

  int max_context = 16;

  int size() const { return kSlotBase + max_context; }
  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

// Blocks in order; per block a stride token, then per cell the five field
// tokens (I1, I2, L1, L2, O) and a cell terminator.
// Throws VocabularyOverflow when an input slot exceeds the vocabulary.
std::vector<int> tokenize(const NetworkArch& arch, const Vocabulary& vocab);

struct GruParams {
  Eigen::MatrixXd w_x;  // 3H x D
  Eigen::MatrixXd w_h;  // 3H x H
  Eigen::VectorXd b_x;  // 3H
  Eigen::VectorXd b_h;  // 3H

  Eigen::Index hidden() const { return w_h.cols(); }
  Eigen::Index input() const { return w_x.cols(); }
  bool empty() const { return w_h.size() == 0; }
  static GruParams zeros(Eigen::Index input, Eigen::Index hidden);
};

struct ControllerParams {
  ControllerKind kind = ControllerKind::kScc;
  int d_emb = 100;
  int d_h = 100;
  Vocabulary vocab;
  Eigen::MatrixXd embedding;  // vocab.size() x d_emb
  GruParams encoder;
  // Ranker for the SCC, second stacked layer for DoubleRNN, empty otherwise.
  GruParams second;
  Eigen::VectorXd head_w;  // d_h
  Eigen::VectorXd head_b;  // 1

  static ControllerParams zeros(ControllerKind kind, int d_emb, int d_h,
                                const Vocabulary& vocab = {});
  // Every learned value uniform in [-range, range].
  static ControllerParams random(ControllerKind kind, int d_emb, int d_h,
                                 std::uint64_t seed, double range = 0.08,
                                 const Vocabulary& vocab = {});

  // True when every tensor has the shape implied by kind/d_emb/d_h/vocab.
  bool consistent() const;
  bool all_finite() const;
};

struct TensorView {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  double* data;
};

// Learned tensors in a fixed order with stable names.
std::vector<TensorView> tensors(ControllerParams& params);
std::size_t parameter_count(const ControllerParams& params);

// Feature of one candidate (d_h values).
Eigen::VectorXd encode(const ControllerParams& params, const NetworkArch& arch);
// Features of many candidates, one column each.
Eigen::MatrixXd encode_all(const ControllerParams& params,
                           const std::vector<NetworkArch>& archs);

// SCC scores for a candidate set in the given order. With set_size > 0 the
// ranker state is reset every set_size candidates, as in training.
std::vector<double> rank(const ControllerParams& params,
                         const std::vector<NetworkArch>& candidates,
                         int set_size = 0);
// Sorts into canonical order, ranks, and returns scores in input order.
std::vector<double> rank_canonical(const ControllerParams& params,
                                   const std::vector<NetworkArch>& candidates,
                                   int set_size = 0);

// Absolute score of a baseline controller.
double baseline_score(const ControllerParams& params, const NetworkArch& arch);

// Scores for any controller kind: the SCC ranks canonically, baselines score
// each candidate independently.
std::vector<double> predict_scores(const ControllerParams& params,
                                   const std::vector<NetworkArch>& candidates,
                                   int set_size = 0);

struct TrainingExample {
  NetworkArch arch;
  double target = 0.0;
};

struct TrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  int epochs = 50;
  // Candidates per set. The SCC ranker state resets at every set.
  int set_size = 32;
  std::uint64_t seed = 0;
  bool standardize_targets = false;
  // Global gradient-norm clip per step; 0 disables.
  double clip_norm = 0.0;
};

struct TrainResult {
  ControllerParams params;
  ControllerParams velocity;
  std::vector<double> loss_trace;  // mean squared error per epoch
};

// Mean squared error of one candidate set. When `grad` is non-null it must
// have the shapes of `params`; the gradient is added to it.
double set_loss(const ControllerParams& params,
                const std::vector<NetworkArch>& archs,
                const std::vector<double>& targets,
                ControllerParams* grad = nullptr);

// SGD with momentum on the set loss. `velocity` resumes optimizer state when
// given. Throws NonFiniteLoss if the loss diverges.
TrainResult train(const ControllerParams& params,
                  const std::vector<TrainingExample>& batch,
                  const TrainConfig& config,
                  const ControllerParams* velocity = nullptr);

inline constexpr int kCheckpointVersion = 1;

nlohmann::json controller_to_json(const ControllerParams& params);
ControllerParams controller_from_json(const nlohmann::json& j);  // CorruptCheckpoint
void save_controller(const ControllerParams& params,
                     const std::filesystem::path& path);
ControllerParams load_controller(const std::filesystem::path& path);

}  // namespace growtrim

#endif  // GROWTRIM_CONTROLLER_H_
