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

#include "growtrim/controller.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "growtrim/arch_json.h"
#include "growtrim/candidates.h"
#include "growtrim/errors.h"
#include "growtrim/rng.h"

namespace growtrim {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

using TokenSeqs = std::vector<std::vector<int>>;

constexpr Index kInferenceChunk = 128;

struct StepCache {
  MatrixXd h_prev;
  ArrayXXd r;
  ArrayXXd z;
  ArrayXXd n;
  ArrayXXd gh_n;
};

struct LayerTrace {
  std::vector<StepCache> steps;
  std::vector<MatrixXd> outputs;  // hidden state after each step
};

ArrayXXd sigmoid(const ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

// Sequences are left-padded to a common length; column b starts at step
// steps - len(b). Inactive columns keep h = h_prev by forcing z = 1.
struct Padding {
  Index steps = 0;
  std::vector<Index> start;

  explicit Padding(const TokenSeqs& seqs, Index begin = 0, Index end = -1) {
    if (end < 0) end = static_cast<Index>(seqs.size());
    for (Index b = begin; b < end; ++b) {
      steps = std::max<Index>(steps, static_cast<Index>(seqs[b].size()));
    }
    for (Index b = begin; b < end; ++b) {
      start.push_back(steps - static_cast<Index>(seqs[b].size()));
    }
  }
  bool active(Index t, Index b) const { return t >= start[b]; }
  bool all_active(Index t) const {
    return std::all_of(start.begin(), start.end(),
                       [t](Index s) { return t >= s; });
  }
};

MatrixXd gru_step(const GruParams& g, const MatrixXd& gx, const MatrixXd& h_prev,
                  const Padding* padding, Index t, StepCache* cache) {
  const Index H = g.hidden();
  MatrixXd gh = g.w_h * h_prev;
  gh.colwise() += g.b_h;
  ArrayXXd r = sigmoid(gx.topRows(H).array() + gh.topRows(H).array());
  ArrayXXd z = sigmoid(gx.middleRows(H, H).array() + gh.middleRows(H, H).array());
  ArrayXXd gh_n = gh.bottomRows(H).array();
  ArrayXXd n = (gx.bottomRows(H).array() + r * gh_n).tanh();
  if (padding != nullptr && !padding->all_active(t)) {
    for (Index b = 0; b < z.cols(); ++b) {
      if (!padding->active(t, b)) z.col(b).setOnes();
    }
  }
  MatrixXd h = ((1.0 - z) * n + z * h_prev.array()).matrix();
  if (cache != nullptr) {
    cache->h_prev = h_prev;
    cache->r = std::move(r);
    cache->z = std::move(z);
    cache->n = std::move(n);
    cache->gh_n = std::move(gh_n);
  }
  return h;
}

// Backpropagates dh through one step. Writes the gradient of the input-side
// pre-activations to `dgx`, accumulates hidden-side weights into `grad`, and
// returns the gradient with respect to h_prev.
MatrixXd gru_step_backward(const GruParams& g, const StepCache& c,
                           const MatrixXd& dh, MatrixXd& dgx, GruParams& grad) {
  const Index H = g.hidden();
  const ArrayXXd dha = dh.array();
  const ArrayXXd dn = dha * (1.0 - c.z);
  const ArrayXXd dz = dha * (c.h_prev.array() - c.n);
  const ArrayXXd dan = dn * (1.0 - c.n * c.n);
  const ArrayXXd dar = dan * c.gh_n * c.r * (1.0 - c.r);
  const ArrayXXd daz = dz * c.z * (1.0 - c.z);

  dgx.resize(3 * H, dh.cols());
  dgx.topRows(H) = dar.matrix();
  dgx.middleRows(H, H) = daz.matrix();
  dgx.bottomRows(H) = dan.matrix();

  MatrixXd dgh(3 * H, dh.cols());
  dgh.topRows(H) = dar.matrix();
  dgh.middleRows(H, H) = daz.matrix();
  dgh.bottomRows(H) = (dan * c.r).matrix();

  grad.w_h.noalias() += dgh * c.h_prev.transpose();
  grad.b_h += dgh.rowwise().sum();
  MatrixXd dh_prev = g.w_h.transpose() * dgh;
  dh_prev.array() += dha * c.z;
  return dh_prev;
}

// Input projections of every token: column v is Wx * E[v] + bx.
MatrixXd token_projection(const ControllerParams& p) {
  MatrixXd px = p.encoder.w_x * p.embedding.transpose();
  px.colwise() += p.encoder.b_x;
  return px;
}

void gather_tokens(const MatrixXd& px, const TokenSeqs& seqs, Index begin,
                   const Padding& padding, Index t, MatrixXd& gx) {
  gx.resize(px.rows(), static_cast<Index>(padding.start.size()));
  for (Index b = 0; b < gx.cols(); ++b) {
    if (padding.active(t, b)) {
      const auto& seq = seqs[static_cast<std::size_t>(begin + b)];
      gx.col(b) = px.col(seq[static_cast<std::size_t>(t - padding.start[b])]);
    } else {
      gx.col(b).setZero();
    }
  }
}

MatrixXd dense_projection(const GruParams& g, const MatrixXd& x) {
  MatrixXd gx = g.w_x * x;
  gx.colwise() += g.b_x;
  return gx;
}

// Candidate features without keeping any trace.
MatrixXd features(const ControllerParams& p, const TokenSeqs& seqs) {
  const Index count = static_cast<Index>(seqs.size());
  const MatrixXd px = token_projection(p);
  const bool stacked = p.kind == ControllerKind::kDoubleRnn;
  MatrixXd out(p.d_h, count);
  MatrixXd gx;
  for (Index begin = 0; begin < count; begin += kInferenceChunk) {
    const Index end = std::min(count, begin + kInferenceChunk);
    const Padding padding(seqs, begin, end);
    MatrixXd h1 = MatrixXd::Zero(p.d_h, end - begin);
    MatrixXd h2 = MatrixXd::Zero(p.d_h, end - begin);
    for (Index t = 0; t < padding.steps; ++t) {
      gather_tokens(px, seqs, begin, padding, t, gx);
      h1 = gru_step(p.encoder, gx, h1, &padding, t, nullptr);
      if (stacked) {
        h2 = gru_step(p.second, dense_projection(p.second, h1), h2, &padding,
                      t, nullptr);
      }
    }
    out.middleCols(begin, end - begin) = stacked ? h2 : h1;
  }
  return out;
}

VectorXd ranker_scores(const ControllerParams& p, const MatrixXd& f,
                       Index set_size) {
  const MatrixXd gx = dense_projection(p.second, f);
  MatrixXd h = MatrixXd::Zero(p.d_h, 1);
  VectorXd scores(f.cols());
  for (Index t = 0; t < f.cols(); ++t) {
    if (set_size > 0 && t % set_size == 0) h.setZero();
    h = gru_step(p.second, gx.col(t), h, nullptr, t, nullptr);
    scores(t) = p.head_w.dot(h.col(0)) + p.head_b(0);
  }
  return scores;
}

VectorXd head_scores(const ControllerParams& p, const MatrixXd& f) {
  VectorXd scores = f.transpose() * p.head_w;
  scores.array() += p.head_b(0);
  return scores;
}

TokenSeqs tokenize_all(const std::vector<NetworkArch>& archs,
                       const Vocabulary& vocab) {
  TokenSeqs seqs;
  seqs.reserve(archs.size());
  for (const auto& a : archs) seqs.push_back(tokenize(a, vocab));
  return seqs;
}

void check_params(const ControllerParams& p) {
  if (!p.consistent()) {
    throw InvalidArgument("controller parameters have inconsistent shapes");
  }
}

double loss_impl(const ControllerParams& p, const TokenSeqs& seqs,
                 const VectorXd& targets, ControllerParams* grad) {
  const Index n = static_cast<Index>(seqs.size());
  const Index H = p.d_h;
  const Padding padding(seqs);
  const MatrixXd px = token_projection(p);
  const bool stacked = p.kind == ControllerKind::kDoubleRnn;

  // Encoder, keeping the trace.
  LayerTrace enc;
  enc.steps.resize(static_cast<std::size_t>(padding.steps));
  enc.outputs.resize(static_cast<std::size_t>(padding.steps));
  MatrixXd h = MatrixXd::Zero(H, n);
  MatrixXd gx;
  for (Index t = 0; t < padding.steps; ++t) {
    gather_tokens(px, seqs, 0, padding, t, gx);
    h = gru_step(p.encoder, gx, h, &padding, t,
                 &enc.steps[static_cast<std::size_t>(t)]);
    enc.outputs[static_cast<std::size_t>(t)] = h;
  }

  LayerTrace upper;
  MatrixXd f = h;
  if (stacked) {
    upper.steps.resize(static_cast<std::size_t>(padding.steps));
    MatrixXd h2 = MatrixXd::Zero(H, n);
    for (Index t = 0; t < padding.steps; ++t) {
      h2 = gru_step(p.second,
                    dense_projection(p.second,
                                     enc.outputs[static_cast<std::size_t>(t)]),
                    h2, &padding, t, &upper.steps[static_cast<std::size_t>(t)]);
    }
    f = h2;
  }

  VectorXd predicted(n);
  LayerTrace ranker;
  MatrixXd ranker_gx;
  if (p.kind == ControllerKind::kScc) {
    ranker_gx = dense_projection(p.second, f);
    ranker.steps.resize(static_cast<std::size_t>(n));
    ranker.outputs.resize(static_cast<std::size_t>(n));
    MatrixXd hr = MatrixXd::Zero(H, 1);
    for (Index t = 0; t < n; ++t) {
      hr = gru_step(p.second, ranker_gx.col(t), hr, nullptr, t,
                    &ranker.steps[static_cast<std::size_t>(t)]);
      ranker.outputs[static_cast<std::size_t>(t)] = hr;
      predicted(t) = p.head_w.dot(hr.col(0)) + p.head_b(0);
    }
  } else {
    predicted = head_scores(p, f);
  }

  const VectorXd residual = predicted - targets;
  const double loss = residual.squaredNorm() / static_cast<double>(n);
  if (grad == nullptr) return loss;

  const VectorXd dy = 2.0 * residual / static_cast<double>(n);
  grad->head_b(0) += dy.sum();

  MatrixXd df;
  MatrixXd dgx;
  if (p.kind == ControllerKind::kScc) {
    MatrixXd ranker_dgx(3 * H, n);
    MatrixXd carry = MatrixXd::Zero(H, 1);
    for (Index t = n - 1; t >= 0; --t) {
      const auto& out = ranker.outputs[static_cast<std::size_t>(t)];
      grad->head_w += dy(t) * out.col(0);
      MatrixXd dh = carry + dy(t) * p.head_w;
      carry = gru_step_backward(p.second,
                                ranker.steps[static_cast<std::size_t>(t)], dh,
                                dgx, grad->second);
      ranker_dgx.col(t) = dgx.col(0);
    }
    grad->second.w_x.noalias() += ranker_dgx * f.transpose();
    grad->second.b_x += ranker_dgx.rowwise().sum();
    df = p.second.w_x.transpose() * ranker_dgx;
  } else {
    grad->head_w.noalias() += f * dy;
    df = p.head_w * dy.transpose();
  }

  // Gradient arriving at each encoder output.
  std::vector<MatrixXd> injected(static_cast<std::size_t>(padding.steps));
  if (stacked) {
    MatrixXd carry = df;
    for (Index t = padding.steps - 1; t >= 0; --t) {
      carry = gru_step_backward(p.second,
                                upper.steps[static_cast<std::size_t>(t)], carry,
                                dgx, grad->second);
      const auto& x = enc.outputs[static_cast<std::size_t>(t)];
      grad->second.w_x.noalias() += dgx * x.transpose();
      grad->second.b_x += dgx.rowwise().sum();
      injected[static_cast<std::size_t>(t)] = p.second.w_x.transpose() * dgx;
    }
  } else if (padding.steps > 0) {
    injected.back() = df;
  }

  MatrixXd dpx = MatrixXd::Zero(px.rows(), px.cols());
  MatrixXd carry = MatrixXd::Zero(H, n);
  for (Index t = padding.steps - 1; t >= 0; --t) {
    const auto& inj = injected[static_cast<std::size_t>(t)];
    if (inj.size() > 0) carry += inj;
    carry = gru_step_backward(p.encoder, enc.steps[static_cast<std::size_t>(t)],
                              carry, dgx, grad->encoder);
    for (Index b = 0; b < n; ++b) {
      if (!padding.active(t, b)) continue;
      const int token = seqs[static_cast<std::size_t>(b)]
                            [static_cast<std::size_t>(t - padding.start[b])];
      dpx.col(token) += dgx.col(b);
    }
  }
  grad->encoder.w_x.noalias() += dpx * p.embedding;
  grad->encoder.b_x += dpx.rowwise().sum();
  grad->embedding.noalias() += dpx.transpose() * p.encoder.w_x;
  return loss;
}

void fill_tensor(const nlohmann::json& j, TensorView& view) {
  const auto& shape = j.at("shape");
  if (!shape.is_array() || shape.size() != 2 ||
      shape[0].get<Index>() != view.rows || shape[1].get<Index>() != view.cols) {
    throw CorruptCheckpoint("tensor '" + view.name + "' has the wrong shape");
  }
  const auto& values = j.at("values");
  if (!values.is_array() ||
      static_cast<Index>(values.size()) != view.rows * view.cols) {
    throw CorruptCheckpoint("tensor '" + view.name + "' has the wrong size");
  }
  // Row-major on disk, column-major in memory.
  Eigen::Map<MatrixXd> m(view.data, view.rows, view.cols);
  std::size_t k = 0;
  for (Index r = 0; r < view.rows; ++r) {
    for (Index c = 0; c < view.cols; ++c) m(r, c) = values[k++].get<double>();
  }
}

}  // namespace

std::string_view controller_kind_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kScc:
      return "scc";
    case ControllerKind::kSingleRnn:
      return "single_rnn";
    case ControllerKind::kDoubleRnn:
      return "double_rnn";
  }
  return "unknown";
}

ControllerKind controller_kind_from_name(std::string_view name) {
  if (name == "scc") return ControllerKind::kScc;
  if (name == "single_rnn") return ControllerKind::kSingleRnn;
  if (name == "double_rnn") return ControllerKind::kDoubleRnn;
  throw InvalidArgument("unknown controller kind '" + std::string(name) + "'");
}

std::vector<int> tokenize(const NetworkArch& arch, const Vocabulary& vocab) {
  std::vector<int> tokens;
  auto slot_token = [&](int slot) {
    if (slot < 0 || slot >= vocab.max_context) {
      throw VocabularyOverflow("input slot " + std::to_string(slot) +
                               " exceeds the vocabulary context of " +
                               std::to_string(vocab.max_context));
    }
    return Vocabulary::kSlotBase + slot;
  };
  auto code_token = [](const CombineSpec& combine) {
    const auto code = combine.code();
    for (std::size_t i = 0; i < kCombineCodes.size(); ++i) {
      if (kCombineCodes[i] == code) {
        return Vocabulary::kCodeBase + static_cast<int>(i);
      }
    }
    throw InvalidArgument("illegal combine code");
  };
  for (const Block& block : arch.blocks) {
    tokens.push_back(block.stride == 2 ? Vocabulary::kBlockStride2
                                       : Vocabulary::kBlockStride1);
    for (const Cell& cell : block.cells) {
      tokens.push_back(slot_token(cell.input1));
      tokens.push_back(slot_token(cell.input2));
      tokens.push_back(Vocabulary::kOpBase + static_cast<int>(cell.op1));
      tokens.push_back(Vocabulary::kOpBase + static_cast<int>(cell.op2));
      tokens.push_back(code_token(cell.combine));
      tokens.push_back(Vocabulary::kCellEnd);
    }
  }
  return tokens;
}

GruParams GruParams::zeros(Index input, Index hidden) {
  GruParams g;
  g.w_x = MatrixXd::Zero(3 * hidden, input);
  g.w_h = MatrixXd::Zero(3 * hidden, hidden);
  g.b_x = VectorXd::Zero(3 * hidden);
  g.b_h = VectorXd::Zero(3 * hidden);
  return g;
}

ControllerParams ControllerParams::zeros(ControllerKind kind, int d_emb,
                                         int d_h, const Vocabulary& vocab) {
  if (d_emb < 1 || d_h < 1) {
    throw InvalidArgument("controller dimensions must be >= 1");
  }
  ControllerParams p;
  p.kind = kind;
  p.d_emb = d_emb;
  p.d_h = d_h;
  p.vocab = vocab;
  p.embedding = MatrixXd::Zero(vocab.size(), d_emb);
  p.encoder = GruParams::zeros(d_emb, d_h);
  if (kind != ControllerKind::kSingleRnn) p.second = GruParams::zeros(d_h, d_h);
  p.head_w = VectorXd::Zero(d_h);
  p.head_b = VectorXd::Zero(1);
  return p;
}

ControllerParams ControllerParams::random(ControllerKind kind, int d_emb,
                                          int d_h, std::uint64_t seed,
                                          double range,
                                          const Vocabulary& vocab) {
  ControllerParams p = zeros(kind, d_emb, d_h, vocab);
  Rng rng(seed);
  for (TensorView& view : tensors(p)) {
    for (Index i = 0; i < view.rows * view.cols; ++i) {
      view.data[i] = rng.uniform(-range, range);
    }
  }
  return p;
}

bool ControllerParams::consistent() const {
  const Index H = d_h;
  auto gru_ok = [H](const GruParams& g, Index in) {
    return g.w_x.rows() == 3 * H && g.w_x.cols() == in &&
           g.w_h.rows() == 3 * H && g.w_h.cols() == H && g.b_x.size() == 3 * H &&
           g.b_h.size() == 3 * H;
  };
  if (embedding.rows() != vocab.size() || embedding.cols() != d_emb) return false;
  if (!gru_ok(encoder, d_emb)) return false;
  if (kind == ControllerKind::kSingleRnn ? !second.empty()
                                         : !gru_ok(second, H)) {
    return false;
  }
  return head_w.size() == H && head_b.size() == 1;
}

bool ControllerParams::all_finite() const {
  for (const TensorView& v : tensors(const_cast<ControllerParams&>(*this))) {
    for (Index i = 0; i < v.rows * v.cols; ++i) {
      if (!std::isfinite(v.data[i])) return false;
    }
  }
  return true;
}

std::vector<TensorView> tensors(ControllerParams& p) {
  std::vector<TensorView> out;
  auto add = [&out](std::string name, auto& m) {
    out.push_back({std::move(name), m.rows(), m.cols(), m.data()});
  };
  auto add_gru = [&add](const std::string& prefix, GruParams& g) {
    add(prefix + ".w_x", g.w_x);
    add(prefix + ".w_h", g.w_h);
    add(prefix + ".b_x", g.b_x);
    add(prefix + ".b_h", g.b_h);
  };
  add("embedding", p.embedding);
  add_gru("encoder", p.encoder);
  if (p.kind == ControllerKind::kScc) add_gru("ranker", p.second);
  if (p.kind == ControllerKind::kDoubleRnn) add_gru("encoder2", p.second);
  add("head.w", p.head_w);
  add("head.b", p.head_b);
  return out;
}

std::size_t parameter_count(const ControllerParams& params) {
  std::size_t total = 0;
  for (const auto& v : tensors(const_cast<ControllerParams&>(params))) {
    total += static_cast<std::size_t>(v.rows * v.cols);
  }
  return total;
}

Eigen::VectorXd encode(const ControllerParams& params, const NetworkArch& arch) {
  check_params(params);
  return features(params, {tokenize(arch, params.vocab)}).col(0);
}

Eigen::MatrixXd encode_all(const ControllerParams& params,
                           const std::vector<NetworkArch>& archs) {
  check_params(params);
  return features(params, tokenize_all(archs, params.vocab));
}

std::vector<double> rank(const ControllerParams& params,
                         const std::vector<NetworkArch>& candidates,
                         int set_size) {
  check_params(params);
  if (params.kind != ControllerKind::kScc) {
    throw InvalidArgument("rank requires an SCC controller");
  }
  if (candidates.empty()) throw InvalidArgument("rank needs candidates");
  if (set_size < 0) throw InvalidArgument("set_size must be >= 0");
  const VectorXd scores =
      ranker_scores(params, encode_all(params, candidates), set_size);
  return {scores.data(), scores.data() + scores.size()};
}

std::vector<double> rank_canonical(const ControllerParams& params,
                                   const std::vector<NetworkArch>& candidates,
                                   int set_size) {
  std::vector<std::pair<std::uint64_t, std::string>> keys;
  keys.reserve(candidates.size());
  for (const auto& a : candidates) keys.emplace_back(canonical_hash(a), canonical_key(a));
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::vector<NetworkArch> sorted;
  sorted.reserve(candidates.size());
  for (std::size_t i : order) sorted.push_back(candidates[i]);
  const std::vector<double> scores = rank(params, sorted, set_size);
  std::vector<double> out(candidates.size());
  for (std::size_t k = 0; k < order.size(); ++k) out[order[k]] = scores[k];
  return out;
}

double baseline_score(const ControllerParams& params, const NetworkArch& arch) {
  check_params(params);
  if (params.kind == ControllerKind::kScc) {
    throw InvalidArgument("baseline_score requires a baseline controller");
  }
  return head_scores(params, features(params, {tokenize(arch, params.vocab)}))(0);
}

std::vector<double> predict_scores(const ControllerParams& params,
                                   const std::vector<NetworkArch>& candidates,
                                   int set_size) {
  if (params.kind == ControllerKind::kScc) {
    return rank_canonical(params, candidates, set_size);
  }
  check_params(params);
  if (candidates.empty()) return {};
  const VectorXd scores = head_scores(params, encode_all(params, candidates));
  return {scores.data(), scores.data() + scores.size()};
}

double set_loss(const ControllerParams& params,
                const std::vector<NetworkArch>& archs,
                const std::vector<double>& targets, ControllerParams* grad) {
  check_params(params);
  if (archs.empty() || archs.size() != targets.size()) {
    throw InvalidArgument("set_loss needs one target per candidate");
  }
  const VectorXd y = Eigen::Map<const VectorXd>(targets.data(),
                                                static_cast<Index>(targets.size()));
  return loss_impl(params, tokenize_all(archs, params.vocab), y, grad);
}

TrainResult train(const ControllerParams& params,
                  const std::vector<TrainingExample>& batch,
                  const TrainConfig& config, const ControllerParams* velocity) {
  check_params(params);
  if (batch.empty()) throw InvalidArgument("training batch is empty");
  if (!(config.lr >= 0.0) || config.epochs < 0 || config.set_size < 1) {
    throw InvalidArgument("invalid training configuration");
  }

  TokenSeqs seqs;
  std::vector<double> targets;
  seqs.reserve(batch.size());
  for (const auto& ex : batch) {
    if (!std::isfinite(ex.target)) {
      throw InvalidArgument("training target is not finite");
    }
    seqs.push_back(tokenize(ex.arch, params.vocab));
    targets.push_back(ex.target);
  }
  if (config.standardize_targets) {
    const double mean =
        std::accumulate(targets.begin(), targets.end(), 0.0) / targets.size();
    double var = 0.0;
    for (double t : targets) var += (t - mean) * (t - mean);
    const double sd = std::sqrt(var / targets.size());
    for (double& t : targets) t = sd > 0.0 ? (t - mean) / sd : t - mean;
  }

  TrainResult result{params,
                     velocity != nullptr
                         ? *velocity
                         : ControllerParams::zeros(params.kind, params.d_emb,
                                                   params.d_h, params.vocab),
                     {}};
  if (!result.velocity.consistent() || result.velocity.kind != params.kind ||
      result.velocity.d_h != params.d_h || result.velocity.d_emb != params.d_emb) {
    throw InvalidArgument("optimizer state does not match the parameters");
  }
  ControllerParams grad = ControllerParams::zeros(params.kind, params.d_emb,
                                                  params.d_h, params.vocab);
  auto param_views = tensors(result.params);
  auto velocity_views = tensors(result.velocity);
  auto grad_views = tensors(grad);

  Rng rng(config.seed);
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t set_size = static_cast<std::size_t>(config.set_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += set_size) {
      const std::size_t end = std::min(order.size(), begin + set_size);
      TokenSeqs set_seqs;
      VectorXd set_targets(static_cast<Index>(end - begin));
      for (std::size_t i = begin; i < end; ++i) {
        set_seqs.push_back(seqs[order[i]]);
        set_targets(static_cast<Index>(i - begin)) = targets[order[i]];
      }
      for (auto& g : grad_views) {
        Eigen::Map<VectorXd>(g.data, g.rows * g.cols).setZero();
      }
      const double loss = loss_impl(result.params, set_seqs, set_targets, &grad);
      if (!std::isfinite(loss)) {
        throw NonFiniteLoss("controller loss diverged at epoch " +
                            std::to_string(epoch));
      }
      total += loss * static_cast<double>(end - begin);

      double scale = 1.0;
      if (config.clip_norm > 0.0) {
        double sq = 0.0;
        for (auto& g : grad_views) {
          sq += Eigen::Map<VectorXd>(g.data, g.rows * g.cols).squaredNorm();
        }
        const double norm = std::sqrt(sq);
        if (norm > config.clip_norm) scale = config.clip_norm / norm;
      }
      for (std::size_t k = 0; k < param_views.size(); ++k) {
        const Index size = param_views[k].rows * param_views[k].cols;
        Eigen::Map<VectorXd> v(velocity_views[k].data, size);
        Eigen::Map<VectorXd> w(param_views[k].data, size);
        v = config.momentum * v + scale * Eigen::Map<VectorXd>(grad_views[k].data, size);
        w -= config.lr * v;
      }
    }
    const double epoch_loss = total / static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss) || !result.params.all_finite()) {
      throw NonFiniteLoss("controller parameters diverged at epoch " +
                          std::to_string(epoch));
    }
    result.loss_trace.push_back(epoch_loss);
  }
  return result;
}

nlohmann::json controller_to_json(const ControllerParams& params) {
  nlohmann::json tensors_json = nlohmann::json::object();
  for (const TensorView& v : tensors(const_cast<ControllerParams&>(params))) {
    Eigen::Map<const MatrixXd> m(v.data, v.rows, v.cols);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(v.rows * v.cols));
    for (Index r = 0; r < v.rows; ++r) {
      for (Index c = 0; c < v.cols; ++c) values.push_back(m(r, c));
    }
    tensors_json[v.name] = {{"shape", {v.rows, v.cols}}, {"values", values}};
  }
  return {{"format", "growtrim-controller"},
          {"version", kCheckpointVersion},
          {"kind", std::string(controller_kind_name(params.kind))},
          {"d_emb", params.d_emb},
          {"d_h", params.d_h},
          {"vocab",
           {{"max_context", params.vocab.max_context},
            {"size", params.vocab.size()}}},
          {"tensors", std::move(tensors_json)}};
}

ControllerParams controller_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "growtrim-controller") {
      throw CorruptCheckpoint("not a controller checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw CorruptCheckpoint("unsupported controller checkpoint version");
    }
    Vocabulary vocab;
    vocab.max_context = j.at("vocab").at("max_context").get<int>();
    if (j.at("vocab").at("size").get<int>() != vocab.size()) {
      throw CorruptCheckpoint("vocabulary size mismatch");
    }
    ControllerParams p = ControllerParams::zeros(
        controller_kind_from_name(j.at("kind").get<std::string>()),
        j.at("d_emb").get<int>(), j.at("d_h").get<int>(), vocab);
    const auto& stored = j.at("tensors");
    auto views = tensors(p);
    if (stored.size() != views.size()) {
      throw CorruptCheckpoint("unexpected tensor count");
    }
    for (TensorView& view : views) fill_tensor(stored.at(view.name), view);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint(std::string("controller checkpoint: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw CorruptCheckpoint(std::string("controller checkpoint: ") + e.what());
  }
}

void save_controller(const ControllerParams& params,
                     const std::filesystem::path& path) {
  write_file(path, controller_to_json(params).dump() + "\n");
}

ControllerParams load_controller(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw CorruptCheckpoint(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw CorruptCheckpoint(e.what());
  }
  return controller_from_json(j);
}

}  // namespace growtrim
