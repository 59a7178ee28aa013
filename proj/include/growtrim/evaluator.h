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

// Candidate accuracy evaluation.
//
// The synthetic oracle is a closed-form stand-in for training. The external
// evaluator talks to trainer processes over line-delimited JSON on their
// standard streams:
//   request  {"id": "...", "arch": {...}, "seed": 7, "epochs": 3}
//   response {"id": "...", "accuracy": 0.73}  or  {"id": "...", "error": "..."}
// Setting MEMNAS_TRAINER_DEBUG traces every line to stderr.

#ifndef GROWTRIM_EVALUATOR_H_
#define GROWTRIM_EVALUATOR_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "growtrim/arch.h"
#include "json.hpp"

namespace growtrim {

struct SyntheticConfig {
  double floor = 0.10;
  double ceil = 0.95;
  double alpha = 1.5;
  double beta = 0.3;
  double sigma = 0.005;
};

// floor + (ceil - floor) * (1 - exp(-alpha * P)) * (1 - beta * pool_fraction)
// plus seeded Gaussian noise, clamped to [0, 1]. P is the weight count of the
// cell layers in millions, pool_fraction the share of pooling and identity
// layers.
double synthetic_accuracy(const NetworkArch& arch, std::uint64_t seed,
                          const SyntheticConfig& config = {});

struct EvalRequest {
  std::string id;
  NetworkArch arch;
  std::uint64_t seed = 0;
  int budget = 3;  // training epochs
};

enum class EvalStatus {
  kOk,
  kTrainerError,  // the trainer answered with an error
  kTimeout,
  kMalformedResponse,
  kTrainerUnreachable,
};

std::string_view eval_status_name(EvalStatus status);

struct EvalResult {
  std::string id;
  EvalStatus status = EvalStatus::kOk;
  double accuracy = 0.0;
  std::optional<double> wall_time;
  std::string message;

  bool ok() const { return status == EvalStatus::kOk; }
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  // One result per request, in request order.
  virtual std::vector<EvalResult> evaluate(
      const std::vector<EvalRequest>& requests) = 0;
  virtual std::string name() const = 0;
};

class SyntheticEvaluator : public Evaluator {
 public:
  explicit SyntheticEvaluator(SyntheticConfig config = {}) : config_(config) {}
  std::vector<EvalResult> evaluate(
      const std::vector<EvalRequest>& requests) override;
  std::string name() const override { return "synthetic"; }

 private:
  SyntheticConfig config_;
};

// Accuracy from an arbitrary function; mostly for tests.
class FunctionEvaluator : public Evaluator {
 public:
  using Fn = std::function<double(const EvalRequest&)>;
  explicit FunctionEvaluator(Fn fn) : fn_(std::move(fn)) {}
  std::vector<EvalResult> evaluate(
      const std::vector<EvalRequest>& requests) override;
  std::string name() const override { return "function"; }

 private:
  Fn fn_;
};

struct TrainerSpec {
  std::vector<std::string> command;  // argv, searched in PATH
  double timeout_seconds = 600.0;    // per request
  int parallelism = 1;               // trainer processes
};

// Splits a shell-like command line on whitespace, honoring quotes.
std::vector<std::string> split_command(const std::string& command_line);

nlohmann::json request_to_json(const EvalRequest& request);

// Results come back in request order; every request gets exactly one result.
// A trainer that stops responding past the timeout is killed and restarted
// for the remaining requests. A trainer that exits early fails its
// outstanding requests with kTrainerUnreachable.
std::vector<EvalResult> external_evaluate(const std::vector<EvalRequest>& requests,
                                          const TrainerSpec& spec);

class ExternalEvaluator : public Evaluator {
 public:
  explicit ExternalEvaluator(TrainerSpec spec) : spec_(std::move(spec)) {}
  std::vector<EvalResult> evaluate(
      const std::vector<EvalRequest>& requests) override {
    return external_evaluate(requests, spec_);
  }
  std::string name() const override { return "external"; }

 private:
  TrainerSpec spec_;
};

}  // namespace growtrim

#endif  // GROWTRIM_EVALUATOR_H_
