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

#include "growtrim/metric.h"

#include <cmath>
#include <string>

#include "growtrim/errors.h"

namespace growtrim {

std::string_view metric_mode_name(MetricMode mode) {
  return mode == MetricMode::kGoalConsistent ? "goal_consistent"
                                             : "paper_literal";
}

MetricMode metric_mode_from_name(std::string_view name) {
  if (name == "goal_consistent") return MetricMode::kGoalConsistent;
  if (name == "paper_literal") return MetricMode::kPaperLiteral;
  throw InvalidArgument("unknown metric mode '" + std::string(name) + "'");
}

double efficiency(const MetricInputs& in, MetricMode mode) {
  if (!(in.base_accuracy > 0.0) || !(in.base_peak > 0.0) ||
      !(in.base_params > 0.0)) {
    throw DegenerateBase("base accuracy, peak and parameter memory must be > 0");
  }
  if (!(in.lambda >= 0.0 && in.lambda <= 1.0)) {
    throw InvalidArgument("lambda must lie in [0, 1]");
  }
  const double accuracy_term =
      (in.accuracy - in.base_accuracy) / in.base_accuracy;
  const double memory_term =
      (in.peak_intermediate - in.base_peak) / in.base_peak +
      (in.param_bytes - in.base_params) / in.base_params;
  const double sign = mode == MetricMode::kGoalConsistent ? -1.0 : 1.0;
  return in.lambda * accuracy_term + sign * (1.0 - in.lambda) * memory_term;
}

}  // namespace growtrim
