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

// Memory-efficiency score of a candidate relative to the previous round's
// base network.

#ifndef GROWTRIM_METRIC_H_
#define GROWTRIM_METRIC_H_

#include <string_view>

namespace growtrim {

enum class MetricMode {
  // y = lambda*da/a - (1-lambda)*(dr/r + dp/p): memory growth is penalized.
  kGoalConsistent,
  // y = lambda*da/a + (1-lambda)*(dr/r + dp/p), exactly as printed.
  kPaperLiteral,
};

std::string_view metric_mode_name(MetricMode mode);
MetricMode metric_mode_from_name(std::string_view name);  // throws InvalidArgument

struct MetricInputs {
  double accuracy = 0.0;          // a_i
  double peak_intermediate = 0.0; // r_i, bytes
  double param_bytes = 0.0;       // p_i
  double base_accuracy = 0.0;
  double base_peak = 0.0;
  double base_params = 0.0;
  double lambda = 0.5;
};

// Throws DegenerateBase when a base quantity is not positive and
// InvalidArgument when lambda is outside [0, 1].
double efficiency(const MetricInputs& in,
                  MetricMode mode = MetricMode::kGoalConsistent);

}  // namespace growtrim

#endif  // GROWTRIM_METRIC_H_
