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

// Parameter memory and lifetime-based peak intermediate memory.
//
// Each block is turned into a value graph (block input, two layer outputs and
// one combined output per cell) and scheduled ASAP with one unit of time per
// layer. A value is resident at step t when it was generated at or before t
// and either
//   - it is generated at t,
//   - some consumer runs after t, or
//   - it is a block output (kept through the block's final step).
// Blocks run one after another, so the network peak is the largest block
// peak.

#ifndef GROWTRIM_MEMORY_H_
#define GROWTRIM_MEMORY_H_

#include <cstdint>
#include <string>
#include <vector>

#include "growtrim/arch.h"
#include "json.hpp"

namespace growtrim {

struct MemoryConfig {
  std::int64_t bytes_per_weight = 2;
  std::int64_t bytes_per_element = 2;
  bool include_bias = false;
  bool include_stem = true;  // only when the arch has a stem
  bool include_head = true;
};

// Weight count of one operation layer.
std::int64_t layer_weights(OpKind op, std::int64_t in_channels,
                           std::int64_t out_channels, bool include_bias);

// Total weight count of the network under `config`.
std::int64_t param_count(const NetworkArch& arch,
                         const MemoryConfig& config = {});
// Weights of the cell operation layers only (no stem, no head).
std::int64_t cell_param_count(const NetworkArch& arch,
                              const MemoryConfig& config = {});
std::int64_t param_memory(const NetworkArch& arch,
                          const MemoryConfig& config = {});

struct ValueGraph {
  struct Node {
    std::string name;
    std::vector<int> inputs;  // producer node ids
    std::int64_t size = 1;    // elements
    bool terminal = false;
  };
  std::vector<Node> nodes;

  int add(std::string name, std::vector<int> inputs, std::int64_t size,
          bool terminal = false);
};

// ASAP unit-time levels: sources at 1, every other node at
// 1 + max(level of its inputs). Throws CycleDetected.
std::vector<int> levelized_schedule(const ValueGraph& graph);

struct LifetimeRow {
  std::string name;
  int gen_time = 0;
  int last_use_time = 0;
  std::int64_t size = 0;
  bool terminal = false;
};

struct LifetimeTable {
  std::vector<LifetimeRow> rows;
  std::vector<std::int64_t> per_step;  // index t-1 holds step t

  std::int64_t peak() const;
  int depth() const { return static_cast<int>(per_step.size()); }
};

LifetimeTable lifetime_table(const ValueGraph& graph);

// Value graph of one block, named by r-number.
ValueGraph block_value_graph(const NetworkArch& arch, int block_index,
                             const ShapeMap& shapes);

struct MemoryEstimate {
  std::int64_t param_bytes = 0;
  std::int64_t peak_intermediate_bytes = 0;
  std::vector<LifetimeTable> per_block;

  std::int64_t peak_elements() const;
  std::int64_t total_bytes() const {
    return param_bytes + peak_intermediate_bytes;
  }
};

// Throws ShapeMismatch when shapes cannot be inferred.
MemoryEstimate estimate_memory(const NetworkArch& arch,
                               const MemoryConfig& config = {});

nlohmann::json memory_to_json(const MemoryEstimate& estimate);
// Fig.-style lifetime table: one row per value, one column per step.
std::string lifetime_csv(const MemoryEstimate& estimate);

}  // namespace growtrim

#endif  // GROWTRIM_MEMORY_H_
