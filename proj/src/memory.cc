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

#include "growtrim/memory.h"

#include <algorithm>
#include <deque>
#include <sstream>

#include "growtrim/errors.h"

namespace growtrim {

std::int64_t layer_weights(OpKind op, std::int64_t in_channels,
                           std::int64_t out_channels, bool include_bias) {
  const std::int64_t bias = include_bias ? 1 : 0;
  switch (op) {
    case OpKind::kConv3x3:
    case OpKind::kDilatedConv3x3:
      return 9 * in_channels * out_channels + bias * out_channels;
    case OpKind::kDepthwiseConv3x3:
      // Depthwise-separable: k*k depthwise filter then a 1x1 pointwise one.
      return 9 * in_channels + in_channels * out_channels +
             bias * (in_channels + out_channels);
    case OpKind::kDepthwiseConv5x5:
      return 25 * in_channels + in_channels * out_channels +
             bias * (in_channels + out_channels);
    case OpKind::kFactorized1x7_7x1:
      // 1x7 to out_channels, then 7x1 out_channels -> out_channels.
      return 7 * in_channels * out_channels + 7 * out_channels * out_channels +
             bias * 2 * out_channels;
    case OpKind::kAvgPool3x3:
    case OpKind::kMaxPool3x3:
    case OpKind::kIdentity:
      return 0;
  }
  return 0;
}

std::int64_t cell_param_count(const NetworkArch& arch,
                              const MemoryConfig& config) {
  const ShapeMap shapes = infer_shapes(arch);
  std::int64_t total = 0;
  for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
    const BlockShapes& bs = shapes.blocks[b];
    for (const Cell& cell : arch.blocks[b].cells) {
      total += layer_weights(cell.op1, bs.slot(cell.input1).channels,
                             arch.channel_width, config.include_bias);
      total += layer_weights(cell.op2, bs.slot(cell.input2).channels,
                             arch.channel_width, config.include_bias);
    }
  }
  return total;
}

std::int64_t param_count(const NetworkArch& arch, const MemoryConfig& config) {
  std::int64_t total = cell_param_count(arch, config);
  const std::int64_t bias = config.include_bias ? 1 : 0;
  if (arch.stem_enabled && config.include_stem) {
    total += layer_weights(OpKind::kConv3x3, arch.input_shape.channels,
                           arch.channel_width, config.include_bias);
  }
  if (config.include_head && !arch.blocks.empty()) {
    const ShapeMap shapes = infer_shapes(arch);
    const std::int64_t features = shapes.blocks.back().output.channels;
    total += features * arch.num_classes + bias * arch.num_classes;
  }
  return total;
}

std::int64_t param_memory(const NetworkArch& arch, const MemoryConfig& config) {
  return param_count(arch, config) * config.bytes_per_weight;
}

int ValueGraph::add(std::string name, std::vector<int> inputs,
                    std::int64_t size, bool terminal) {
  nodes.push_back({std::move(name), std::move(inputs), size, terminal});
  return static_cast<int>(nodes.size()) - 1;
}

std::vector<int> levelized_schedule(const ValueGraph& graph) {
  const std::size_t n = graph.nodes.size();
  std::vector<int> pending(n, 0);
  std::vector<std::vector<int>> consumers(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (int input : graph.nodes[v].inputs) {
      if (input < 0 || static_cast<std::size_t>(input) >= n) {
        throw InvalidArgument("value graph input id out of range");
      }
      consumers[static_cast<std::size_t>(input)].push_back(static_cast<int>(v));
      ++pending[v];
    }
  }
  std::vector<int> time(n, 0);
  std::deque<int> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (pending[v] == 0) {
      time[v] = 1;
      ready.push_back(static_cast<int>(v));
    }
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const int v = ready.front();
    ready.pop_front();
    ++visited;
    for (int c : consumers[static_cast<std::size_t>(v)]) {
      auto& t = time[static_cast<std::size_t>(c)];
      t = std::max(t, time[static_cast<std::size_t>(v)] + 1);
      if (--pending[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
    }
  }
  if (visited != n) throw CycleDetected("value graph contains a cycle");
  return time;
}

std::int64_t LifetimeTable::peak() const {
  std::int64_t best = 0;
  for (std::int64_t m : per_step) best = std::max(best, m);
  return best;
}

LifetimeTable lifetime_table(const ValueGraph& graph) {
  const std::vector<int> time = levelized_schedule(graph);
  const std::size_t n = graph.nodes.size();
  int depth = 0;
  for (int t : time) depth = std::max(depth, t);

  std::vector<int> last_consumer(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    for (int input : graph.nodes[v].inputs) {
      auto& last = last_consumer[static_cast<std::size_t>(input)];
      last = std::max(last, time[v]);
    }
  }

  LifetimeTable table;
  table.rows.reserve(n);
  // delta[t] for t in 1..depth+1
  std::vector<std::int64_t> delta(static_cast<std::size_t>(depth) + 2, 0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto& node = graph.nodes[v];
    const int gen = time[v];
    int resident_until = gen;
    int last_use = gen;
    if (node.terminal) {
      resident_until = depth;
      last_use = depth;
    } else if (last_consumer[v] > 0) {
      // Freed in the step its last consumer runs.
      resident_until = last_consumer[v] - 1;
      last_use = last_consumer[v];
    }
    resident_until = std::max(resident_until, gen);
    delta[static_cast<std::size_t>(gen)] += node.size;
    delta[static_cast<std::size_t>(resident_until) + 1] -= node.size;
    table.rows.push_back({node.name, gen, last_use, node.size, node.terminal});
  }
  table.per_step.resize(static_cast<std::size_t>(depth));
  std::int64_t running = 0;
  for (int t = 1; t <= depth; ++t) {
    running += delta[static_cast<std::size_t>(t)];
    table.per_step[static_cast<std::size_t>(t - 1)] = running;
  }
  return table;
}

ValueGraph block_value_graph(const NetworkArch& arch, int block_index,
                             const ShapeMap& shapes) {
  const Block& block = arch.blocks.at(static_cast<std::size_t>(block_index));
  const BlockShapes& bs = shapes.blocks.at(static_cast<std::size_t>(block_index));
  ValueGraph graph;
  std::vector<int> slot_node;
  slot_node.push_back(graph.add("r1", {}, bs.input.elements()));
  for (std::size_t c = 0; c < block.cells.size(); ++c) {
    const Cell& cell = block.cells[c];
    const int r = 3 * static_cast<int>(c + 1);
    const int l1 = graph.add("r" + std::to_string(r - 1),
                             {slot_node[static_cast<std::size_t>(cell.input1)]},
                             bs.cells[c].layer1.elements());
    const int l2 = graph.add("r" + std::to_string(r),
                             {slot_node[static_cast<std::size_t>(cell.input2)]},
                             bs.cells[c].layer2.elements());
    slot_node.push_back(graph.add("r" + std::to_string(r + 1), {l1, l2},
                                  bs.cells[c].output.elements(),
                                  cell.combine.included_in_block_output));
  }
  return graph;
}

std::int64_t MemoryEstimate::peak_elements() const {
  std::int64_t best = 0;
  for (const auto& table : per_block) best = std::max(best, table.peak());
  return best;
}

MemoryEstimate estimate_memory(const NetworkArch& arch,
                               const MemoryConfig& config) {
  const ShapeMap shapes = infer_shapes(arch);
  MemoryEstimate estimate;
  estimate.param_bytes = param_memory(arch, config);
  for (int b = 0; b < static_cast<int>(arch.blocks.size()); ++b) {
    estimate.per_block.push_back(
        lifetime_table(block_value_graph(arch, b, shapes)));
  }
  estimate.peak_intermediate_bytes =
      estimate.peak_elements() * config.bytes_per_element;
  return estimate;
}

nlohmann::json memory_to_json(const MemoryEstimate& estimate) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& table : estimate.per_block) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
      rows.push_back({{"name", row.name},
                      {"gen_time", row.gen_time},
                      {"last_use_time", row.last_use_time},
                      {"size", row.size},
                      {"terminal", row.terminal}});
    }
    blocks.push_back({{"peak_elements", table.peak()},
                      {"lifetime_rows", std::move(rows)},
                      {"per_step", table.per_step}});
  }
  return {{"param_bytes", estimate.param_bytes},
          {"peak_intermediate_bytes", estimate.peak_intermediate_bytes},
          {"total_bytes", estimate.total_bytes()},
          {"per_block", std::move(blocks)}};
}

std::string lifetime_csv(const MemoryEstimate& estimate) {
  std::ostringstream os;
  for (std::size_t b = 0; b < estimate.per_block.size(); ++b) {
    const LifetimeTable& table = estimate.per_block[b];
    os << "block,value";
    for (int t = 1; t <= table.depth(); ++t) os << ",T" << t;
    os << "\n";
    for (const auto& row : table.rows) {
      os << b << "," << row.name;
      for (int t = 1; t <= table.depth(); ++t) {
        const bool resident =
            t >= row.gen_time &&
            (t == row.gen_time || t < row.last_use_time ||
             (row.terminal && t <= row.last_use_time));
        os << "," << (resident ? row.size : 0);
      }
      os << "\n";
    }
    os << b << ",memory";
    for (std::int64_t m : table.per_step) os << "," << m;
    os << "\n";
  }
  return os.str();
}

}  // namespace growtrim
