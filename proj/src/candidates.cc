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

#include "growtrim/candidates.h"

#include <algorithm>
#include <unordered_set>

#include "growtrim/errors.h"
#include "growtrim/memory.h"

namespace growtrim {

namespace {

std::string_view trim_kind_name(TrimKind kind) {
  switch (kind) {
    case TrimKind::kReplaceLayerWithIdentity:
      return "replace_layer_with_identity";
    case TrimKind::kRemoveCell:
      return "remove_cell";
    case TrimKind::kRemoveConcatEdge:
      return "remove_concat_edge";
  }
  return "unknown";
}

// Removes the cells flagged in `removed` plus everything the cascade rule
// drags along, then renumbers the surviving slots.
std::vector<Cell> cascade_and_compact(std::vector<Cell> cells,
                                      std::vector<bool> removed) {
  const std::size_t n = cells.size();
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t c = 0; c < n; ++c) {
      if (removed[c]) continue;
      const Cell& cell = cells[c];
      const bool lost_input =
          (cell.input1 > 0 && removed[static_cast<std::size_t>(cell.input1 - 1)]) ||
          (cell.input2 > 0 && removed[static_cast<std::size_t>(cell.input2 - 1)]);
      if (lost_input) {
        removed[c] = true;
        changed = true;
      }
    }
    for (std::size_t c = 0; c < n; ++c) {
      if (removed[c] || cells[c].combine.included_in_block_output) continue;
      const int slot = static_cast<int>(c) + 1;
      bool consumed = false;
      for (std::size_t d = c + 1; d < n && !consumed; ++d) {
        if (removed[d]) continue;
        consumed = cells[d].input1 == slot || cells[d].input2 == slot;
      }
      if (!consumed) {
        removed[c] = true;
        changed = true;
      }
    }
  }

  std::vector<int> new_slot(n + 1, -1);
  new_slot[0] = 0;
  std::vector<Cell> kept;
  for (std::size_t c = 0; c < n; ++c) {
    if (removed[c]) continue;
    Cell cell = cells[c];
    cell.input1 = new_slot[static_cast<std::size_t>(cell.input1)];
    cell.input2 = new_slot[static_cast<std::size_t>(cell.input2)];
    kept.push_back(cell);
    new_slot[c + 1] = static_cast<int>(kept.size());
  }
  return kept;
}

bool canonical_less(std::uint64_t ha, const std::string& ka, std::uint64_t hb,
                    const std::string& kb) {
  if (ha != hb) return ha < hb;
  return ka < kb;
}

}  // namespace

std::string provenance_action(const Provenance& p) {
  return std::holds_alternative<GrowAction>(p) ? "grow" : "trim";
}

std::string provenance_detail(const Provenance& p) {
  if (const auto* grow = std::get_if<GrowAction>(&p)) {
    const Cell& c = grow->cell;
    return "append cell (r" + std::to_string(3 * c.input1 + 1) + ", r" +
           std::to_string(3 * c.input2 + 1) + ", " +
           std::string(op_name(c.op1)) + ", " + std::string(op_name(c.op2)) +
           ", code " + std::to_string(c.combine.code()) + ")";
  }
  const auto& trim = std::get<TrimAction>(p);
  std::string detail = std::string(trim_kind_name(trim.kind)) + " block " +
                       std::to_string(trim.block_index) + " cell " +
                       std::to_string(trim.cell_index + 1);
  if (trim.kind == TrimKind::kReplaceLayerWithIdentity) {
    detail += " layer " + std::to_string(trim.layer_index + 1);
  }
  return detail;
}

nlohmann::json provenance_to_json(const Provenance& p) {
  return {{"action", provenance_action(p)}, {"detail", provenance_detail(p)}};
}

NetworkArch apply_grow(const NetworkArch& base, const GrowAction& action) {
  NetworkArch out = base;
  for (Block& block : out.blocks) block.cells.push_back(action.cell);
  return out;
}

NetworkArch apply_trim(const NetworkArch& base, const TrimAction& action) {
  if (action.block_index < 0 ||
      action.block_index >= static_cast<int>(base.blocks.size())) {
    throw InvalidArgument("trim block index out of range");
  }
  NetworkArch out = base;
  Block& block = out.blocks[static_cast<std::size_t>(action.block_index)];
  if (action.cell_index < 0 ||
      action.cell_index >= static_cast<int>(block.cells.size())) {
    throw InvalidArgument("trim cell index out of range");
  }
  const auto c = static_cast<std::size_t>(action.cell_index);
  std::vector<bool> removed(block.cells.size(), false);
  switch (action.kind) {
    case TrimKind::kReplaceLayerWithIdentity:
      (action.layer_index == 0 ? block.cells[c].op1 : block.cells[c].op2) =
          OpKind::kIdentity;
      return out;
    case TrimKind::kRemoveCell:
      removed[c] = true;
      break;
    case TrimKind::kRemoveConcatEdge:
      block.cells[c].combine.included_in_block_output = false;
      break;
  }
  block.cells = cascade_and_compact(std::move(block.cells), std::move(removed));
  return out;
}

int grow_input_choices(const NetworkArch& base) {
  if (base.blocks.empty()) return 0;
  int slots = base.blocks.front().available_slots();
  for (const Block& block : base.blocks) {
    slots = std::min(slots, block.available_slots());
  }
  return slots;
}

std::vector<GrowAction> enumerate_grow_actions(const NetworkArch& base) {
  const int inputs = grow_input_choices(base);
  std::vector<GrowAction> actions;
  actions.reserve(static_cast<std::size_t>(inputs * inputs) *
                  kGrowableOps.size() * kGrowableOps.size() *
                  kCombineCodes.size());
  for (int i1 = 0; i1 < inputs; ++i1) {
    for (int i2 = 0; i2 < inputs; ++i2) {
      for (OpKind op1 : kGrowableOps) {
        for (OpKind op2 : kGrowableOps) {
          for (std::uint8_t code : kCombineCodes) {
            actions.push_back(
                {Cell{i1, i2, op1, op2, CombineSpec::from_code(code)}});
          }
        }
      }
    }
  }
  return actions;
}

std::vector<TrimAction> enumerate_trim_actions(const NetworkArch& base) {
  std::vector<TrimAction> actions;
  for (int b = 0; b < static_cast<int>(base.blocks.size()); ++b) {
    const auto& cells = base.blocks[static_cast<std::size_t>(b)].cells;
    const int n = static_cast<int>(cells.size());
    for (int c = 0; c < n; ++c) {
      const Cell& cell = cells[static_cast<std::size_t>(c)];
      if (cell.op1 != OpKind::kIdentity) {
        actions.push_back({TrimKind::kReplaceLayerWithIdentity, b, c, 0});
      }
      if (cell.op2 != OpKind::kIdentity) {
        actions.push_back({TrimKind::kReplaceLayerWithIdentity, b, c, 1});
      }
    }
    for (int c = 0; c < n; ++c) {
      actions.push_back({TrimKind::kRemoveCell, b, c, 0});
    }
    for (int c = 0; c < n; ++c) {
      if (cells[static_cast<std::size_t>(c)].combine.included_in_block_output) {
        actions.push_back({TrimKind::kRemoveConcatEdge, b, c, 0});
      }
    }
  }
  return actions;
}

std::vector<Candidate> grow_candidates(const NetworkArch& base) {
  std::vector<Candidate> out;
  std::unordered_set<std::string> seen;
  for (const GrowAction& action : enumerate_grow_actions(base)) {
    NetworkArch arch = apply_grow(base, action);
    if (!is_valid(arch)) continue;
    if (!seen.insert(canonical_key(arch)).second) continue;
    out.push_back({std::move(arch), action});
  }
  return out;
}

std::vector<Candidate> trim_candidates(const NetworkArch& base,
                                       const TrimOptions& options) {
  const std::int64_t base_weights =
      options.require_param_reduction ? param_count(base) : 0;
  std::vector<Candidate> out;
  std::unordered_set<std::string> seen;
  for (const TrimAction& action : enumerate_trim_actions(base)) {
    NetworkArch arch = apply_trim(base, action);
    if (!is_valid(arch)) continue;
    if (options.require_param_reduction && param_count(arch) > base_weights) {
      continue;
    }
    if (!seen.insert(canonical_key(arch)).second) continue;
    out.push_back({std::move(arch), action});
  }
  return out;
}

std::vector<Candidate> generate_candidates(const NetworkArch& base,
                                           const TrimOptions& options) {
  std::vector<Candidate> all = grow_candidates(base);
  std::vector<Candidate> trims = trim_candidates(base, options);
  std::unordered_set<std::string> seen;
  for (const auto& c : all) seen.insert(canonical_key(c.arch));
  for (auto& c : trims) {
    if (seen.insert(canonical_key(c.arch)).second) all.push_back(std::move(c));
  }
  sort_canonical(all);
  return all;
}

SearchSpaceSizes search_space_sizes(const NetworkArch& base) {
  SearchSpaceSizes sizes;
  sizes.input_choices = grow_input_choices(base);
  sizes.op_choices = static_cast<int>(kGrowableOps.size());
  sizes.combine_codes = static_cast<int>(kCombineCodes.size());
  sizes.combine_modes = 2;
  const std::int64_t i = sizes.input_choices;
  const std::int64_t l = sizes.op_choices;
  sizes.grow_size = i * i * l * l * sizes.combine_codes;
  sizes.literal_grow_size =
      i * i * l * l * sizes.combine_modes * sizes.combine_modes;
  for (const Block& block : base.blocks) {
    std::int64_t layers = 0;
    std::int64_t edges = 0;
    for (const Cell& cell : block.cells) {
      layers += (cell.op1 != OpKind::kIdentity) + (cell.op2 != OpKind::kIdentity);
      edges += cell.combine.included_in_block_output ? 1 : 0;
    }
    sizes.trim_size += layers + static_cast<std::int64_t>(block.cells.size()) + edges;
  }
  return sizes;
}

void sort_canonical(std::vector<Candidate>& candidates) {
  std::vector<std::pair<std::uint64_t, std::string>> keys;
  keys.reserve(candidates.size());
  for (const auto& c : candidates) {
    std::string key = canonical_key(c.arch);
    keys.emplace_back(canonical_hash(c.arch), std::move(key));
  }
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return canonical_less(keys[a].first, keys[a].second, keys[b].first,
                          keys[b].second);
  });
  std::vector<Candidate> sorted;
  sorted.reserve(candidates.size());
  for (std::size_t i : order) sorted.push_back(std::move(candidates[i]));
  candidates = std::move(sorted);
}

void sort_canonical(std::vector<NetworkArch>& archs) {
  std::vector<Candidate> wrapped;
  wrapped.reserve(archs.size());
  for (auto& a : archs) wrapped.push_back({std::move(a), GrowAction{}});
  sort_canonical(wrapped);
  archs.clear();
  for (auto& c : wrapped) archs.push_back(std::move(c.arch));
}

}  // namespace growtrim
