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

// Per-round candidate generation by growing and trimming a base network.
//
// Grow appends the same new cell to the tail of every block. Trim touches
// exactly one block with one of three actions and then cascades: a cell that
// lost an input is removed, and a cell whose output is neither consumed nor
// part of the block output is removed, until nothing changes.

#ifndef GROWTRIM_CANDIDATES_H_
#define GROWTRIM_CANDIDATES_H_

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "growtrim/arch.h"
#include "json.hpp"

namespace growtrim {

struct GrowAction {
  Cell cell;
};

enum class TrimKind { kReplaceLayerWithIdentity, kRemoveCell, kRemoveConcatEdge };

struct TrimAction {
  TrimKind kind = TrimKind::kRemoveCell;
  int block_index = 0;
  int cell_index = 0;   // 0-based
  int layer_index = 0;  // 0 or 1, only for kReplaceLayerWithIdentity
};

using Provenance = std::variant<GrowAction, TrimAction>;

std::string provenance_action(const Provenance& p);  // "grow" | "trim"
std::string provenance_detail(const Provenance& p);
nlohmann::json provenance_to_json(const Provenance& p);

struct Candidate {
  NetworkArch arch;
  Provenance provenance;
};

// Applies an action without validating the result.
NetworkArch apply_grow(const NetworkArch& base, const GrowAction& action);
NetworkArch apply_trim(const NetworkArch& base, const TrimAction& action);

// Slots every block can offer a grown cell: min over blocks of cells + 1.
int grow_input_choices(const NetworkArch& base);

// Raw enumerations, before validation and deduplication.
std::vector<GrowAction> enumerate_grow_actions(const NetworkArch& base);
std::vector<TrimAction> enumerate_trim_actions(const NetworkArch& base);

struct TrimOptions {
  // Drop trims that end up with more weights than the base, which happens
  // when an identity forwards a wider tensor than the layer it replaced.
  bool require_param_reduction = true;
};

std::vector<Candidate> grow_candidates(const NetworkArch& base);
std::vector<Candidate> trim_candidates(const NetworkArch& base,
                                       const TrimOptions& options = {});

// grow ∪ trim, deduplicated by canonical key and sorted by canonical hash
// (ties by key).
std::vector<Candidate> generate_candidates(const NetworkArch& base,
                                           const TrimOptions& options = {});

struct SearchSpaceSizes {
  std::int64_t grow_size = 0;  // |I|^2 * |L|^2 * |C_raw|
  std::int64_t trim_size = 0;  // sum over blocks of l_i + c_i + e_i
  int input_choices = 0;       // |I|
  int op_choices = 0;          // |L|
  int combine_codes = 0;       // |C_raw|
  int combine_modes = 0;       // |C| as connection methods (sum, concat)
  // |I|^2 * |L|^2 * |C|^2 with |C| = combine_modes.
  std::int64_t literal_grow_size = 0;
};

SearchSpaceSizes search_space_sizes(const NetworkArch& base);

// Sorts by (canonical hash, canonical key) in place.
void sort_canonical(std::vector<Candidate>& candidates);
void sort_canonical(std::vector<NetworkArch>& archs);

}  // namespace growtrim

#endif  // GROWTRIM_CANDIDATES_H_
