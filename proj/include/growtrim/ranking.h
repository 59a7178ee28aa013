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

// Top-k agreement between a predicted and a true ordering of candidates.

#ifndef GROWTRIM_RANKING_H_
#define GROWTRIM_RANKING_H_

#include <cstdint>
#include <vector>

namespace growtrim {

// Candidate ids, best first.
struct RankingPair {
  std::vector<int> predicted_order;
  std::vector<int> true_order;
};

// Orders ids 0..n-1 by score, highest first; equal scores fall back to
// tie_keys ascending, then id.
std::vector<int> order_by_score(const std::vector<double>& scores,
                                const std::vector<std::uint64_t>& tie_keys);

RankingPair make_ranking_pair(const std::vector<double>& predicted,
                              const std::vector<double>& measured,
                              const std::vector<std::uint64_t>& tie_keys);

// Throws InvalidArgument unless both orders are permutations of one id set.
void check_ranking_pair(const RankingPair& pair);

// |predicted top-k ∩ true top-k| / k. Throws KTooLarge when k exceeds the
// set size and InvalidArgument when k < 1.
double ap_at_k(const RankingPair& pair, int k);

// Binary relevance (an item is relevant iff it is in the true top-k),
// discount 1/log2(i+1) at 1-based position i, normalized by the ideal DCG.
double ndcg_at_k(const RankingPair& pair, int k);

}  // namespace growtrim

#endif  // GROWTRIM_RANKING_H_
