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

#include "growtrim/ranking.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include "growtrim/errors.h"

namespace growtrim {

namespace {

void check_k(const RankingPair& pair, int k) {
  check_ranking_pair(pair);
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (static_cast<std::size_t>(k) > pair.true_order.size()) {
    throw KTooLarge("k = " + std::to_string(k) + " exceeds the set size " +
                    std::to_string(pair.true_order.size()));
  }
}

std::unordered_set<int> true_top(const RankingPair& pair, int k) {
  return {pair.true_order.begin(), pair.true_order.begin() + k};
}

}  // namespace

std::vector<int> order_by_score(const std::vector<double>& scores,
                                const std::vector<std::uint64_t>& tie_keys) {
  if (!tie_keys.empty() && tie_keys.size() != scores.size()) {
    throw InvalidArgument("one tie key per score is required");
  }
  std::vector<int> ids(scores.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    const auto ua = static_cast<std::size_t>(a);
    const auto ub = static_cast<std::size_t>(b);
    if (scores[ua] != scores[ub]) return scores[ua] > scores[ub];
    if (!tie_keys.empty() && tie_keys[ua] != tie_keys[ub]) {
      return tie_keys[ua] < tie_keys[ub];
    }
    return a < b;
  });
  return ids;
}

RankingPair make_ranking_pair(const std::vector<double>& predicted,
                              const std::vector<double>& measured,
                              const std::vector<std::uint64_t>& tie_keys) {
  if (predicted.size() != measured.size()) {
    throw InvalidArgument("predicted and measured scores differ in length");
  }
  return {order_by_score(predicted, tie_keys), order_by_score(measured, tie_keys)};
}

void check_ranking_pair(const RankingPair& pair) {
  if (pair.predicted_order.size() != pair.true_order.size()) {
    throw InvalidArgument("orders have different lengths");
  }
  std::unordered_set<int> ids(pair.true_order.begin(), pair.true_order.end());
  if (ids.size() != pair.true_order.size()) {
    throw InvalidArgument("true order has duplicate ids");
  }
  std::unordered_set<int> seen;
  for (int id : pair.predicted_order) {
    if (!ids.count(id) || !seen.insert(id).second) {
      throw InvalidArgument("predicted order is not a permutation of the ids");
    }
  }
}

double ap_at_k(const RankingPair& pair, int k) {
  check_k(pair, k);
  const auto relevant = true_top(pair, k);
  int hits = 0;
  for (int i = 0; i < k; ++i) {
    hits += relevant.count(pair.predicted_order[static_cast<std::size_t>(i)]) ? 1 : 0;
  }
  return static_cast<double>(hits) / k;
}

double ndcg_at_k(const RankingPair& pair, int k) {
  check_k(pair, k);
  const auto relevant = true_top(pair, k);
  double dcg = 0.0;
  double ideal = 0.0;
  for (int i = 1; i <= k; ++i) {
    const double discount = 1.0 / std::log2(i + 1.0);
    ideal += discount;
    if (relevant.count(pair.predicted_order[static_cast<std::size_t>(i - 1)])) {
      dcg += discount;
    }
  }
  return dcg / ideal;
}

}  // namespace growtrim
