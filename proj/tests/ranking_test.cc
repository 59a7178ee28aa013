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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "growtrim/errors.h"
#include "growtrim/ranking.h"
#include "growtrim/rng.h"

namespace growtrim {
namespace {

// Independent versions: relevance by position lookup in the true order.
double brute_ap(const RankingPair& p, int k) {
  int hits = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) hits += p.predicted_order[i] == p.true_order[j];
  }
  return hits / static_cast<double>(k);
}

double brute_ndcg(const RankingPair& p, int k) {
  std::vector<int> true_rank(p.true_order.size());
  for (std::size_t i = 0; i < p.true_order.size(); ++i) true_rank[p.true_order[i]] = static_cast<int>(i);
  double dcg = 0, ideal = 0;
  for (int i = 0; i < k; ++i) {
    const double d = std::log(2.0) / std::log(i + 2.0);
    ideal += d;
    if (true_rank[p.predicted_order[i]] < k) dcg += d;
  }
  return dcg / ideal;
}

void shuffle_range(Rng& rng, std::vector<int>& v, int lo, int hi) {
  std::vector<int> part(v.begin() + lo, v.begin() + hi);
  rng.shuffle(part);
  std::copy(part.begin(), part.end(), v.begin() + lo);
}

std::vector<int> iota_ids(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

TEST(ApAtK, Examples) {
  RankingPair same{{0, 1, 2, 3}, {0, 1, 2, 3}};
  EXPECT_EQ(ap_at_k(same, 2), 1.0);
  RankingPair disjoint{{2, 3, 0, 1}, {0, 1, 2, 3}};
  EXPECT_EQ(ap_at_k(disjoint, 2), 0.0);
  // A=0 B=1 C=2
  RankingPair half{{0, 1, 2}, {0, 2, 1}};
  EXPECT_EQ(ap_at_k(half, 2), 0.5);
}

TEST(NdcgAtK, Examples) {
  RankingPair same{{4, 2, 0, 1, 3}, {4, 2, 0, 1, 3}};
  for (int k = 1; k <= 5; ++k) EXPECT_DOUBLE_EQ(ndcg_at_k(same, k), 1.0);
  RankingPair late{{2, 3, 0, 1}, {0, 1, 2, 3}};
  EXPECT_EQ(ndcg_at_k(late, 2), 0.0);
  // Relevant items at predicted positions 1 and 3 of 3.
  RankingPair p{{0, 2, 1}, {0, 1, 2}};
  EXPECT_NEAR(ndcg_at_k(p, 2), 1.0 / (1.0 + 1.0 / std::log2(3.0)), 1e-15);
  EXPECT_NEAR(ndcg_at_k(p, 2), 0.6131471927654584, 1e-15);
}

TEST(Ranking, KBounds) {
  RankingPair p{{0, 1, 2}, {2, 1, 0}};
  EXPECT_THROW(ap_at_k(p, 4), KTooLarge);
  EXPECT_THROW(ndcg_at_k(p, 4), KTooLarge);
  EXPECT_THROW(ap_at_k(p, 0), InvalidArgument);
  EXPECT_NO_THROW(ap_at_k(p, 3));
  EXPECT_EQ(ap_at_k(p, 3), 1.0);
}

TEST(Ranking, MalformedPairs) {
  EXPECT_THROW(ap_at_k({{0, 1}, {0, 1, 2}}, 1), InvalidArgument);
  EXPECT_THROW(ap_at_k({{0, 0, 1}, {0, 1, 2}}, 1), InvalidArgument);
  EXPECT_THROW(ap_at_k({{0, 1, 3}, {0, 1, 2}}, 1), InvalidArgument);
  EXPECT_THROW(ndcg_at_k({{0, 1, 2}, {0, 1, 1}}, 1), InvalidArgument);
}

TEST(Ranking, AgreesWithBruteForce) {
  Rng rng(17);
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(200));
    RankingPair p{iota_ids(n), iota_ids(n)};
    rng.shuffle(p.predicted_order);
    rng.shuffle(p.true_order);
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const double ap = ap_at_k(p, k);
    const double nd = ndcg_at_k(p, k);
    EXPECT_DOUBLE_EQ(ap, brute_ap(p, k));
    EXPECT_NEAR(nd, brute_ndcg(p, k), 1e-12);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
    EXPECT_GE(nd, 0.0);
    EXPECT_LE(nd, 1.0 + 1e-12);
  }
}

TEST(Ranking, OneIffIdeal) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(30));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    RankingPair p{iota_ids(n), iota_ids(n)};
    rng.shuffle(p.true_order);
    p.predicted_order = p.true_order;
    // Shuffle inside the top-k and inside the tail: AP and NDCG stay 1.
    shuffle_range(rng, p.predicted_order, 0, k);
    shuffle_range(rng, p.predicted_order, k, n);
    EXPECT_EQ(ap_at_k(p, k), 1.0);
    EXPECT_NEAR(ndcg_at_k(p, k), 1.0, 1e-12);
    if (k < n) {
      std::swap(p.predicted_order[k - 1], p.predicted_order[k]);
      EXPECT_LT(ap_at_k(p, k), 1.0);
      EXPECT_LT(ndcg_at_k(p, k), 1.0);
    }
  }
}

TEST(Ranking, ApIgnoresOrderInsideTopAndTail) {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(50));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    RankingPair p{iota_ids(n), iota_ids(n)};
    rng.shuffle(p.predicted_order);
    rng.shuffle(p.true_order);
    const double before = ap_at_k(p, k);
    shuffle_range(rng, p.predicted_order, 0, k);
    shuffle_range(rng, p.predicted_order, k, n);
    EXPECT_EQ(ap_at_k(p, k), before);
  }
}

TEST(OrderByScore, TiesFallBackToKeysThenIds) {
  EXPECT_EQ(order_by_score({0.5, 0.9, 0.5, 0.1}, {}), (std::vector<int>{1, 0, 2, 3}));
  EXPECT_EQ(order_by_score({0.5, 0.9, 0.5, 0.1}, {7, 1, 3, 0}),
            (std::vector<int>{1, 2, 0, 3}));
  EXPECT_THROW(order_by_score({0.5, 0.9}, {1}), InvalidArgument);
  const RankingPair p = make_ranking_pair({1, 2, 3}, {3, 2, 1}, {});
  EXPECT_EQ(p.predicted_order, (std::vector<int>{2, 1, 0}));
  EXPECT_EQ(p.true_order, (std::vector<int>{0, 1, 2}));
  EXPECT_THROW(make_ranking_pair({1, 2}, {1}, {}), InvalidArgument);
}

}  // namespace
}  // namespace growtrim
