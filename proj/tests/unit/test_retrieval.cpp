// Copyright 2026 The vgsalign Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "vgs/eval/retrieval.hpp"

namespace core = vgs::core;
namespace eval = vgs::eval;
using core::Tensor;
using oracle::Vec;

namespace {

Tensor<double> random_matrix(std::size_t q, std::mt19937_64& rng, bool coarse) {
  Vec v = oracle::random_vec(q * q, rng);
  // coarse values force plenty of ties
  if (coarse)
    for (double& x : v) x = std::round(x * 3.0) / 3.0;
  return Tensor<double>({q, q}, v);
}

}  // namespace

TEST_CASE("similarity matrix") {
  Tensor<double> eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(eval::similarity_matrix(eye, eye).storage() == eye.storage());
  Tensor<double> one({1, 2}, {0.6, 0.8});
  CHECK(eval::similarity_matrix(one, one).shape() == core::Shape{1, 1});

  std::mt19937_64 rng(1);
  const std::size_t q = 7, n = 5;
  const Vec a = oracle::random_vec(q * n, rng), i = oracle::random_vec(q * n, rng);
  const auto m = eval::similarity_matrix(Tensor<double>({q, n}, a), Tensor<double>({q, n}, i));
  for (std::size_t r = 0; r < q; ++r)
    for (std::size_t c = 0; c < q; ++c)
      CHECK(std::abs(m[r * q + c] - oracle::dot(&a[r * n], &i[c * n], n)) <= 1e-12);
}

TEST_CASE("recall examples") {
  Tensor<double> eye({4, 4});
  for (std::size_t k = 0; k < 4; ++k) eye[k * 5] = 1.0;
  for (std::size_t k = 1; k <= 4; ++k) CHECK(eval::recall_at_k(eye, k) == std::pair{1.0, 1.0});

  Tensor<double> m({3, 3}, {.9, .1, .2, .8, .7, .3, .1, .2, .6});
  const auto [s2i, i2s] = eval::recall_at_k(m, 1);
  CHECK(s2i == doctest::Approx(2.0 / 3.0));
  // columns (.9,.8,.1), (.1,.7,.2), (.2,.3,.6) all peak on the diagonal
  CHECK(i2s == 1.0);
  const Vec mv(m.data().begin(), m.data().end());
  CHECK(oracle::recall(mv, 3, 1) == std::pair{2.0 / 3.0, 1.0});

  Tensor<double> tied({2, 2}, {0.5, 0.5, 0.5, 0.5});
  CHECK(eval::recall_at_k(tied, 1) == std::pair{0.0, 0.0});
  CHECK_THROWS_AS(eval::recall_at_k(m, 0), std::out_of_range);
  CHECK_THROWS_AS(eval::recall_at_k(m, 4), std::out_of_range);
}

TEST_CASE("recall agrees exactly with the sorting reference") {
  std::mt19937_64 rng(77);
  for (std::size_t q = 1; q <= 100; q += 3) {
    for (bool coarse : {false, true}) {
      const auto m = random_matrix(q, rng, coarse);
      const Vec mv(m.data().begin(), m.data().end());
      const auto ranks = eval::query_ranks(m);
      for (std::size_t i = 0; i < q; ++i) {
        CHECK(ranks.speech_to_image[i] == oracle::sorted_rank(mv, q, i, true));
        CHECK(ranks.image_to_speech[i] == oracle::sorted_rank(mv, q, i, false));
      }
      for (std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{10}, q}) {
        if (k > q) continue;
        CHECK(eval::recall_at_k(m, k) == oracle::recall(mv, q, k));
      }
    }
  }
}

TEST_CASE("recall properties") {
  std::mt19937_64 rng(5);
  const std::size_t q = 30;
  const auto m = random_matrix(q, rng, true);
  CHECK(eval::recall_at_k(m, q) == std::pair{1.0, 1.0});
  Tensor<double> t({q, q});
  for (std::size_t r = 0; r < q; ++r)
    for (std::size_t c = 0; c < q; ++c) t[c * q + r] = m[r * q + c];
  std::vector<std::size_t> perm(q);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor<double> p({q, q});
  for (std::size_t r = 0; r < q; ++r)
    for (std::size_t c = 0; c < q; ++c) p[r * q + c] = m[perm[r] * q + perm[c]];
  double prev_s = 0, prev_i = 0;
  for (std::size_t k = 1; k <= q; ++k) {
    const auto r = eval::recall_at_k(m, k);
    CHECK(r.second == eval::recall_at_k(t, k).first);
    CHECK(r == eval::recall_at_k(p, k));
    CHECK(r.first >= prev_s);
    CHECK(r.second >= prev_i);
    prev_s = r.first;
    prev_i = r.second;
  }
}

TEST_CASE("report and degenerate embeddings") {
  Tensor<float> same({2, 2}, {1, 0, 1, 0});
  const std::size_t ks[] = {1, 2};
  const auto rep = eval::evaluate_embeddings(same, same, ks);
  CHECK(rep.queries == 2);
  CHECK(rep.r_at_k.at(1) == std::pair{0.0, 0.0});
  CHECK(rep.r_at_k.at(2) == std::pair{1.0, 1.0});
  std::ostringstream csv, table, ranks;
  rep.write_csv(csv);
  rep.write_table(table);
  rep.write_ranks_csv(ranks);
  CHECK(csv.str() == "k,speech_to_image,image_to_speech\n1,0,0\n2,1,1\n");
  CHECK(table.str().find("R@2") != std::string::npos);
  CHECK(ranks.str() == "query,speech_to_image_rank,image_to_speech_rank\n0,2,2\n1,2,2\n");
  const std::size_t bad[] = {3};
  CHECK_THROWS_AS(eval::evaluate_embeddings(same, same, bad), std::out_of_range);
}

TEST_CASE("query ranking") {
  std::mt19937_64 rng(8);
  const std::size_t q = 40, n = 6;
  const Vec g = oracle::random_vec(q * n, rng);
  const Tensor<double> gallery({q, n}, g);
  const std::span<const double> row7(&g[7 * n], n);
  CHECK(eval::query<double>(row7, gallery, 1)[0].index == 7);

  const Vec probe = oracle::random_vec(n, rng);
  const auto full = eval::query<double>(probe, gallery, q);
  std::vector<std::pair<double, std::size_t>> want;
  for (std::size_t r = 0; r < q; ++r) want.emplace_back(-oracle::dot(probe.data(), &g[r * n], n), r);
  std::sort(want.begin(), want.end());
  REQUIRE(full.size() == q);
  for (std::size_t i = 0; i < q; ++i) CHECK(full[i].index == want[i].second);

  Tensor<double> flat({3, 1}, {1, 1, 1});
  const double one[] = {1.0};
  const auto tied = eval::query<double>(one, flat, 3);
  CHECK(tied[0].index == 0);
  CHECK(tied[1].index == 1);
  CHECK(tied[2].index == 2);
  CHECK_THROWS_AS(eval::query<double>(one, flat, 4), std::out_of_range);
}
