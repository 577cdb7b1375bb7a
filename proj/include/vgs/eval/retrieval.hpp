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

#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vgs/core/tensor.hpp"

namespace vgs::eval {

/// M[q][r] = audio_q . image_r for [Q, N] embedding matrices.
template <typename S>
core::Tensor<double> similarity_matrix(const core::Tensor<S>& audio, const core::Tensor<S>& images);

/// 1-based rank of the true counterpart for each speech query (rows) and each
/// image query (columns). The true item loses every tie.
struct QueryRanks {
  std::vector<std::size_t> speech_to_image;
  std::vector<std::size_t> image_to_speech;
};
QueryRanks query_ranks(const core::Tensor<double>& m);

/// (speech->image, image->speech) recall at k. Requires 1 <= k <= Q.
std::pair<double, double> recall_at_k(const core::Tensor<double>& m, std::size_t k);

struct RecallReport {
  std::size_t queries = 0;
  std::map<std::size_t, std::pair<double, double>> r_at_k;
  QueryRanks ranks;

  void write_csv(std::ostream& out) const;
  void write_table(std::ostream& out) const;
  void write_ranks_csv(std::ostream& out) const;
};

/// Recall report for aligned embedding rows. Every k must lie in [1, Q].
template <typename S>
RecallReport evaluate_embeddings(const core::Tensor<S>& audio, const core::Tensor<S>& images,
                                 std::span<const std::size_t> ks);

struct Match {
  std::size_t index;
  double score;
};

/// Top-k gallery rows by dot product with `probe`, best first; equal scores
/// keep gallery order. Requires 1 <= k <= Q.
template <typename S>
std::vector<Match> query(std::span<const S> probe, const core::Tensor<S>& gallery, std::size_t k);

}  // namespace vgs::eval
