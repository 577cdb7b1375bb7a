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

#include "vgs/eval/retrieval.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace vgs::eval {

namespace {

void require_square(const core::Tensor<double>& m) {
  if (m.rank() != 2 || m.dim(0) != m.dim(1) || m.dim(0) == 0) {
    throw core::ShapeError("expected a non-empty square similarity matrix, got " +
                           core::shape_string(m.shape()));
  }
}

void require_k(std::size_t k, std::size_t q) {
  if (k < 1 || k > q) {
    throw std::out_of_range("k = " + std::to_string(k) + " outside [1, " + std::to_string(q) + "]");
  }
}

}  // namespace

template <typename S>
core::Tensor<double> similarity_matrix(const core::Tensor<S>& audio,
                                       const core::Tensor<S>& images) {
  if (audio.rank() != 2 || audio.shape() != images.shape()) {
    throw core::ShapeError("similarity_matrix expects matching [Q, N] inputs, got " +
                           core::shape_string(audio.shape()) + " and " +
                           core::shape_string(images.shape()));
  }
  const std::size_t q = audio.dim(0), n = audio.dim(1);
  core::Tensor<double> m({q, q});
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t i = 0; i < q; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        acc += static_cast<double>(audio[a * n + j]) * static_cast<double>(images[i * n + j]);
      m[a * q + i] = acc;
    }
  return m;
}

QueryRanks query_ranks(const core::Tensor<double>& m) {
  require_square(m);
  const std::size_t q = m.dim(0);
  QueryRanks r{std::vector<std::size_t>(q, 1), std::vector<std::size_t>(q, 1)};
  for (std::size_t a = 0; a < q; ++a) {
    const double truth = m[a * q + a];
    for (std::size_t o = 0; o < q; ++o) {
      if (o == a) continue;
      if (m[a * q + o] >= truth) ++r.speech_to_image[a];
      if (m[o * q + a] >= truth) ++r.image_to_speech[a];
    }
  }
  return r;
}

namespace {

std::pair<double, double> recall_from_ranks(const QueryRanks& r, std::size_t k) {
  const auto hits = [k](const std::vector<std::size_t>& ranks) {
    return static_cast<double>(std::count_if(ranks.begin(), ranks.end(),
                                             [k](std::size_t v) { return v <= k; })) /
           static_cast<double>(ranks.size());
  };
  return {hits(r.speech_to_image), hits(r.image_to_speech)};
}

}  // namespace

std::pair<double, double> recall_at_k(const core::Tensor<double>& m, std::size_t k) {
  require_square(m);
  require_k(k, m.dim(0));
  return recall_from_ranks(query_ranks(m), k);
}

template <typename S>
RecallReport evaluate_embeddings(const core::Tensor<S>& audio, const core::Tensor<S>& images,
                                 std::span<const std::size_t> ks) {
  const auto m = similarity_matrix(audio, images);
  RecallReport report;
  report.queries = m.dim(0);
  for (std::size_t k : ks) require_k(k, report.queries);
  report.ranks = query_ranks(m);
  for (std::size_t k : ks) report.r_at_k[k] = recall_from_ranks(report.ranks, k);
  return report;
}

void RecallReport::write_csv(std::ostream& out) const {
  out << "k,speech_to_image,image_to_speech\n";
  for (const auto& [k, v] : r_at_k) {
    out << k << ',' << std::setprecision(6) << v.first << ',' << v.second << '\n';
  }
}

void RecallReport::write_table(std::ostream& out) const {
  out << "queries: " << queries << '\n';
  out << std::left << std::setw(8) << "R@k" << std::setw(16) << "speech->image"
      << "image->speech\n";
  for (const auto& [k, v] : r_at_k) {
    out << std::left << std::setw(8) << ("R@" + std::to_string(k)) << std::setw(16)
        << std::fixed << std::setprecision(4) << v.first << v.second << '\n';
  }
  out.unsetf(std::ios::fixed);
}

void RecallReport::write_ranks_csv(std::ostream& out) const {
  out << "query,speech_to_image_rank,image_to_speech_rank\n";
  for (std::size_t q = 0; q < ranks.speech_to_image.size(); ++q) {
    out << q << ',' << ranks.speech_to_image[q] << ',' << ranks.image_to_speech[q] << '\n';
  }
}

template <typename S>
std::vector<Match> query(std::span<const S> probe, const core::Tensor<S>& gallery,
                         std::size_t k) {
  if (gallery.rank() != 2 || gallery.dim(1) != probe.size()) {
    throw core::ShapeError("query: probe of length " + std::to_string(probe.size()) +
                           " against gallery " + core::shape_string(gallery.shape()));
  }
  const std::size_t q = gallery.dim(0), n = gallery.dim(1);
  require_k(k, q);
  std::vector<Match> all(q);
  for (std::size_t r = 0; r < q; ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      acc += static_cast<double>(probe[j]) * static_cast<double>(gallery[r * n + j]);
    all[r] = {r, acc};
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Match& a, const Match& b) { return a.score > b.score; });
  all.resize(k);
  return all;
}

#define VGS_INSTANTIATE_EVAL(S)                                                             \
  template core::Tensor<double> similarity_matrix(const core::Tensor<S>&,                  \
                                                  const core::Tensor<S>&);                  \
  template RecallReport evaluate_embeddings(const core::Tensor<S>&, const core::Tensor<S>&, \
                                            std::span<const std::size_t>);                  \
  template std::vector<Match> query(std::span<const S>, const core::Tensor<S>&, std::size_t);

VGS_INSTANTIATE_EVAL(float)
VGS_INSTANTIATE_EVAL(double)

#undef VGS_INSTANTIATE_EVAL

}  // namespace vgs::eval
