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

#include <algorithm>

#include "vgs/data/dataset.hpp"

namespace vgs::data {

Batch load_batch(std::span<const PairItem> items, std::span<const std::size_t> indices,
                 BatchMode mode, core::Rng& rng, std::size_t crop) {
  if (indices.empty()) throw DatasetError("load_batch: empty batch");
  std::size_t longest = 0, coeffs = 0;
  for (std::size_t i : indices) {
    if (i >= items.size()) throw DatasetError("load_batch: index out of range");
    longest = std::max(longest, items[i].mfcc.frames);
    coeffs = items[i].mfcc.coeffs;
  }
  const std::size_t b = indices.size();
  Batch batch;
  batch.mfcc = core::Tensor<float>({b, longest, coeffs});
  batch.mask = core::Tensor<float>({b, longest});
  std::vector<model::ImageRaster> crops;
  crops.reserve(b);
  for (std::size_t r = 0; r < b; ++r) {
    const auto& item = items[indices[r]];
    if (item.mfcc.coeffs != coeffs) throw DatasetError("load_batch: coefficient count mismatch");
    std::copy(item.mfcc.data.begin(), item.mfcc.data.end(), batch.mfcc.ptr() + r * longest * coeffs);
    std::fill_n(batch.mask.ptr() + r * longest, item.mfcc.frames, 1.0f);
    batch.lengths.push_back(item.mfcc.frames);
    crops.push_back(mode == BatchMode::kTrain ? model::augment_train(item.image, rng, crop)
                                              : model::preprocess_eval(item.image, crop));
  }
  batch.images = model::stack_images<float>(crops);
  return batch;
}

}  // namespace vgs::data
