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
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vgs/core/random.hpp"
#include "vgs/core/tensor.hpp"
#include "vgs/dsp/mfcc.hpp"
#include "vgs/model/image_raster.hpp"

namespace vgs::data {

namespace fs = std::filesystem;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split split);
Split parse_split(const std::string& text);

struct AlignedPair {
  std::string pair_id;
  fs::path audio_path;  // absolute after scanning
  fs::path image_path;
  Split split = Split::kTrain;
};

// ---- manifest -----------------------------------------------------------

/// Reads `manifest.csv` (or the given file) with header
/// `pair_id,audio_path,image_path,split`. Relative paths resolve against the
/// manifest's directory. Throws DatasetError naming the row for missing files,
/// duplicate ids, or malformed lines.
std::vector<AlignedPair> scan_manifest(const fs::path& manifest_or_dir);

/// Writes paths relative to the manifest's directory when possible.
void write_manifest(const fs::path& manifest, std::span<const AlignedPair> pairs);

std::vector<AlignedPair> select_split(std::span<const AlignedPair> pairs, Split split);

// ---- MFCC cache ---------------------------------------------------------

struct CacheReport {
  std::size_t computed = 0;
  std::size_t skipped = 0;
  std::size_t dropped = 0;
  std::vector<std::string> dropped_ids;  // over the frame cap
};

/// Cache entry location: `cache_root` mirrors the tree under `data_root`.
fs::path cache_path(const fs::path& cache_root, const fs::path& data_root, const fs::path& audio);

/// Computes MFCCs for every pair whose entry is missing or stale (source
/// changed or parameters differ). Clips above the frame cap are recorded as
/// dropped and never enter the dataset. Work is split over `threads` workers.
CacheReport build_mfcc_cache(std::span<const AlignedPair> pairs, const dsp::MfccParams& params,
                             const fs::path& data_root, const fs::path& cache_root,
                             std::size_t threads = 1);

/// Reads one entry. Throws DatasetError if the entry marks a dropped clip.
dsp::MfccSequence load_cached_mfcc(const fs::path& entry);
bool cached_entry_dropped(const fs::path& entry);

// ---- in-memory dataset and batches ---------------------------------------

struct PairItem {
  std::string pair_id;
  dsp::MfccSequence mfcc;
  model::ImageRaster image;
};

/// Loads cached MFCCs and decoded images. Pairs whose clip was dropped are
/// skipped; a missing cache entry is an error.
std::vector<PairItem> load_items(std::span<const AlignedPair> pairs, const fs::path& data_root,
                                 const fs::path& cache_root);

enum class BatchMode { kTrain, kEval };

struct Batch {
  core::Tensor<float> mfcc;    // [B, T_max, C], zero padded
  std::vector<std::size_t> lengths;
  core::Tensor<float> mask;    // [B, T_max], 1 on valid frames
  core::Tensor<float> images;  // [B, 3, S, S]
};

/// Training mode crops and flips images at random; evaluation mode center
/// crops.
Batch load_batch(std::span<const PairItem> items, std::span<const std::size_t> indices,
                 BatchMode mode, core::Rng& rng, std::size_t crop = 224);

// ---- synthetic data -----------------------------------------------------

struct SyntheticSpec {
  std::size_t n_classes = 16;
  std::size_t pairs_per_class = 25;
  std::size_t image_size = 256;
  double min_seconds = 0.6;
  double max_seconds = 1.8;
  double snr_db = 20.0;

  void validate() const;
};

/// Fundamental frequency of a class tone, geometric over [200, 3000] Hz.
double class_frequency(std::size_t cls, std::size_t n_classes);

/// Writes audio/, images/ and manifest.csv under `out_dir` and returns the
/// pairs. Same seed, same bytes. Splits are 80/10/10 within every class.
std::vector<AlignedPair> generate_synthetic(const SyntheticSpec& spec, const fs::path& out_dir,
                                            std::uint64_t seed);

}  // namespace vgs::data
