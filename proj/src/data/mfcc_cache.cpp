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

#include <atomic>
#include <chrono>
#include <mutex>
#include <sstream>
#include <thread>

#include "vgs/data/dataset.hpp"
#include "vgs/dsp/wav.hpp"
#include "vgs/io/image_io.hpp"
#include "vgs/io/tensor_file.hpp"

namespace vgs::data {

namespace {

std::string params_text(const dsp::MfccParams& p) {
  std::ostringstream s;
  s << "mfcc n_fft=" << p.n_fft << " hop=" << p.hop << " n_mels=" << p.n_mels
    << " n_mfcc=" << p.n_mfcc << " rate=" << p.sample_rate << " f_min=" << p.f_min
    << " f_max=" << p.f_max << " floor=" << p.power_floor;
  return s.str();
}

std::string source_stamp(const fs::path& audio) {
  const auto t = fs::last_write_time(audio).time_since_epoch();
  return std::to_string(fs::file_size(audio)) + ":" +
         std::to_string(std::chrono::duration_cast<std::chrono::nanoseconds>(t).count());
}

bool up_to_date(const fs::path& entry, const std::string& fp, const std::string& stamp) {
  if (!fs::is_regular_file(entry)) return false;
  try {
    const auto h = io::load_tensor_header(entry);
    return h.fingerprint == fp && h.has_meta("source") && h.get_meta("source") == stamp;
  } catch (const io::TensorFileError&) {
    return false;
  }
}

}  // namespace

fs::path cache_path(const fs::path& cache_root, const fs::path& data_root, const fs::path& audio) {
  fs::path rel = fs::absolute(audio).lexically_relative(fs::absolute(data_root));
  if (rel.empty() || *rel.begin() == "..") rel = fs::absolute(audio).relative_path();
  rel += ".mfcc";
  return cache_root / rel;
}

CacheReport build_mfcc_cache(std::span<const AlignedPair> pairs, const dsp::MfccParams& params,
                             const fs::path& data_root, const fs::path& cache_root,
                             std::size_t threads) {
  params.validate();
  const std::string fp = io::fingerprint(params_text(params));
  CacheReport report;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;

  auto work = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      const auto& pair = pairs[i];
      try {
        const fs::path entry = cache_path(cache_root, data_root, pair.audio_path);
        const std::string stamp = source_stamp(pair.audio_path);
        if (up_to_date(entry, fp, stamp)) {
          const bool dropped = cached_entry_dropped(entry);
          std::lock_guard lock(mu);
          if (dropped) {
            ++report.dropped;
            report.dropped_ids.push_back(pair.pair_id);
          } else {
            ++report.skipped;
          }
          continue;
        }
        const auto seq = dsp::mfcc(dsp::read_wav(pair.audio_path), params);
        io::TensorFile f;
        f.fingerprint = fp;
        f.set_meta("source", stamp);
        f.set_meta("frames", std::to_string(seq.frames));
        const bool keep = dsp::within_length_limit(seq);
        f.set_meta("dropped", keep ? "0" : "1");
        if (keep) f.add_tensor("mfcc", core::Tensor<float>({seq.frames, seq.coeffs}, seq.data));
        io::save_tensor_file(entry, f);
        std::lock_guard lock(mu);
        if (keep) {
          ++report.computed;
        } else {
          ++report.dropped;
          report.dropped_ids.push_back(pair.pair_id);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = pairs.size();
      }
    }
  };

  const std::size_t n = std::max<std::size_t>(1, std::min(threads, pairs.size()));
  if (n == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(report.dropped_ids.begin(), report.dropped_ids.end());
  return report;
}

bool cached_entry_dropped(const fs::path& entry) {
  const auto h = io::load_tensor_header(entry);
  return h.has_meta("dropped") && h.get_meta("dropped") == "1";
}

dsp::MfccSequence load_cached_mfcc(const fs::path& entry) {
  const auto f = io::load_tensor_file(entry);
  if (f.has_meta("dropped") && f.get_meta("dropped") == "1") {
    throw DatasetError(entry.string() + ": clip exceeds the frame cap and was dropped");
  }
  const auto& t = f.tensor("mfcc");
  if (t.rank() != 2) throw DatasetError(entry.string() + ": malformed MFCC entry");
  dsp::MfccSequence seq;
  seq.frames = t.dim(0);
  seq.coeffs = t.dim(1);
  seq.data.assign(t.data().begin(), t.data().end());
  seq.source_id = entry.string();
  return seq;
}

std::vector<PairItem> load_items(std::span<const AlignedPair> pairs, const fs::path& data_root,
                                 const fs::path& cache_root) {
  std::vector<PairItem> items;
  for (const auto& p : pairs) {
    const fs::path entry = cache_path(cache_root, data_root, p.audio_path);
    if (!fs::is_regular_file(entry)) {
      throw DatasetError("no cached MFCC for " + p.pair_id + " (expected " + entry.string() +
                         "); run preprocess first");
    }
    if (cached_entry_dropped(entry)) continue;
    PairItem item;
    item.pair_id = p.pair_id;
    item.mfcc = load_cached_mfcc(entry);
    item.mfcc.source_id = p.pair_id;
    item.image = io::read_image(p.image_path);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace vgs::data
