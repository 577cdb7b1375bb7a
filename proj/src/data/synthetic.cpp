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
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "vgs/data/dataset.hpp"
#include "vgs/dsp/wav.hpp"
#include "vgs/io/image_io.hpp"

namespace vgs::data {

namespace {

constexpr std::size_t kShapes = 4;
constexpr std::array<std::array<float, 3>, 8> kPalette{{{0.85f, 0.10f, 0.10f},
                                                        {0.10f, 0.55f, 0.15f},
                                                        {0.10f, 0.20f, 0.85f},
                                                        {0.90f, 0.75f, 0.05f},
                                                        {0.60f, 0.10f, 0.70f},
                                                        {0.05f, 0.70f, 0.75f},
                                                        {0.95f, 0.45f, 0.05f},
                                                        {0.15f, 0.15f, 0.15f}}};

std::string pad(std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, v);
  return buf;
}

// Four on/off beats; never all off.
std::array<bool, 4> rhythm(std::size_t cls) {
  const std::size_t bits = (cls * 7 + 3) % 15 + 1;
  return {(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0, (bits & 8) != 0};
}

std::vector<std::int16_t> synth_audio(std::size_t cls, const SyntheticSpec& spec,
                                      std::mt19937_64& rng) {
  const double rate = dsp::kSampleRate;
  std::uniform_real_distribution<double> dur(spec.min_seconds, spec.max_seconds);
  std::uniform_real_distribution<double> jitter(-0.015, 0.015);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double seconds = dur(rng);
  const double f0 = class_frequency(cls, spec.n_classes) * (1.0 + jitter(rng));
  const double ph = phase(rng);
  const auto beats = rhythm(cls);
  const auto n = static_cast<std::size_t>(seconds * rate);
  std::vector<double> x(n, 0.0);
  const double beat_len = static_cast<double>(n) / 4.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto beat = std::min<std::size_t>(3, static_cast<std::size_t>(static_cast<double>(i) / beat_len));
    if (!beats[beat]) continue;
    // short raised-cosine ramps at beat edges
    const double pos = static_cast<double>(i) - static_cast<double>(beat) * beat_len;
    const double ramp = std::min(1.0, std::min(pos, beat_len - pos) / (0.01 * rate));
    const double t = static_cast<double>(i) / rate;
    const double w = 2.0 * std::numbers::pi * f0 * t + ph;
    x[i] = ramp * (std::sin(w) + 0.3 * std::sin(2.0 * w));
  }
  double power = 0.0;
  for (double v : x) power += v * v;
  power /= static_cast<double>(n);
  std::normal_distribution<double> noise(0.0, std::sqrt(power / std::pow(10.0, spec.snr_db / 10.0)));
  double peak = 1e-12;
  for (double& v : x) {
    v += noise(rng);
    peak = std::max(peak, std::abs(v));
  }
  for (double& v : x) v *= 0.8 / peak;
  return dsp::to_pcm16(x);
}

model::ImageRaster synth_image(std::size_t cls, const SyntheticSpec& spec, std::mt19937_64& rng) {
  const std::size_t s = spec.image_size;
  const double side = static_cast<double>(s);
  std::uniform_real_distribution<double> center(0.4 * side, 0.6 * side);
  std::uniform_real_distribution<double> radius(0.18 * side, 0.3 * side);
  std::uniform_real_distribution<float> shade(-0.05f, 0.05f);
  std::uniform_real_distribution<float> bg_noise(-0.03f, 0.03f);
  const double cx = center(rng), cy = center(rng), r = radius(rng);
  const std::size_t shape = cls % kShapes;
  auto color = kPalette[(cls / kShapes) % kPalette.size()];
  for (float& c : color) c = std::clamp(c + shade(rng), 0.0f, 1.0f);
  const float bg = 0.85f + shade(rng);

  model::ImageRaster img{s, s, std::vector<float>(3 * s * s)};
  for (std::size_t y = 0; y < s; ++y)
    for (std::size_t x = 0; x < s; ++x) {
      const double dx = (static_cast<double>(x) + 0.5 - cx) / r;
      const double dy = (static_cast<double>(y) + 0.5 - cy) / r;
      bool inside = false;
      switch (shape) {
        case 0: inside = dx * dx + dy * dy <= 1.0; break;
        case 1: inside = std::abs(dx) <= 0.85 && std::abs(dy) <= 0.85; break;
        case 2: inside = dy <= 0.8 && dy >= -1.0 + 1.8 * std::abs(dx); break;
        default: inside = (std::abs(dx) <= 0.3 && std::abs(dy) <= 1.0) ||
                          (std::abs(dy) <= 0.3 && std::abs(dx) <= 1.0);
      }
      const float n = bg_noise(rng);
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = inside ? color[c] : bg;
        img.pixels[(c * s + y) * s + x] = std::clamp(v + n, 0.0f, 1.0f);
      }
    }
  return img;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_classes < 2 || n_classes > kShapes * kPalette.size()) {
    throw std::invalid_argument("synthetic class count must be in [2, 32]");
  }
  if (pairs_per_class < 1) throw std::invalid_argument("need at least one pair per class");
  if (image_size < 224) throw std::invalid_argument("synthetic images must be at least 224 pixels");
  if (!(min_seconds >= 0.5 && max_seconds <= 2.0 && min_seconds <= max_seconds)) {
    throw std::invalid_argument("synthetic durations must lie in [0.5 s, 2 s]");
  }
}

double class_frequency(std::size_t cls, std::size_t n_classes) {
  if (n_classes < 2) return 200.0;
  return 200.0 * std::pow(15.0, static_cast<double>(cls) / static_cast<double>(n_classes - 1));
}

std::vector<AlignedPair> generate_synthetic(const SyntheticSpec& spec, const fs::path& out_dir,
                                            std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  const fs::path root = fs::absolute(out_dir);
  std::vector<AlignedPair> pairs;
  std::size_t leftover = 0;  // alternates the odd held-out item between val and test
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    const std::size_t n = spec.pairs_per_class;
    const auto train = static_cast<std::size_t>(std::lround(0.8 * static_cast<double>(n)));
    const std::size_t held = n - train;
    const std::size_t val = held / 2 + ((held % 2 != 0 && leftover++ % 2 == 0) ? 1 : 0);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Split> splits(n, Split::kTest);
    for (std::size_t k = 0; k < n; ++k) {
      if (k < train) splits[order[k]] = Split::kTrain;
      else if (k < train + val) splits[order[k]] = Split::kVal;
    }
    const std::string cdir = "class_" + pad(c, 2);
    for (std::size_t i = 0; i < n; ++i) {
      AlignedPair p;
      p.pair_id = "c" + pad(c, 2) + "_" + pad(i, 3);
      p.audio_path = root / "audio" / cdir / (p.pair_id + ".wav");
      p.image_path = root / "images" / cdir / (p.pair_id + ".png");
      p.split = splits[i];
      fs::create_directories(p.audio_path.parent_path());
      dsp::write_wav(p.audio_path, synth_audio(c, spec, rng));
      io::write_png(p.image_path, synth_image(c, spec, rng));
      pairs.push_back(std::move(p));
    }
  }
  write_manifest(root / "manifest.csv", pairs);
  return pairs;
}

}  // namespace vgs::data
