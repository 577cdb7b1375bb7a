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

#include <cmath>
#include <filesystem>
#include <numbers>

#include "oracles.hpp"
#include "vgs/dsp/mfcc.hpp"
#include "vgs/dsp/wav.hpp"

namespace dsp = vgs::dsp;

namespace {

dsp::RawAudio tone(double hz, std::size_t n, double amp = 1.0) {
  dsp::RawAudio a;
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    a.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / 16000.0);
  return a;
}

dsp::RawAudio noise(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  dsp::RawAudio a;
  a.samples = oracle::random_vec(n, rng, -0.5, 0.5);
  return a;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

double max_rel_vs_oracle(const dsp::RawAudio& a, const dsp::MfccParams& p = {}) {
  oracle::MfccRef ref;
  ref.n_mels = p.n_mels;
  ref.n_mfcc = p.n_mfcc;
  const auto want = ref.mfcc(a.samples);
  const auto got = dsp::mfcc(a, p);
  REQUIRE(got.frames == want.size());
  double worst = 0;
  for (std::size_t t = 0; t < got.frames; ++t)
    for (std::size_t c = 0; c < got.coeffs; ++c) worst = std::max(worst, rel_err(got.at(t, c), want[t][c]));
  return worst;
}

}  // namespace

TEST_CASE("frame count follows the padding/hop formula") {
  const dsp::MfccParams p;
  for (std::size_t len = 1; len <= 2000; ++len) {
    REQUIRE(dsp::frame_count(len, p) == oracle::enumerate_frames(len, 400, 200));
  }
  CHECK(dsp::frame_signal(dsp::RawAudio{std::vector<double>(16000, 0.1)}, p).size() == 81);
  CHECK(dsp::frame_signal(dsp::RawAudio{std::vector<double>(200, 0.1)}, p).size() == 2);
  CHECK(dsp::frame_signal(dsp::RawAudio{std::vector<double>(1, 0.1)}, p).size() == 1);
  for (const auto& w : dsp::frame_signal(dsp::RawAudio{std::vector<double>(777, 0.0)}, p))
    for (double v : w) CHECK(v == 0.0);
  CHECK_THROWS_WITH(dsp::frame_signal(dsp::RawAudio{}, p), "empty audio");
  dsp::RawAudio wrong{std::vector<double>(10, 0.0), 8000};
  CHECK_THROWS(dsp::frame_signal(wrong, p));
}

TEST_CASE("reflection padding mirrors without repeating the edge") {
  dsp::MfccParams p;
  std::vector<double> ramp(600);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  const auto frames = dsp::frame_signal(dsp::RawAudio{ramp}, p);
  const auto win = dsp::hann_window(400);
  // first window covers padded positions -200..199; position j maps to |j - 200|
  for (std::size_t j = 1; j < 400; ++j) {
    const double src = std::abs(static_cast<double>(j) - 200.0);
    CHECK(frames[0][j] == doctest::Approx(src * win[j]));
  }
}

TEST_CASE("hann window is periodic") {
  const auto w = dsp::hann_window(400);
  CHECK(w[0] == 0.0);
  CHECK(w[200] == doctest::Approx(1.0));
  CHECK(w[100] == doctest::Approx(w[300]));
}

TEST_CASE("silence produces the analytic floor cepstrum") {
  const auto seq = dsp::mfcc(dsp::RawAudio{std::vector<double>(16000, 0.0)});
  REQUIRE(seq.frames == 81);
  REQUIRE(seq.coeffs == 40);
  const double c0 = 10.0 * std::log10(1e-10) * std::sqrt(1.0 / 128.0) * 128.0;
  for (std::size_t t = 0; t < seq.frames; ++t) {
    CHECK(seq.at(t, 0) == doctest::Approx(c0).epsilon(1e-7));
    for (std::size_t c = 1; c < 40; ++c) CHECK(std::abs(seq.at(t, c)) <= 1e-4);
  }
}

TEST_CASE("pipeline matches the direct-DFT oracle") {
  CHECK(max_rel_vs_oracle(dsp::RawAudio{std::vector<double>(4000, 0.0)}) <= 1e-6);
  CHECK(max_rel_vs_oracle(tone(1000.0, 4000)) <= 1e-6);
  CHECK(max_rel_vs_oracle(noise(42, 3000)) <= 1e-6);
  dsp::MfccParams small;
  small.n_mels = 40;
  small.n_mfcc = 13;
  CHECK(max_rel_vs_oracle(noise(7, 1500), small) <= 1e-6);
}

TEST_CASE("1 kHz tone energy sits in the filters around 1 kHz") {
  const dsp::MfccParams p;
  const auto logmel = dsp::log_mel_spectrogram(tone(1000.0, 16000), p);
  // Filter centers on the mel grid.
  const double top = dsp::hz_to_mel(8000.0);
  double inside = 0, total = 0;
  for (std::size_t m = 0; m < p.n_mels; ++m) {
    const double center = dsp::mel_to_hz(top * static_cast<double>(m + 1) / 129.0);
    const bool near = std::abs(center - 1000.0) <= 80.0;
    for (std::size_t t = 0; t < logmel.dim(0); ++t) {
      const double e = std::pow(10.0, logmel[t * p.n_mels + m] / 10.0);
      total += e;
      if (near) inside += e;
    }
  }
  CHECK(inside / total >= 0.9);
}

TEST_CASE("length cap is inclusive at 8192 frames") {
  dsp::MfccSequence s;
  s.frames = 8192;
  CHECK(dsp::within_length_limit(s));
  s.frames = 8193;
  CHECK_FALSE(dsp::within_length_limit(s));
  s.frames = 1;
  CHECK(dsp::within_length_limit(s));
}

TEST_CASE("mfcc is deterministic and finite") {
  const auto a = noise(3, 5000);
  const auto x = dsp::mfcc(a), y = dsp::mfcc(a);
  CHECK(x.data == y.data);
  dsp::RawAudio loud{std::vector<double>(3000, 1.0)};
  loud.samples[17] = -1.0;
  for (const auto& in : {a, loud, dsp::RawAudio{std::vector<double>(1, 0.0)}}) {
    for (float v : dsp::mfcc(in).data) CHECK(std::isfinite(v));
  }
}

TEST_CASE("amplitude scaling shifts the log-mel spectrum by 20 log10(c)") {
  const dsp::MfccParams p;
  const auto a = noise(11, 4000);
  const double c = 3.0;
  dsp::RawAudio b = a;
  for (auto& v : b.samples) v *= c;
  const auto la = dsp::log_mel_spectrogram(a, p), lb = dsp::log_mel_spectrogram(b, p);
  const double shift = 10.0 * std::log10(c * c);
  const double floor_db = 10.0 * std::log10(p.power_floor);
  std::size_t floored = 0;
  for (std::size_t i = 0; i < la.size(); ++i) {
    if (la[i] <= floor_db) {
      // empty filters stay at the floor
      CHECK(lb[i] == la[i]);
      ++floored;
    } else {
      CHECK(lb[i] - la[i] == doctest::Approx(shift).epsilon(1e-9));
    }
  }
  // Low filters narrower than one FFT bin never receive energy at 128 mels.
  CHECK(floored > 0);

  // With a filterbank that has no empty filters, only c0 moves.
  dsp::MfccParams q;
  q.n_mels = 40;
  q.n_mfcc = 20;
  const auto ma = dsp::mfcc(a, q), mb = dsp::mfcc(b, q);
  for (std::size_t t = 0; t < ma.frames; ++t) {
    CHECK(mb.at(t, 0) - ma.at(t, 0) == doctest::Approx(shift * std::sqrt(40.0)).epsilon(1e-4));
    for (std::size_t k = 1; k < q.n_mfcc; ++k)
      CHECK(std::abs(mb.at(t, k) - ma.at(t, k)) <= 1e-3);
  }
}

TEST_CASE("wav round trip") {
  const auto path = std::filesystem::temp_directory_path() / "vgs_wav_roundtrip.wav";
  std::vector<std::int16_t> pcm{0, 1000, -32768, 32767, -1};
  dsp::write_wav(path, pcm);
  const auto a = dsp::read_wav(path);
  REQUIRE(a.samples.size() == pcm.size());
  for (std::size_t i = 0; i < pcm.size(); ++i) CHECK(a.samples[i] == pcm[i] / 32768.0);
  CHECK(dsp::to_pcm16(a.samples) == pcm);
  dsp::write_wav(path, pcm, 8000);
  CHECK_THROWS_AS(dsp::read_wav(path), dsp::WavError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(dsp::read_wav(path), dsp::WavError);
}
