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

#include "vgs/dsp/mfcc.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace vgs::dsp {
namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Real-to-complex transform of one n_fft window, returning |X_k|^2.
class PowerSpectrum {
 public:
  explicit PowerSpectrum(std::size_t n_fft)
      : n_(n_fft),
        in_(fftw_alloc_real(n_fft), &fftw_free),
        out_(fftw_alloc_complex(n_fft / 2 + 1), &fftw_free) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), in_.get(), out_.get(),
                                 FFTW_ESTIMATE);
    if (!plan_) throw std::runtime_error("fftw: plan creation failed");
  }
  ~PowerSpectrum() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  PowerSpectrum(const PowerSpectrum&) = delete;
  PowerSpectrum& operator=(const PowerSpectrum&) = delete;

  void operator()(const std::vector<double>& frame, double* power) {
    std::copy(frame.begin(), frame.end(), in_.get());
    fftw_execute(plan_);
    for (std::size_t k = 0; k <= n_ / 2; ++k) {
      power[k] = out_.get()[k][0] * out_.get()[k][0] + out_.get()[k][1] * out_.get()[k][1];
    }
  }

 private:
  std::size_t n_;
  std::unique_ptr<double, decltype(&fftw_free)> in_;
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> out_;
  fftw_plan plan_ = nullptr;
};

std::size_t reflect_index(std::ptrdiff_t i, std::size_t length) {
  if (length == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (length - 1));
  std::ptrdiff_t m = ((i % period) + period) % period;
  if (m >= static_cast<std::ptrdiff_t>(length)) m = period - m;
  return static_cast<std::size_t>(m);
}

}  // namespace

void MfccParams::validate() const {
  if (n_fft < 2 || n_fft % 2 != 0) throw std::invalid_argument("n_fft must be even and >= 2");
  if (hop != n_fft / 2) throw std::invalid_argument("hop must equal n_fft / 2");
  if (n_mels == 0 || n_mfcc == 0 || n_mfcc > n_mels) {
    throw std::invalid_argument("need 0 < n_mfcc <= n_mels");
  }
  if (sample_rate != kSampleRate) throw std::invalid_argument("sample rate must be 16000");
  if (!(f_min >= 0.0 && f_max > f_min && f_max <= sample_rate / 2.0)) {
    throw std::invalid_argument("mel band must satisfy 0 <= f_min < f_max <= nyquist");
  }
  if (!(power_floor > 0.0)) throw std::invalid_argument("power floor must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

std::size_t frame_count(std::size_t length, const MfccParams& params) {
  return length / params.hop + 1;
}

std::vector<std::vector<double>> frame_signal(const RawAudio& audio,
                                              const MfccParams& params) {
  params.validate();
  if (audio.samples.empty()) throw std::invalid_argument("empty audio");
  if (audio.sample_rate != params.sample_rate) {
    throw std::invalid_argument("audio sample rate " + std::to_string(audio.sample_rate) +
                                " does not match " + std::to_string(params.sample_rate));
  }
  const std::size_t length = audio.samples.size();
  const auto pad = static_cast<std::ptrdiff_t>(params.n_fft / 2);
  const std::vector<double> window = hann_window(params.n_fft);
  const std::size_t count = frame_count(length, params);
  std::vector<std::vector<double>> frames(count, std::vector<double>(params.n_fft));
  for (std::size_t t = 0; t < count; ++t) {
    const auto start = static_cast<std::ptrdiff_t>(t * params.hop) - pad;
    for (std::size_t j = 0; j < params.n_fft; ++j) {
      const std::size_t src = reflect_index(start + static_cast<std::ptrdiff_t>(j), length);
      frames[t][j] = audio.samples[src] * window[j];
    }
  }
  return frames;
}

core::Tensor<double> mel_filterbank(const MfccParams& params) {
  params.validate();
  const std::size_t bins = params.n_bins();
  const double mel_lo = hz_to_mel(params.f_min);
  const double mel_hi = hz_to_mel(params.f_max);
  std::vector<double> edges(params.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                    static_cast<double>(params.n_mels + 1);
    edges[i] = mel_to_hz(mel);
  }
  core::Tensor<double> fb({params.n_mels, bins});
  const double nyquist = params.sample_rate / 2.0;
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = nyquist * static_cast<double>(k) / static_cast<double>(bins - 1);
    for (std::size_t m = 0; m < params.n_mels; ++m) {
      const double down = (f - edges[m]) / (edges[m + 1] - edges[m]);
      const double up = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
      fb[m * bins + k] = std::max(0.0, std::min(down, up));
    }
  }
  return fb;
}

core::Tensor<double> dct_matrix(const MfccParams& params) {
  const std::size_t n = params.n_mels;
  core::Tensor<double> basis({params.n_mfcc, n});
  for (std::size_t k = 0; k < params.n_mfcc; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / static_cast<double>(n))
                            : std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      basis[k * n + i] = s * std::cos(std::numbers::pi / static_cast<double>(n) *
                                      (static_cast<double>(i) + 0.5) *
                                      static_cast<double>(k));
    }
  }
  return basis;
}

core::Tensor<double> log_mel_spectrogram(const RawAudio& audio, const MfccParams& params) {
  const auto frames = frame_signal(audio, params);
  const core::Tensor<double> fb = mel_filterbank(params);
  const std::size_t bins = params.n_bins();
  core::Tensor<double> out({frames.size(), params.n_mels});
  std::vector<double> power(bins);
  PowerSpectrum spectrum(params.n_fft);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    spectrum(frames[t], power.data());
    for (std::size_t m = 0; m < params.n_mels; ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < bins; ++k) acc += fb[m * bins + k] * power[k];
      out[t * params.n_mels + m] = 10.0 * std::log10(std::max(acc, params.power_floor));
    }
  }
  return out;
}

MfccSequence mfcc(const RawAudio& audio, const MfccParams& params) {
  const core::Tensor<double> logmel = log_mel_spectrogram(audio, params);
  const core::Tensor<double> dct = dct_matrix(params);
  const std::size_t frames = logmel.dim(0);
  const std::size_t n = params.n_mels;
  MfccSequence seq;
  seq.frames = frames;
  seq.coeffs = params.n_mfcc;
  seq.data.resize(frames * params.n_mfcc);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < params.n_mfcc; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += dct[k * n + i] * logmel[t * n + i];
      seq.data[t * params.n_mfcc + k] = static_cast<float>(acc);
    }
  }
  return seq;
}

}  // namespace vgs::dsp
