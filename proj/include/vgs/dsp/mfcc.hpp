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
#include <string>
#include <vector>

#include "vgs/core/tensor.hpp"

namespace vgs::dsp {

/// Longest MFCC sequence (in frames) admitted for training and evaluation.
inline constexpr std::size_t kMaxFrames = 8192;
inline constexpr int kSampleRate = 16000;

struct MfccParams {
  std::size_t n_fft = 400;
  std::size_t hop = 200;
  std::size_t n_mels = 128;
  std::size_t n_mfcc = 40;
  int sample_rate = kSampleRate;
  double f_min = 0.0;
  double f_max = 8000.0;
  double power_floor = 1e-10;

  std::size_t n_bins() const { return n_fft / 2 + 1; }
  /// Throws std::invalid_argument when the parameters are inconsistent.
  void validate() const;
};

/// Mono audio with samples scaled to [-1, 1].
struct RawAudio {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
};

/// T x n_mfcc coefficient matrix, row-major by frame.
struct MfccSequence {
  std::size_t frames = 0;
  std::size_t coeffs = 0;
  std::vector<float> data;
  std::string source_id;

  float at(std::size_t t, std::size_t c) const { return data[t * coeffs + c]; }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

/// Number of frames produced for a signal of `length` samples.
std::size_t frame_count(std::size_t length, const MfccParams& params);

/// Reflection-pads by n_fft/2 on both sides and cuts Hann-weighted windows of
/// n_fft samples every hop samples. Throws "empty audio" on an empty signal.
std::vector<std::vector<double>> frame_signal(const RawAudio& audio,
                                              const MfccParams& params);

/// Triangular filters with unit peak on the HTK mel scale, [n_mels, n_bins].
core::Tensor<double> mel_filterbank(const MfccParams& params);

/// Orthonormal DCT-II basis truncated to n_mfcc rows, [n_mfcc, n_mels].
core::Tensor<double> dct_matrix(const MfccParams& params);

/// Decibel mel spectrogram with the power floor applied, [T, n_mels].
core::Tensor<double> log_mel_spectrogram(const RawAudio& audio,
                                         const MfccParams& params);

MfccSequence mfcc(const RawAudio& audio, const MfccParams& params = {});

inline bool within_length_limit(const MfccSequence& seq) {
  return seq.frames <= kMaxFrames;
}

}  // namespace vgs::dsp
