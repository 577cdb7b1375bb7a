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

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>

#include "vgs/dsp/mfcc.hpp"

namespace vgs::dsp {

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a mono PCM-16 WAV file at 16 kHz.
RawAudio read_wav(const std::filesystem::path& path);

/// Writes mono PCM-16 little-endian samples.
void write_wav(const std::filesystem::path& path, std::span<const std::int16_t> samples,
               int sample_rate = kSampleRate);

/// Rounds and clamps [-1, 1] samples to PCM-16.
std::vector<std::int16_t> to_pcm16(std::span<const double> samples);

}  // namespace vgs::dsp
