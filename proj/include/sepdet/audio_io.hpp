// sepdet/audio_io.hpp

// Copyright 2026 the sepdet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "sepdet/audio.hpp"
#include "sepdet/errors.hpp"
#include "sepdet/flac_io.hpp"
#include "sepdet/wav_io.hpp"

namespace sepdet {

// Loads a WAV (PCM 16-bit / float 32-bit) or FLAC file, averages channels to
// mono, clamps to [-1, 1] and resamples to target_rate.
inline AudioClip load_audio(const std::string& path, int target_rate = kCanonicalRate) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path);
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open " + path);
  char magic[4] = {0};
  probe.read(magic, 4);
  probe.close();

  RawAudio raw;
  if (std::memcmp(magic, "RIFF", 4) == 0) {
    raw = read_wav(path);
  } else if (std::memcmp(magic, "fLaC", 4) == 0) {
    raw = read_flac(path);
  } else {
    throw FormatError(path + ": unsupported codec");
  }
  if (raw.channels.empty() || raw.channels[0].empty())
    throw FormatError(path + ": empty audio");

  AudioClip clip;
  clip.sample_rate = raw.sample_rate;
  const std::size_t n = raw.channels[0].size();
  clip.samples.assign(n, 0.0);
  const double inv_ch = 1.0 / static_cast<double>(raw.channels.size());
  for (const auto& ch : raw.channels) {
    if (ch.size() != n) throw FormatError(path + ": ragged channel lengths");
    for (std::size_t i = 0; i < n; ++i) clip.samples[i] += ch[i];
  }
  for (double& s : clip.samples) {
    s *= inv_ch;
    if (!std::isfinite(s)) throw FormatError(path + ": non-finite sample");
    s = std::min(1.0, std::max(-1.0, s));
  }
  if (clip.sample_rate != target_rate) {
    clip = resample(clip, target_rate);
    for (double& s : clip.samples) s = std::min(1.0, std::max(-1.0, s));
  }
  return clip;
}

inline void save_audio(const std::string& path, const AudioClip& clip) {
  write_wav(path, clip);
}

}  // namespace sepdet
