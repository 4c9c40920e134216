// sepdet/separation.hpp

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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "sepdet/audio.hpp"
#include "sepdet/audio_io.hpp"
#include "sepdet/errors.hpp"
#include "sepdet/stft.hpp"

namespace sepdet {

// Spectral-gating separator settings. The gate suppresses time-frequency
// cells toward a per-bin noise floor estimated as a low percentile of the
// magnitude across frames.
struct SeparatorConfig {
  std::size_t fft_size = 512;
  std::size_t hop = 128;
  std::string window = "hann";
  double noise_percentile = 0.10;
  double oversubtraction = 1.5;  // beta
  double gain_floor = 0.05;

  void validate() const {
    if (!is_pow2(fft_size)) throw ConfigError("separator: fft_size must be a power of two");
    if (hop == 0 || hop > fft_size) throw ConfigError("separator: need 0 < hop <= fft_size");
    if (window != "hann") throw ConfigError("separator: unsupported window " + window);
    if (!(noise_percentile > 0.0 && noise_percentile < 1.0))
      throw ConfigError("separator: noise_percentile must be in (0,1)");
    if (!(oversubtraction > 0.0)) throw ConfigError("separator: oversubtraction must be > 0");
    if (!(gain_floor >= 0.0 && gain_floor < 1.0))
      throw ConfigError("separator: gain_floor must be in [0,1)");
  }
};

// x = speech + noise, with noise defined as the residual x - speech, so the
// decomposition is exact by construction.
struct SeparationResult {
  AudioClip speech;
  AudioClip noise;
  std::string separator_id;
};

// Per-bin magnitude at the given percentile across frames, with linear
// interpolation between order statistics (index p*(n-1)).
inline std::vector<double> estimate_noise_floor(
    const std::vector<std::vector<double>>& stft_magnitudes, double percentile) {
  if (stft_magnitudes.empty()) throw FormatError("estimate_noise_floor: no frames");
  if (!(percentile > 0.0 && percentile < 1.0))
    throw ConfigError("estimate_noise_floor: percentile must be in (0,1)");
  const std::size_t n_frames = stft_magnitudes.size();
  const std::size_t n_bins = stft_magnitudes[0].size();
  std::vector<double> floor_vec(n_bins, 0.0);
  std::vector<double> col(n_frames);
  for (std::size_t k = 0; k < n_bins; ++k) {
    for (std::size_t f = 0; f < n_frames; ++f) col[f] = stft_magnitudes[f][k];
    std::sort(col.begin(), col.end());
    const double idx = percentile * static_cast<double>(n_frames - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, n_frames - 1);
    const double frac = idx - static_cast<double>(lo);
    floor_vec[k] = col[lo] + (col[hi] - col[lo]) * frac;
  }
  return floor_vec;
}

// G = clamp(1 - beta*floor/|X|, gain_floor, 1); zero-magnitude cells get the
// floor gain.
inline std::vector<std::vector<double>> spectral_gain(
    const std::vector<std::vector<double>>& magnitudes, const std::vector<double>& floor_vec,
    double beta, double gain_floor) {
  std::vector<std::vector<double>> gain(magnitudes.size());
  for (std::size_t f = 0; f < magnitudes.size(); ++f) {
    const auto& mag = magnitudes[f];
    if (mag.size() != floor_vec.size())
      throw ConfigError("spectral_gain: floor/magnitude shape mismatch");
    gain[f].resize(mag.size());
    for (std::size_t k = 0; k < mag.size(); ++k) {
      double g;
      if (mag[k] <= 0.0) {
        g = gain_floor;
      } else {
        g = 1.0 - beta * floor_vec[k] / mag[k];
        g = std::min(1.0, std::max(gain_floor, g));
      }
      gain[f][k] = g;
    }
  }
  return gain;
}

class SpectralGatingSeparator {
 public:
  explicit SpectralGatingSeparator(SeparatorConfig cfg = {}) : cfg_(cfg) {
    cfg_.validate();
  }

  const SeparatorConfig& config() const { return cfg_; }

  SeparationResult separate(const AudioClip& x) const {
    if (x.samples.size() < cfg_.fft_size)
      throw FormatError("separate: clip shorter than one FFT frame");
    Stft spec = stft(x.samples, cfg_.fft_size, cfg_.hop);
    const auto mags = spec.magnitudes();
    const auto floor_vec = estimate_noise_floor(mags, cfg_.noise_percentile);
    const auto gain = spectral_gain(mags, floor_vec, cfg_.oversubtraction, cfg_.gain_floor);
    for (std::size_t f = 0; f < spec.frames.size(); ++f)
      for (std::size_t k = 0; k < spec.frames[f].size(); ++k) spec.frames[f][k] *= gain[f][k];
    SeparationResult out;
    out.separator_id = "gate";
    out.speech.sample_rate = x.sample_rate;
    out.speech.samples = istft(spec);
    out.noise.sample_rate = x.sample_rate;
    out.noise.samples.resize(x.samples.size());
    for (std::size_t i = 0; i < x.samples.size(); ++i)
      out.noise.samples[i] = x.samples[i] - out.speech.samples[i];
    return out;
  }

 private:
  SeparatorConfig cfg_;
};

// Bridges pretrained separators that live outside this codebase. Either runs
// a shell command that must produce a speech-estimate file, or looks up
// pre-separated estimates in a directory keyed by utterance id.
struct ExternalSeparatorAdapter {
  std::string id = "EXT";
  // Command mode: template with {input} and {output} placeholders; must write
  // the speech estimate to {output} as WAV or FLAC.
  std::string command;
  // Directory mode: <dir>/<utt_id>.wav holding speech estimates.
  std::string speech_dir;
  std::string work_dir;  // scratch space for command mode
  // Length mismatches up to this fraction of the input are corrected by
  // truncation/zero-padding; larger ones are adapter errors.
  double max_length_mismatch = 0.01;
};

namespace detail {

inline std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  std::size_t p = 0;
  while ((p = s.find(from, p)) != std::string::npos) {
    s.replace(p, from.size(), to);
    p += to.size();
  }
  return s;
}

}  // namespace detail

// Runs the adapter for one clip. The speech estimate is resampled to the clip
// rate and length-matched; noise is the residual, keeping x = s + n exact.
inline SeparationResult external_separate(const AudioClip& x,
                                          const ExternalSeparatorAdapter& adapter,
                                          const std::string& utt_id) {
  namespace fs = std::filesystem;
  std::string speech_path;
  if (!adapter.speech_dir.empty()) {
    speech_path = (fs::path(adapter.speech_dir) / (utt_id + ".wav")).string();
    if (!fs::exists(speech_path)) {
      const std::string flac_path =
          (fs::path(adapter.speech_dir) / (utt_id + ".flac")).string();
      if (fs::exists(flac_path)) speech_path = flac_path;
    }
    if (!fs::exists(speech_path))
      throw AdapterError("missing speech estimate for " + utt_id + " under " +
                         adapter.speech_dir);
  } else if (!adapter.command.empty()) {
    const fs::path work = adapter.work_dir.empty() ? fs::temp_directory_path()
                                                   : fs::path(adapter.work_dir);
    fs::create_directories(work);
    const std::string in_path = (work / (utt_id + ".in.wav")).string();
    const std::string out_path = (work / (utt_id + ".speech.wav")).string();
    std::error_code ec;
    fs::remove(out_path, ec);
    write_wav(in_path, x);
    std::string cmd = detail::replace_all(adapter.command, "{input}", in_path);
    cmd = detail::replace_all(cmd, "{output}", out_path);
    const int rc = std::system(cmd.c_str());
    if (rc != 0)
      throw AdapterError("separator command failed (exit " + std::to_string(rc) +
                         "): " + cmd);
    if (!fs::exists(out_path))
      throw AdapterError("separator command produced no output: " + cmd);
    speech_path = out_path;
  } else {
    throw AdapterError("adapter has neither command nor speech_dir configured");
  }

  AudioClip s = load_audio(speech_path, x.sample_rate);
  const std::size_t want = x.samples.size();
  const std::size_t got = s.samples.size();
  const std::size_t mismatch = want > got ? want - got : got - want;
  if (static_cast<double>(mismatch) >
      adapter.max_length_mismatch * static_cast<double>(want)) {
    throw AdapterError("speech estimate for " + utt_id + " is " + std::to_string(got) +
                       " samples, expected " + std::to_string(want));
  }
  s.samples.resize(want, 0.0);

  SeparationResult out;
  out.separator_id = adapter.id;
  out.speech = std::move(s);
  out.noise.sample_rate = x.sample_rate;
  out.noise.samples.resize(want);
  for (std::size_t i = 0; i < want; ++i)
    out.noise.samples[i] = x.samples[i] - out.speech.samples[i];
  return out;
}

}  // namespace sepdet
