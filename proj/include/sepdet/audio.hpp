// sepdet/audio.hpp

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
#include <cstddef>
#include <string>
#include <vector>

#include "sepdet/errors.hpp"
#include "sepdet/rng.hpp"

namespace sepdet {

// Canonical processing rate. Everything is resampled to this on load.
inline constexpr int kCanonicalRate = 16000;

// Default detector window length in samples (2 s at 16 kHz).
inline constexpr std::size_t kDefaultSegmentLen = 32000;

// Mono waveform. Samples are expected to stay within [-1, 1]; loaders clamp.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kCanonicalRate;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct Segment {
  std::vector<double> samples;  // exactly segment_len entries
  std::string source_id;
  std::size_t offset = 0;  // sample index in the source clip
};

enum class SegmentMode { kTrainRandomCrop, kEvalTiled };

// Scales so the peak magnitude is 1. All-zero input is returned unchanged.
inline AudioClip peak_normalize(const AudioClip& clip) {
  if (clip.samples.empty()) throw FormatError("peak_normalize: empty clip");
  double peak = 0.0;
  for (double s : clip.samples) peak = std::max(peak, std::abs(s));
  if (peak == 0.0) return clip;
  AudioClip out = clip;
  const double g = 1.0 / peak;
  for (double& s : out.samples) s *= g;
  return out;
}

// TrainRandomCrop: one uniformly random window (tail zero-padded when the clip
// is shorter than segment_len). EvalTiled: ceil(len/segment_len) non-overlapping
// tiles, last tile zero-padded. Concatenating the tiles and truncating to the
// source length reproduces the clip exactly.
inline std::vector<Segment> segment_clip(const AudioClip& clip, std::size_t segment_len,
                                         SegmentMode mode, Rng* rng = nullptr,
                                         const std::string& source_id = "") {
  if (segment_len < 1) throw ConfigError("segment_len must be >= 1");
  const std::size_t n = clip.samples.size();
  std::vector<Segment> out;
  if (mode == SegmentMode::kTrainRandomCrop) {
    Segment seg;
    seg.source_id = source_id;
    seg.samples.assign(segment_len, 0.0);
    if (n <= segment_len) {
      seg.offset = 0;
      std::copy(clip.samples.begin(), clip.samples.end(), seg.samples.begin());
    } else {
      if (rng == nullptr) throw ConfigError("TrainRandomCrop requires an Rng");
      seg.offset = static_cast<std::size_t>(
          rng->uniform_int(0, static_cast<std::int64_t>(n - segment_len)));
      std::copy(clip.samples.begin() + seg.offset,
                clip.samples.begin() + seg.offset + segment_len, seg.samples.begin());
    }
    out.push_back(std::move(seg));
    return out;
  }
  const std::size_t tiles = n == 0 ? 1 : (n + segment_len - 1) / segment_len;
  out.reserve(tiles);
  for (std::size_t t = 0; t < tiles; ++t) {
    Segment seg;
    seg.source_id = source_id;
    seg.offset = t * segment_len;
    seg.samples.assign(segment_len, 0.0);
    const std::size_t take = std::min(segment_len, n - seg.offset);
    std::copy(clip.samples.begin() + seg.offset,
              clip.samples.begin() + seg.offset + take, seg.samples.begin());
    out.push_back(std::move(seg));
  }
  return out;
}

namespace detail {

// Blackman-Harris four-term window over [-1, 1].
inline double bh_window(double t) {
  if (t <= -1.0 || t >= 1.0) return 0.0;
  const double x = M_PI * (t + 1.0);  // [0, 2pi]
  return 0.35875 - 0.48829 * std::cos(x) + 0.14128 * std::cos(2.0 * x) -
         0.01168 * std::cos(3.0 * x);
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(x) / x;
}

}  // namespace detail

// Band-limited resampling with a windowed-sinc kernel. Per-output weight
// normalization keeps DC flat and tames the edges.
inline AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw ConfigError("target_rate must be positive");
  if (clip.sample_rate <= 0) throw FormatError("clip has invalid sample rate");
  if (clip.sample_rate == target_rate) return clip;
  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  // Cutoff in cycles per input sample, kept below both Nyquist rates.
  const double fc = 0.475 * std::min(1.0, ratio);
  const double half_width = 24.0 / (2.0 * fc);
  const std::size_t n_in = clip.samples.size();
  const std::size_t n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in) * ratio));
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.assign(std::max<std::size_t>(n_out, 1), 0.0);
  for (std::size_t j = 0; j < out.samples.size(); ++j) {
    const double t = static_cast<double>(j) / ratio;
    const std::ptrdiff_t lo =
        static_cast<std::ptrdiff_t>(std::ceil(t - half_width));
    const std::ptrdiff_t hi =
        static_cast<std::ptrdiff_t>(std::floor(t + half_width));
    double acc = 0.0, wsum = 0.0;
    for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, 0);
         i <= std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(n_in) - 1);
         ++i) {
      const double d = t - static_cast<double>(i);
      const double w = 2.0 * fc * detail::sinc(2.0 * M_PI * fc * d) *
                       detail::bh_window(d / half_width);
      acc += w * clip.samples[static_cast<std::size_t>(i)];
      wsum += w;
    }
    out.samples[j] = wsum > 1e-12 ? acc / wsum : 0.0;
  }
  return out;
}

}  // namespace sepdet
