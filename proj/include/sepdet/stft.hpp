// sepdet/stft.hpp

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

#include <complex>
#include <cstddef>
#include <vector>

#include "sepdet/errors.hpp"
#include "sepdet/fft.hpp"

namespace sepdet {

// Periodic Hann window.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n)));
  return w;
}

// frames x (fft_size/2 + 1) one-sided complex spectra.
struct Stft {
  std::vector<std::vector<std::complex<double>>> frames;
  std::size_t fft_size = 0;
  std::size_t hop = 0;
  std::size_t signal_len = 0;

  std::size_t num_frames() const { return frames.size(); }
  std::size_t num_bins() const { return fft_size / 2 + 1; }

  std::vector<std::vector<double>> magnitudes() const {
    std::vector<std::vector<double>> m(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
      m[f].resize(frames[f].size());
      for (std::size_t k = 0; k < frames[f].size(); ++k) m[f][k] = std::abs(frames[f][k]);
    }
    return m;
  }
};

// Analysis with centered frames (fft_size/2 zero padding on both ends).
inline Stft stft(const std::vector<double>& x, std::size_t fft_size, std::size_t hop) {
  if (!is_pow2(fft_size)) throw ConfigError("stft: fft_size must be a power of two");
  if (hop == 0 || hop > fft_size) throw ConfigError("stft: need 0 < hop <= fft_size");
  if (x.empty()) throw FormatError("stft: empty signal");
  const auto w = hann_window(fft_size);
  const std::size_t pad = fft_size / 2;
  const std::size_t padded = x.size() + 2 * pad;
  const std::size_t n_frames = (padded - fft_size) / hop + 1;
  Stft out;
  out.fft_size = fft_size;
  out.hop = hop;
  out.signal_len = x.size();
  out.frames.resize(n_frames);
  std::vector<std::complex<double>> buf(fft_size);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t start = f * hop;  // offset into padded signal
    for (std::size_t i = 0; i < fft_size; ++i) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(start + i) -
                                 static_cast<std::ptrdiff_t>(pad);
      const double v = (src >= 0 && src < static_cast<std::ptrdiff_t>(x.size()))
                           ? x[static_cast<std::size_t>(src)]
                           : 0.0;
      buf[i] = v * w[i];
    }
    fft_pow2(buf);
    out.frames[f].assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(fft_size / 2 + 1));
  }
  return out;
}

// Weighted overlap-add synthesis. With the matching analysis window this is a
// perfect-reconstruction pair for any COLA-satisfying hop.
inline std::vector<double> istft(const Stft& s) {
  const std::size_t fft_size = s.fft_size;
  const auto w = hann_window(fft_size);
  const std::size_t pad = fft_size / 2;
  const std::size_t padded = s.signal_len + 2 * pad;
  std::vector<double> acc(padded, 0.0), env(padded, 0.0);
  std::vector<std::complex<double>> buf(fft_size);
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    // Rebuild the full spectrum from the one-sided half.
    for (std::size_t k = 0; k <= fft_size / 2; ++k) buf[k] = s.frames[f][k];
    for (std::size_t k = fft_size / 2 + 1; k < fft_size; ++k)
      buf[k] = std::conj(buf[fft_size - k]);
    fft_pow2(buf, /*inverse=*/true);
    const std::size_t start = f * s.hop;
    for (std::size_t i = 0; i < fft_size && start + i < padded; ++i) {
      acc[start + i] += buf[i].real() * w[i];
      env[start + i] += w[i] * w[i];
    }
  }
  std::vector<double> y(s.signal_len, 0.0);
  for (std::size_t i = 0; i < s.signal_len; ++i) {
    const double e = env[pad + i];
    y[i] = e > 1e-12 ? acc[pad + i] / e : 0.0;
  }
  return y;
}

}  // namespace sepdet
