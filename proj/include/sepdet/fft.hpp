// sepdet/fft.hpp

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
#include <complex>
#include <cstddef>
#include <vector>

#include "sepdet/errors.hpp"

namespace sepdet {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 FFT. Size must be a power of two.
// inverse=true applies the conjugate transform and the 1/N scale.
inline void fft_pow2(std::vector<std::complex<double>>& a, bool inverse = false) {
  const std::size_t n = a.size();
  if (n == 0) throw FormatError("fft of empty vector");
  if (!is_pow2(n)) throw FormatError("fft size must be a power of two");
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv_n;
  }
}

// DFT of a real sequence at one frequency (Hz). O(n); meant for probes and
// test oracles, not bulk transforms.
inline std::complex<double> dft_at(const std::vector<double>& x, double freq_hz,
                                   double sample_rate) {
  std::complex<double> acc(0.0, 0.0);
  const double w = -2.0 * M_PI * freq_hz / sample_rate;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i] * std::complex<double>(std::cos(w * static_cast<double>(i)),
                                       std::sin(w * static_cast<double>(i)));
  }
  return acc;
}

// Index of the largest-magnitude bin in [1, n/2) of the real signal's DFT.
inline std::size_t dominant_bin(const std::vector<double>& x) {
  std::size_t n = next_pow2(x.size());
  std::vector<std::complex<double>> a(n, {0.0, 0.0});
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
  fft_pow2(a);
  std::size_t best = 1;
  double best_mag = 0.0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    const double m = std::abs(a[k]);
    if (m > best_mag) {
      best_mag = m;
      best = k;
    }
  }
  return best;
}

// Frequency (Hz) of the dominant DFT bin, using the zero-padded pow2 grid.
inline double dominant_frequency_hz(const std::vector<double>& x, double sample_rate) {
  const std::size_t n = next_pow2(x.size());
  return static_cast<double>(dominant_bin(x)) * sample_rate / static_cast<double>(n);
}

// Mean energy of the band [lo_hz, hi_hz) computed from a pow2 zero-padded DFT.
inline double band_energy(const std::vector<double>& x, double sample_rate,
                          double lo_hz, double hi_hz) {
  const std::size_t n = next_pow2(x.size());
  std::vector<std::complex<double>> a(n, {0.0, 0.0});
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
  fft_pow2(a);
  const double bin_hz = sample_rate / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f >= lo_hz && f < hi_hz) acc += std::norm(a[k]);
  }
  return acc / static_cast<double>(n);
}

}  // namespace sepdet
