// tests/testutil.hpp

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

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sepdet/audio.hpp"
#include "sepdet/flac_io.hpp"
#include "sepdet/rng.hpp"

namespace sepdet::test {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("sepdet_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::filesystem::path path() const { return dir_; }
  std::string str(const std::string& leaf = "") const {
    return leaf.empty() ? dir_.string() : (dir_ / leaf).string();
  }

 private:
  std::filesystem::path dir_;
};

inline AudioClip make_tone(double freq_hz, int rate, std::size_t n, double amp = 0.5) {
  AudioClip c;
  c.sample_rate = rate;
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    c.samples[i] = amp * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / rate);
  return c;
}

inline AudioClip make_white_noise(std::uint64_t seed, int rate, std::size_t n,
                                  double amp = 0.3) {
  Rng rng(seed);
  AudioClip c;
  c.sample_rate = rate;
  c.samples.resize(n);
  for (auto& s : c.samples) s = amp * std::max(-3.0, std::min(3.0, rng.normal())) / 3.0;
  return c;
}

// ---------------------------------------------------------------------------
// Minimal FLAC encoder for decoder tests. Emits fixed-blocksize streams with
// verbatim, constant or fixed-prediction subframes and Rice residuals.
// ---------------------------------------------------------------------------

class BitWriter {
 public:
  void put_bit(int b) {
    cur_ = static_cast<std::uint8_t>((cur_ << 1) | (b & 1));
    if (++nbits_ == 8) {
      bytes_.push_back(cur_);
      cur_ = 0;
      nbits_ = 0;
    }
  }
  void put_bits(std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) put_bit(static_cast<int>((v >> i) & 1));
  }
  void put_signed(std::int64_t v, int n) {
    put_bits(static_cast<std::uint64_t>(v) & ((n == 64) ? ~0ULL : ((1ULL << n) - 1)), n);
  }
  void align() {
    while (nbits_ != 0) put_bit(0);
  }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint8_t cur_ = 0;
  int nbits_ = 0;
};

enum class FlacSubframeKind { kVerbatim, kConstantOrVerbatim, kFixed };

inline void flac_write_utf8(BitWriter& bw, std::uint64_t v) {
  if (v < 0x80) {
    bw.put_bits(v, 8);
  } else if (v < 0x800) {
    bw.put_bits(0xC0 | (v >> 6), 8);
    bw.put_bits(0x80 | (v & 0x3F), 8);
  } else {
    bw.put_bits(0xE0 | (v >> 12), 8);
    bw.put_bits(0x80 | ((v >> 6) & 0x3F), 8);
    bw.put_bits(0x80 | (v & 0x3F), 8);
  }
}

inline void flac_write_subframe(BitWriter& bw, const std::vector<std::int32_t>& s,
                                int bps, FlacSubframeKind kind) {
  bw.put_bit(0);  // padding
  bool constant = kind != FlacSubframeKind::kVerbatim;
  for (std::size_t i = 1; constant && i < s.size(); ++i) constant = s[i] == s[0];
  if (kind == FlacSubframeKind::kConstantOrVerbatim && constant) {
    bw.put_bits(0, 6);
    bw.put_bit(0);
    bw.put_signed(s[0], bps);
    return;
  }
  if (kind == FlacSubframeKind::kFixed && s.size() > 2) {
    const int order = 2;
    bw.put_bits(8 + order, 6);  // fixed, order 2
    bw.put_bit(0);              // no wasted bits
    for (int i = 0; i < order; ++i) bw.put_signed(s[static_cast<std::size_t>(i)], bps);
    std::vector<std::int64_t> res(s.size() - order);
    double mean_mag = 0.0;
    for (std::size_t i = order; i < s.size(); ++i) {
      res[i - order] = static_cast<std::int64_t>(s[i]) - 2 * s[i - 1] + s[i - 2];
      mean_mag += std::abs(static_cast<double>(res[i - order]));
    }
    mean_mag /= static_cast<double>(res.size());
    int param = 0;
    while (param < 14 && (1 << param) < mean_mag) ++param;
    bw.put_bits(0, 2);      // rice method
    bw.put_bits(0, 4);      // partition order 0
    bw.put_bits(param, 4);  // rice parameter
    for (std::int64_t v : res) {
      const std::uint64_t u = (static_cast<std::uint64_t>(v) << 1) ^
                              static_cast<std::uint64_t>(v >> 63);
      const std::uint64_t q = u >> param;
      for (std::uint64_t i = 0; i < q; ++i) bw.put_bit(0);
      bw.put_bit(1);
      bw.put_bits(u & ((1ULL << param) - 1), param);
    }
    return;
  }
  bw.put_bits(1, 6);  // verbatim
  bw.put_bit(0);
  for (std::int32_t v : s) bw.put_signed(v, bps);
}

// channels: per-channel integer samples, all same length, within bps range.
inline std::vector<std::uint8_t> flac_encode(
    const std::vector<std::vector<std::int32_t>>& channels, int sample_rate,
    int bps = 16, int block_size = 1024,
    FlacSubframeKind kind = FlacSubframeKind::kVerbatim, bool left_side = false) {
  const std::size_t n = channels.at(0).size();
  BitWriter head;
  head.put_bits('f', 8);
  head.put_bits('L', 8);
  head.put_bits('a', 8);
  head.put_bits('C', 8);
  // STREAMINFO, last metadata block.
  head.put_bits(0x80, 8);
  head.put_bits(34, 24);
  head.put_bits(static_cast<std::uint64_t>(block_size), 16);
  head.put_bits(static_cast<std::uint64_t>(block_size), 16);
  head.put_bits(0, 24);
  head.put_bits(0, 24);
  head.put_bits(static_cast<std::uint64_t>(sample_rate), 20);
  head.put_bits(channels.size() - 1, 3);
  head.put_bits(static_cast<std::uint64_t>(bps - 1), 5);
  head.put_bits(n, 36);
  for (int i = 0; i < 16; ++i) head.put_bits(0, 8);

  std::vector<std::uint8_t> out = head.bytes();
  std::uint64_t frame_index = 0;
  for (std::size_t off = 0; off < n; off += static_cast<std::size_t>(block_size)) {
    const int bs = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(block_size), n - off));
    BitWriter fw;
    fw.put_bits(0x3FFE, 14);
    fw.put_bit(0);  // reserved
    fw.put_bit(0);  // fixed blocking
    fw.put_bits(7, 4);  // 16-bit block size follows
    fw.put_bits(0, 4);  // rate from STREAMINFO
    if (left_side && channels.size() == 2) fw.put_bits(8, 4);
    else fw.put_bits(channels.size() - 1, 4);
    fw.put_bits(4, 3);  // 16-bit samples
    fw.put_bit(0);
    flac_write_utf8(fw, frame_index++);
    fw.put_bits(static_cast<std::uint64_t>(bs - 1), 16);
    {
      const auto& hb = fw.bytes();
      fw.put_bits(sepdet::flac::crc8(hb.data(), hb.size()), 8);
    }
    for (std::size_t c = 0; c < channels.size(); ++c) {
      std::vector<std::int32_t> sub(channels[c].begin() + static_cast<std::ptrdiff_t>(off),
                                    channels[c].begin() + static_cast<std::ptrdiff_t>(off + bs));
      int ch_bps = bps;
      if (left_side && channels.size() == 2 && c == 1) {
        for (int i = 0; i < bs; ++i)
          sub[static_cast<std::size_t>(i)] =
              channels[0][off + static_cast<std::size_t>(i)] -
              channels[1][off + static_cast<std::size_t>(i)];
        ch_bps = bps + 1;
      }
      flac_write_subframe(fw, sub, ch_bps, kind);
    }
    fw.align();
    {
      const auto& fb = fw.bytes();
      fw.put_bits(sepdet::flac::crc16(fb.data(), fb.size()), 16);
    }
    out.insert(out.end(), fw.bytes().begin(), fw.bytes().end());
  }
  return out;
}

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& b) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

}  // namespace sepdet::test
