// sepdet/flac_io.hpp

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

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "sepdet/errors.hpp"
#include "sepdet/wav_io.hpp"

// Native FLAC decoder covering the streams produced by common encoders:
// constant, verbatim, fixed and LPC subframes, Rice/Rice2 residual coding,
// wasted bits, and the four stereo channel assignments. Decode only.

namespace sepdet {
namespace flac {

inline std::uint8_t crc8(const std::uint8_t* data, std::size_t len) {
  std::uint8_t crc = 0;
  for (std::size_t i = 0; i < len; ++i) {
    crc ^= data[i];
    for (int b = 0; b < 8; ++b)
      crc = (crc & 0x80) ? static_cast<std::uint8_t>((crc << 1) ^ 0x07)
                         : static_cast<std::uint8_t>(crc << 1);
  }
  return crc;
}

inline std::uint16_t crc16(const std::uint8_t* data, std::size_t len) {
  std::uint16_t crc = 0;
  for (std::size_t i = 0; i < len; ++i) {
    crc ^= static_cast<std::uint16_t>(data[i]) << 8;
    for (int b = 0; b < 8; ++b)
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x8005)
                           : static_cast<std::uint16_t>(crc << 1);
  }
  return crc;
}

class BitReader {
 public:
  BitReader(const std::uint8_t* data, std::size_t len) : data_(data), len_(len) {}

  bool eof() const { return byte_ >= len_ && bit_ == 0; }
  std::size_t byte_pos() const { return byte_; }
  bool aligned() const { return bit_ == 0; }

  std::uint64_t read_bits(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | read_bit();
    return v;
  }

  std::int64_t read_signed(int n) {
    if (n == 0) return 0;
    std::uint64_t v = read_bits(n);
    const std::uint64_t sign = 1ULL << (n - 1);
    if (v & sign) return static_cast<std::int64_t>(v) - (1LL << n);
    return static_cast<std::int64_t>(v);
  }

  // Zero run length before the terminating 1 bit.
  std::uint32_t read_unary() {
    std::uint32_t q = 0;
    while (read_bit() == 0) ++q;
    return q;
  }

  void align() { if (bit_ != 0) { bit_ = 0; ++byte_; } }

 private:
  std::uint32_t read_bit() {
    if (byte_ >= len_) throw FormatError("flac: unexpected end of stream");
    const std::uint32_t b = (data_[byte_] >> (7 - bit_)) & 1;
    if (++bit_ == 8) {
      bit_ = 0;
      ++byte_;
    }
    return b;
  }

  const std::uint8_t* data_;
  std::size_t len_;
  std::size_t byte_ = 0;
  int bit_ = 0;
};

struct StreamInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  std::uint64_t total_samples = 0;
};

namespace detail {

inline std::uint64_t read_utf8_number(BitReader& br, bool long_form) {
  const std::uint64_t b0 = br.read_bits(8);
  if ((b0 & 0x80) == 0) return b0;
  int follow = 0;
  std::uint64_t v = 0;
  if ((b0 & 0xE0) == 0xC0) { follow = 1; v = b0 & 0x1F; }
  else if ((b0 & 0xF0) == 0xE0) { follow = 2; v = b0 & 0x0F; }
  else if ((b0 & 0xF8) == 0xF0) { follow = 3; v = b0 & 0x07; }
  else if ((b0 & 0xFC) == 0xF8) { follow = 4; v = b0 & 0x03; }
  else if ((b0 & 0xFE) == 0xFC) { follow = 5; v = b0 & 0x01; }
  else if (long_form && b0 == 0xFE) { follow = 6; v = 0; }
  else throw FormatError("flac: bad coded number");
  for (int i = 0; i < follow; ++i) {
    const std::uint64_t b = br.read_bits(8);
    if ((b & 0xC0) != 0x80) throw FormatError("flac: bad coded number continuation");
    v = (v << 6) | (b & 0x3F);
  }
  return v;
}

inline void decode_residual(BitReader& br, int order, int block_size,
                            std::vector<std::int64_t>& out) {
  const int method = static_cast<int>(br.read_bits(2));
  if (method > 1) throw FormatError("flac: reserved residual method");
  const int param_bits = method == 0 ? 4 : 5;
  const int escape = method == 0 ? 15 : 31;
  const int part_order = static_cast<int>(br.read_bits(4));
  const int n_parts = 1 << part_order;
  if (block_size % n_parts != 0) throw FormatError("flac: bad partition order");
  int idx = order;
  for (int p = 0; p < n_parts; ++p) {
    int count = block_size >> part_order;
    if (p == 0) count -= order;
    if (count < 0) throw FormatError("flac: partition underflow");
    const int param = static_cast<int>(br.read_bits(param_bits));
    if (param == escape) {
      const int raw_bits = static_cast<int>(br.read_bits(5));
      for (int i = 0; i < count; ++i) out[idx++] = br.read_signed(raw_bits);
    } else {
      for (int i = 0; i < count; ++i) {
        const std::uint64_t q = br.read_unary();
        const std::uint64_t r = br.read_bits(param);
        const std::uint64_t u = (q << param) | r;
        out[idx++] = static_cast<std::int64_t>(u >> 1) ^ -static_cast<std::int64_t>(u & 1);
      }
    }
  }
}

inline void decode_subframe(BitReader& br, int block_size, int bps,
                            std::vector<std::int64_t>& out) {
  if (br.read_bits(1) != 0) throw FormatError("flac: bad subframe padding bit");
  const int type = static_cast<int>(br.read_bits(6));
  int wasted = 0;
  if (br.read_bits(1) == 1) wasted = static_cast<int>(br.read_unary()) + 1;
  const int eff_bps = bps - wasted;
  if (eff_bps <= 0) throw FormatError("flac: nonpositive effective bit depth");
  out.assign(static_cast<std::size_t>(block_size), 0);

  if (type == 0) {  // constant
    const std::int64_t v = br.read_signed(eff_bps);
    for (auto& s : out) s = v;
  } else if (type == 1) {  // verbatim
    for (auto& s : out) s = br.read_signed(eff_bps);
  } else if (type >= 8 && type <= 12) {  // fixed, order = type - 8
    const int order = type - 8;
    if (order > block_size) throw FormatError("flac: fixed order exceeds block");
    for (int i = 0; i < order; ++i) out[static_cast<std::size_t>(i)] = br.read_signed(eff_bps);
    decode_residual(br, order, block_size, out);
    for (int i = order; i < block_size; ++i) {
      std::int64_t pred = 0;
      switch (order) {
        case 0: pred = 0; break;
        case 1: pred = out[i - 1]; break;
        case 2: pred = 2 * out[i - 1] - out[i - 2]; break;
        case 3: pred = 3 * out[i - 1] - 3 * out[i - 2] + out[i - 3]; break;
        case 4: pred = 4 * out[i - 1] - 6 * out[i - 2] + 4 * out[i - 3] - out[i - 4]; break;
        default: break;
      }
      out[static_cast<std::size_t>(i)] += pred;
    }
  } else if (type >= 32) {  // LPC, order = (type & 31) + 1
    const int order = (type & 31) + 1;
    if (order > block_size) throw FormatError("flac: lpc order exceeds block");
    for (int i = 0; i < order; ++i) out[static_cast<std::size_t>(i)] = br.read_signed(eff_bps);
    const int precision = static_cast<int>(br.read_bits(4)) + 1;
    if (precision == 16) throw FormatError("flac: invalid lpc precision");
    const int shift = static_cast<int>(br.read_signed(5));
    if (shift < 0) throw FormatError("flac: negative lpc shift");
    std::vector<std::int64_t> coef(static_cast<std::size_t>(order));
    for (auto& c : coef) c = br.read_signed(precision);
    decode_residual(br, order, block_size, out);
    for (int i = order; i < block_size; ++i) {
      std::int64_t acc = 0;
      for (int j = 0; j < order; ++j) acc += coef[static_cast<std::size_t>(j)] * out[i - 1 - j];
      out[static_cast<std::size_t>(i)] += acc >> shift;
    }
  } else {
    throw FormatError("flac: reserved subframe type " + std::to_string(type));
  }
  if (wasted > 0)
    for (auto& s : out) s <<= wasted;
}

}  // namespace detail

inline RawAudio decode(const std::vector<std::uint8_t>& buf, const std::string& name) {
  if (buf.size() < 8 || std::memcmp(buf.data(), "fLaC", 4) != 0)
    throw FormatError(name + ": not a FLAC stream");
  std::size_t pos = 4;
  StreamInfo info;
  bool have_info = false;
  // Metadata blocks.
  while (true) {
    if (pos + 4 > buf.size()) throw FormatError(name + ": truncated metadata");
    const bool last = (buf[pos] & 0x80) != 0;
    const int type = buf[pos] & 0x7F;
    const std::size_t len = (static_cast<std::size_t>(buf[pos + 1]) << 16) |
                            (static_cast<std::size_t>(buf[pos + 2]) << 8) | buf[pos + 3];
    pos += 4;
    if (pos + len > buf.size()) throw FormatError(name + ": truncated metadata block");
    if (type == 0) {
      if (len < 34) throw FormatError(name + ": short STREAMINFO");
      BitReader br(buf.data() + pos, len);
      br.read_bits(16);  // min block size
      br.read_bits(16);  // max block size
      br.read_bits(24);  // min frame size
      br.read_bits(24);  // max frame size
      info.sample_rate = static_cast<int>(br.read_bits(20));
      info.channels = static_cast<int>(br.read_bits(3)) + 1;
      info.bits_per_sample = static_cast<int>(br.read_bits(5)) + 1;
      info.total_samples = br.read_bits(36);
      have_info = true;
    }
    pos += len;
    if (last) break;
  }
  if (!have_info) throw FormatError(name + ": missing STREAMINFO");
  if (info.sample_rate <= 0) throw FormatError(name + ": bad sample rate");

  RawAudio out;
  out.sample_rate = info.sample_rate;
  out.channels.assign(static_cast<std::size_t>(info.channels), {});

  static constexpr int kRateTable[12] = {0,     88200, 176400, 192000, 8000,  16000,
                                         22050, 24000, 32000,  44100,  48000, 96000};
  std::vector<std::vector<std::int64_t>> sub(static_cast<std::size_t>(info.channels));

  // Frames.
  while (pos < buf.size()) {
    const std::size_t frame_start = pos;
    BitReader br(buf.data() + pos, buf.size() - pos);
    const std::uint64_t sync = br.read_bits(14);
    if (sync != 0x3FFE) throw FormatError(name + ": lost frame sync");
    br.read_bits(1);  // reserved
    const bool variable = br.read_bits(1) != 0;
    const int bs_code = static_cast<int>(br.read_bits(4));
    const int sr_code = static_cast<int>(br.read_bits(4));
    const int ch_code = static_cast<int>(br.read_bits(4));
    const int ss_code = static_cast<int>(br.read_bits(3));
    br.read_bits(1);  // reserved
    detail::read_utf8_number(br, variable);
    int block_size = 0;
    if (bs_code == 1) block_size = 192;
    else if (bs_code >= 2 && bs_code <= 5) block_size = 576 << (bs_code - 2);
    else if (bs_code == 6) block_size = static_cast<int>(br.read_bits(8)) + 1;
    else if (bs_code == 7) block_size = static_cast<int>(br.read_bits(16)) + 1;
    else if (bs_code >= 8) block_size = 256 << (bs_code - 8);
    else throw FormatError(name + ": reserved block size code");
    if (sr_code == 12) br.read_bits(8);
    else if (sr_code == 13 || sr_code == 14) br.read_bits(16);
    else if (sr_code == 15) throw FormatError(name + ": invalid sample rate code");
    else if (sr_code != 0 && kRateTable[sr_code] != info.sample_rate &&
             info.sample_rate != 0) {
      // Frame-local rate overrides are legal; trust STREAMINFO for output.
    }
    int bps = info.bits_per_sample;
    switch (ss_code) {
      case 0: break;
      case 1: bps = 8; break;
      case 2: bps = 12; break;
      case 4: bps = 16; break;
      case 5: bps = 20; break;
      case 6: bps = 24; break;
      default: throw FormatError(name + ": reserved sample size code");
    }
    const std::size_t header_len = br.byte_pos();
    const std::uint8_t expect_crc8 = static_cast<std::uint8_t>(br.read_bits(8));
    if (crc8(buf.data() + frame_start, header_len) != expect_crc8)
      throw FormatError(name + ": frame header CRC mismatch");

    int n_channels = info.channels;
    int stereo_mode = 0;  // 0 independent, 1 left/side, 2 right/side, 3 mid/side
    if (ch_code <= 7) {
      n_channels = ch_code + 1;
    } else if (ch_code == 8) { n_channels = 2; stereo_mode = 1; }
    else if (ch_code == 9) { n_channels = 2; stereo_mode = 2; }
    else if (ch_code == 10) { n_channels = 2; stereo_mode = 3; }
    else throw FormatError(name + ": reserved channel assignment");
    if (n_channels != info.channels)
      throw FormatError(name + ": channel count change mid-stream");

    for (int c = 0; c < n_channels; ++c) {
      int ch_bps = bps;
      if ((stereo_mode == 1 && c == 1) || (stereo_mode == 2 && c == 0) ||
          (stereo_mode == 3 && c == 1)) {
        ++ch_bps;  // side channel carries one extra bit
      }
      detail::decode_subframe(br, block_size, ch_bps, sub[static_cast<std::size_t>(c)]);
    }
    br.align();
    const std::size_t body_len = br.byte_pos();
    const std::uint16_t expect_crc16 = static_cast<std::uint16_t>(br.read_bits(16));
    if (crc16(buf.data() + frame_start, body_len) != expect_crc16)
      throw FormatError(name + ": frame CRC mismatch");
    pos = frame_start + br.byte_pos();

    // Undo inter-channel decorrelation.
    if (stereo_mode == 1) {  // left/side: R = L - S
      for (int i = 0; i < block_size; ++i) sub[1][i] = sub[0][i] - sub[1][i];
    } else if (stereo_mode == 2) {  // right/side: L = R + S
      for (int i = 0; i < block_size; ++i) sub[0][i] = sub[1][i] + sub[0][i];
    } else if (stereo_mode == 3) {  // mid/side
      for (int i = 0; i < block_size; ++i) {
        const std::int64_t side = sub[1][i];
        const std::int64_t sum = (sub[0][i] << 1) | (side & 1);
        sub[0][i] = (sum + side) >> 1;
        sub[1][i] = (sum - side) >> 1;
      }
    }
    const double scale = 1.0 / static_cast<double>((1LL << (bps - 1)) - 1);
    for (int c = 0; c < n_channels; ++c) {
      auto& ch = out.channels[static_cast<std::size_t>(c)];
      for (int i = 0; i < block_size; ++i)
        ch.push_back(static_cast<double>(sub[static_cast<std::size_t>(c)][i]) * scale);
    }
    if (info.total_samples > 0 && out.channels[0].size() >= info.total_samples) break;
  }
  if (info.total_samples > 0)
    for (auto& ch : out.channels)
      if (ch.size() > info.total_samples) ch.resize(info.total_samples);
  return out;
}

}  // namespace flac

inline RawAudio read_flac(const std::string& path) {
  return flac::decode(detail::read_file_bytes(path), path);
}

}  // namespace sepdet
