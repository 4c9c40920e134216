// sepdet/wav_io.hpp

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
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sepdet/audio.hpp"
#include "sepdet/errors.hpp"

namespace sepdet {

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  in.seekg(0, std::ios::end);
  const std::streamoff len = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(len));
  if (len > 0) in.read(reinterpret_cast<char*>(buf.data()), len);
  if (!in) throw IoError("cannot read " + path);
  return buf;
}

inline std::uint32_t le_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t le_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace detail

// Decoded multi-channel PCM prior to downmix.
struct RawAudio {
  std::vector<std::vector<double>> channels;
  int sample_rate = 0;
};

// Reads a RIFF/WAVE file. Supported encodings: PCM 16-bit and IEEE float
// 32-bit (plain or wrapped in WAVE_FORMAT_EXTENSIBLE).
inline RawAudio read_wav(const std::string& path) {
  const auto buf = detail::read_file_bytes(path);
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(path + ": not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  int format_tag = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  RawAudio out;
  while (pos + 8 <= buf.size()) {
    char id[5] = {0};
    std::memcpy(id, buf.data() + pos, 4);
    const std::uint32_t chunk_len = detail::le_u32(buf.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_len > buf.size()) throw FormatError(path + ": truncated chunk " + id);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw FormatError(path + ": fmt chunk too small");
      format_tag = detail::le_u16(buf.data() + body);
      channels = detail::le_u16(buf.data() + body + 2);
      rate = detail::le_u32(buf.data() + body + 4);
      bits = detail::le_u16(buf.data() + body + 14);
      if (format_tag == 0xFFFE) {  // WAVE_FORMAT_EXTENSIBLE
        if (chunk_len < 40) throw FormatError(path + ": extensible fmt chunk too small");
        format_tag = detail::le_u16(buf.data() + body + 24);  // subformat GUID head
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw FormatError(path + ": data chunk before fmt");
      if (channels <= 0 || rate == 0) throw FormatError(path + ": bad fmt fields");
      std::size_t bytes_per_sample = 0;
      if (format_tag == 1 && bits == 16) {
        bytes_per_sample = 2;
      } else if (format_tag == 3 && bits == 32) {
        bytes_per_sample = 4;
      } else {
        throw FormatError(path + ": unsupported codec (format tag " +
                          std::to_string(format_tag) + ", " + std::to_string(bits) +
                          " bits)");
      }
      const std::size_t frame_bytes = bytes_per_sample * static_cast<std::size_t>(channels);
      const std::size_t n_frames = chunk_len / frame_bytes;
      out.channels.assign(static_cast<std::size_t>(channels), {});
      for (auto& ch : out.channels) ch.resize(n_frames);
      for (std::size_t f = 0; f < n_frames; ++f) {
        for (int c = 0; c < channels; ++c) {
          const std::uint8_t* p = buf.data() + body + f * frame_bytes +
                                  static_cast<std::size_t>(c) * bytes_per_sample;
          double v;
          if (bytes_per_sample == 2) {
            const std::int16_t s = static_cast<std::int16_t>(detail::le_u16(p));
            v = static_cast<double>(s) / 32767.0;
          } else {
            std::uint32_t u = detail::le_u32(p);
            float fv;
            std::memcpy(&fv, &u, 4);
            v = static_cast<double>(fv);
          }
          out.channels[static_cast<std::size_t>(c)][f] = v;
        }
      }
      out.sample_rate = static_cast<int>(rate);
      return out;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }
  throw FormatError(path + ": no data chunk");
}

// Writes mono PCM 16-bit. Samples are clamped to [-1, 1] and rounded
// symmetrically (scale 32767), so a write/read cycle is stable to 1 LSB.
inline void write_wav(const std::string& path, const AudioClip& clip) {
  if (clip.samples.empty()) throw FormatError("write_wav: empty clip");
  const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_bytes = n * 2;
  std::vector<std::uint8_t> buf;
  buf.reserve(44 + data_bytes);
  auto put_u32 = [&buf](std::uint32_t v) {
    buf.push_back(v & 0xff);
    buf.push_back((v >> 8) & 0xff);
    buf.push_back((v >> 16) & 0xff);
    buf.push_back((v >> 24) & 0xff);
  };
  auto put_u16 = [&buf](std::uint16_t v) {
    buf.push_back(v & 0xff);
    buf.push_back((v >> 8) & 0xff);
  };
  auto put_tag = [&buf](const char* s) {
    buf.insert(buf.end(), s, s + 4);
  };
  put_tag("RIFF");
  put_u32(36 + data_bytes);
  put_tag("WAVE");
  put_tag("fmt ");
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(2);
  put_u16(16);
  put_tag("data");
  put_u32(data_bytes);
  for (double s : clip.samples) {
    const double clamped = std::min(1.0, std::max(-1.0, s));
    const int v = static_cast<int>(std::lround(clamped * 32767.0));
    put_u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  std::ofstream outf(path, std::ios::binary | std::ios::trunc);
  if (!outf) throw IoError("cannot open " + path + " for writing");
  outf.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size()));
  if (!outf) throw IoError("cannot write " + path);
}

}  // namespace sepdet
