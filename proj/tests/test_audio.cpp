// tests/test_audio.cpp

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

#include <gtest/gtest.h>

#include <cmath>

#include "sepdet/audio.hpp"
#include "sepdet/audio_io.hpp"
#include "sepdet/fft.hpp"
#include "sepdet/wav_io.hpp"
#include "testutil.hpp"

using namespace sepdet;
using sepdet::test::TempDir;

TEST(PeakNormalize, ScalesToUnitPeak) {
  AudioClip c;
  c.samples = {0.5, -0.25};
  const auto out = peak_normalize(c);
  EXPECT_DOUBLE_EQ(out.samples[0], 1.0);
  EXPECT_DOUBLE_EQ(out.samples[1], -0.5);
}

TEST(PeakNormalize, AllZeroUnchanged) {
  AudioClip c;
  c.samples.assign(100, 0.0);
  const auto out = peak_normalize(c);
  for (double s : out.samples) EXPECT_EQ(s, 0.0);
}

TEST(PeakNormalize, OutOfRangeInputScaledDown) {
  AudioClip c;
  c.samples = {2.0, -4.0};
  const auto out = peak_normalize(c);
  EXPECT_DOUBLE_EQ(out.samples[0], 0.5);
  EXPECT_DOUBLE_EQ(out.samples[1], -1.0);
}

TEST(SegmentClip, EvalTiledSingleTileEqualsClip) {
  auto c = test::make_white_noise(7, 16000, 32000);
  const auto segs = segment_clip(c, 32000, SegmentMode::kEvalTiled);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].samples, c.samples);
  EXPECT_EQ(segs[0].offset, 0u);
}

TEST(SegmentClip, EvalTiledPadsLastTile) {
  auto c = test::make_white_noise(8, 16000, 70000);
  const auto segs = segment_clip(c, 32000, SegmentMode::kEvalTiled);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[2].offset, 64000u);
  for (std::size_t i = 0; i < 6000; ++i)
    EXPECT_EQ(segs[2].samples[i], c.samples[64000 + i]);
  for (std::size_t i = 6000; i < 32000; ++i) EXPECT_EQ(segs[2].samples[i], 0.0);
}

TEST(SegmentClip, TrainCropPadsShortClip) {
  auto c = test::make_white_noise(9, 16000, 1000);
  Rng rng(1);
  const auto segs = segment_clip(c, 32000, SegmentMode::kTrainRandomCrop, &rng);
  ASSERT_EQ(segs.size(), 1u);
  for (std::size_t i = 0; i < 1000; ++i) EXPECT_EQ(segs[0].samples[i], c.samples[i]);
  for (std::size_t i = 1000; i < 32000; ++i) EXPECT_EQ(segs[0].samples[i], 0.0);
}

TEST(SegmentClip, TrainCropInBounds) {
  auto c = test::make_white_noise(10, 16000, 50000);
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const auto segs = segment_clip(c, 32000, SegmentMode::kTrainRandomCrop, &rng);
    ASSERT_EQ(segs.size(), 1u);
    ASSERT_LE(segs[0].offset + 32000, 50000u);
    for (std::size_t i = 0; i < 32000; ++i)
      ASSERT_EQ(segs[0].samples[i], c.samples[segs[0].offset + i]);
  }
}

// Tiles concatenated and truncated to the source length reproduce it exactly.
TEST(SegmentClip, EvalTiledReconstructsSource) {
  Rng lens(3);
  for (int k = 0; k < 10; ++k) {
    const auto n = static_cast<std::size_t>(lens.uniform_int(1, 90000));
    auto c = test::make_white_noise(100 + static_cast<unsigned>(k), 16000, n);
    const auto segs = segment_clip(c, 8192, SegmentMode::kEvalTiled);
    std::vector<double> rebuilt;
    for (const auto& s : segs)
      rebuilt.insert(rebuilt.end(), s.samples.begin(), s.samples.end());
    rebuilt.resize(n);
    ASSERT_EQ(rebuilt, c.samples);
  }
}

TEST(WavIo, Pcm16RoundTripWithinOneLsb) {
  TempDir tmp("wav_rt");
  auto c = test::make_white_noise(11, 16000, 4096, 0.9);
  write_wav(tmp.str("a.wav"), c);
  const auto back = load_audio(tmp.str("a.wav"), 16000);
  ASSERT_EQ(back.samples.size(), c.samples.size());
  for (std::size_t i = 0; i < c.samples.size(); ++i)
    ASSERT_NEAR(back.samples[i], c.samples[i], 1.0 / 32767.0);
  // A second save/load cycle is exact.
  write_wav(tmp.str("b.wav"), back);
  const auto again = load_audio(tmp.str("b.wav"), 16000);
  ASSERT_EQ(again.samples, back.samples);
}

TEST(WavIo, IdentityLoadAt16k) {
  TempDir tmp("wav_id");
  auto c = test::make_white_noise(12, 16000, 32000);
  write_wav(tmp.str("a.wav"), c);
  const auto back = load_audio(tmp.str("a.wav"), 16000);
  EXPECT_EQ(back.samples.size(), 32000u);
  EXPECT_EQ(back.sample_rate, 16000);
}

TEST(WavIo, StereoAveragedToMono) {
  TempDir tmp("wav_st");
  // Hand-build a stereo PCM16 WAV: channel a = 0.5, channel b = -0.25.
  std::vector<std::uint8_t> wav;
  auto u32 = [&wav](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) wav.push_back((v >> (8 * i)) & 0xff);
  };
  auto u16 = [&wav](std::uint16_t v) {
    wav.push_back(v & 0xff);
    wav.push_back((v >> 8) & 0xff);
  };
  auto tag = [&wav](const char* s) { wav.insert(wav.end(), s, s + 4); };
  const int n = 100;
  tag("RIFF");
  u32(36 + n * 4);
  tag("WAVE");
  tag("fmt ");
  u32(16);
  u16(1);
  u16(2);
  u32(16000);
  u32(16000 * 4);
  u16(4);
  u16(16);
  tag("data");
  u32(n * 4);
  const std::int16_t a = static_cast<std::int16_t>(std::lround(0.5 * 32767));
  const std::int16_t b = static_cast<std::int16_t>(std::lround(-0.25 * 32767));
  for (int i = 0; i < n; ++i) {
    u16(static_cast<std::uint16_t>(a));
    u16(static_cast<std::uint16_t>(b));
  }
  test::write_bytes(tmp.str("st.wav"), wav);
  const auto mono = load_audio(tmp.str("st.wav"), 16000);
  ASSERT_EQ(mono.samples.size(), static_cast<std::size_t>(n));
  for (double s : mono.samples)
    ASSERT_NEAR(s, (0.5 - 0.25) / 2.0, 2.0 / 32767.0);
}

TEST(WavIo, Float32Supported) {
  TempDir tmp("wav_f32");
  std::vector<std::uint8_t> wav;
  auto u32 = [&wav](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) wav.push_back((v >> (8 * i)) & 0xff);
  };
  auto u16 = [&wav](std::uint16_t v) {
    wav.push_back(v & 0xff);
    wav.push_back((v >> 8) & 0xff);
  };
  auto tag = [&wav](const char* s) { wav.insert(wav.end(), s, s + 4); };
  const int n = 64;
  tag("RIFF");
  u32(36 + n * 4);
  tag("WAVE");
  tag("fmt ");
  u32(16);
  u16(3);  // IEEE float
  u16(1);
  u32(16000);
  u32(16000 * 4);
  u16(4);
  u16(32);
  tag("data");
  u32(n * 4);
  for (int i = 0; i < n; ++i) {
    const float v = 0.25f * static_cast<float>(std::sin(0.1 * i));
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    u32(u);
  }
  test::write_bytes(tmp.str("f.wav"), wav);
  const auto c = load_audio(tmp.str("f.wav"), 16000);
  ASSERT_EQ(c.samples.size(), static_cast<std::size_t>(n));
  EXPECT_NEAR(c.samples[1], 0.25 * std::sin(0.1), 1e-7);
}

TEST(WavIo, Errors) {
  TempDir tmp("wav_err");
  EXPECT_THROW(load_audio(tmp.str("missing.wav"), 16000), IoError);
  test::write_bytes(tmp.str("junk.bin"), {1, 2, 3, 4, 5, 6, 7, 8});
  EXPECT_THROW(load_audio(tmp.str("junk.bin"), 16000), FormatError);
  // Valid header but empty data chunk.
  std::vector<std::uint8_t> wav;
  auto u32 = [&wav](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) wav.push_back((v >> (8 * i)) & 0xff);
  };
  auto u16 = [&wav](std::uint16_t v) {
    wav.push_back(v & 0xff);
    wav.push_back((v >> 8) & 0xff);
  };
  auto tag = [&wav](const char* s) { wav.insert(wav.end(), s, s + 4); };
  tag("RIFF");
  u32(36);
  tag("WAVE");
  tag("fmt ");
  u32(16);
  u16(1);
  u16(1);
  u32(16000);
  u32(32000);
  u16(2);
  u16(16);
  tag("data");
  u32(0);
  test::write_bytes(tmp.str("empty.wav"), wav);
  EXPECT_THROW(load_audio(tmp.str("empty.wav"), 16000), FormatError);
}

// Resampled 8 kHz tone matches the directly evaluated 16 kHz tone.
TEST(Resample, ToneUpsampleMatchesAnalytic) {
  const auto src = test::make_tone(1000.0, 8000, 8000, 0.5);
  const auto up = resample(src, 16000);
  ASSERT_EQ(up.samples.size(), 16000u);
  EXPECT_EQ(up.sample_rate, 16000);
  double max_err = 0.0;
  const std::size_t guard = 200;  // skip filter edges
  for (std::size_t i = guard; i + guard < up.samples.size(); ++i) {
    const double want = 0.5 * std::sin(2.0 * M_PI * 1000.0 * static_cast<double>(i) / 16000.0);
    max_err = std::max(max_err, std::abs(up.samples[i] - want));
  }
  EXPECT_LE(max_err, 1e-3);
  const double f = dominant_frequency_hz(up.samples, 16000.0);
  EXPECT_NEAR(f, 1000.0, 16000.0 / static_cast<double>(next_pow2(up.samples.size())));
}

TEST(Resample, ToneFrequencyPreservedBothDirections) {
  for (const auto& [src_rate, dst_rate] : std::vector<std::pair<int, int>>{
           {8000, 16000}, {44100, 16000}, {22050, 16000}, {16000, 8000}}) {
    const double f0 = 900.0;  // below Nyquist of every rate involved
    const auto src = test::make_tone(f0, src_rate, static_cast<std::size_t>(src_rate), 0.4);
    const auto dst = resample(src, dst_rate);
    const std::size_t nfft = next_pow2(dst.samples.size());
    const double bin_hz = static_cast<double>(dst_rate) / static_cast<double>(nfft);
    EXPECT_NEAR(dominant_frequency_hz(dst.samples, dst_rate), f0, bin_hz)
        << src_rate << " -> " << dst_rate;
  }
}

TEST(Resample, LoadAudioResamplesTo16k) {
  TempDir tmp("rs_load");
  const auto src = test::make_tone(1000.0, 8000, 8000, 0.5);
  write_wav(tmp.str("t8k.wav"), src);
  const auto c = load_audio(tmp.str("t8k.wav"), 16000);
  EXPECT_EQ(c.sample_rate, 16000);
  EXPECT_EQ(c.samples.size(), 16000u);
  const double f = dominant_frequency_hz(c.samples, 16000.0);
  EXPECT_NEAR(f, 1000.0, 16000.0 / static_cast<double>(next_pow2(c.samples.size())));
}

TEST(Fft, MatchesDirectDft) {
  Rng rng(42);
  std::vector<double> x(256);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  std::vector<std::complex<double>> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
  fft_pow2(a);
  for (std::size_t k = 0; k < x.size(); k += 17) {
    const auto want =
        dft_at(x, static_cast<double>(k) * 16000.0 / static_cast<double>(x.size()), 16000.0);
    EXPECT_NEAR(a[k].real(), want.real(), 1e-9);
    EXPECT_NEAR(a[k].imag(), want.imag(), 1e-9);
  }
}

TEST(Fft, InverseRecovers) {
  Rng rng(43);
  std::vector<std::complex<double>> a(512);
  for (auto& v : a) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  auto b = a;
  fft_pow2(b);
  fft_pow2(b, true);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].real(), b[i].real(), 1e-12);
    EXPECT_NEAR(a[i].imag(), b[i].imag(), 1e-12);
  }
}

TEST(Rng, DeterministicStreams) {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  Rng c(123), d(124);
  bool differ = false;
  for (int i = 0; i < 10; ++i) differ |= c.next_u64() != d.next_u64();
  EXPECT_TRUE(differ);
  // Derived streams depend only on (seed, index).
  Rng e(9), f(9);
  auto ce = e.derive(5), cf = f.derive(5);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(ce.next_u64(), cf.next_u64());
}
