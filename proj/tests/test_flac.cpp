// tests/test_flac.cpp

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

#include "sepdet/audio_io.hpp"
#include "sepdet/flac_io.hpp"
#include "testutil.hpp"

using namespace sepdet;
using sepdet::test::TempDir;

namespace {

std::vector<std::int32_t> random_samples(std::uint64_t seed, std::size_t n, int bps = 16) {
  Rng rng(seed);
  const std::int64_t lim = (1LL << (bps - 1)) - 1;
  std::vector<std::int32_t> v(n);
  for (auto& s : v) s = static_cast<std::int32_t>(rng.uniform_int(-lim, lim));
  return v;
}

std::vector<std::int32_t> tone_samples(double freq, int rate, std::size_t n) {
  std::vector<std::int32_t> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = static_cast<std::int32_t>(
        std::lround(12000.0 * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / rate)));
  return v;
}

void expect_decoded_equals(const RawAudio& got,
                           const std::vector<std::vector<std::int32_t>>& want) {
  ASSERT_EQ(got.channels.size(), want.size());
  for (std::size_t c = 0; c < want.size(); ++c) {
    ASSERT_EQ(got.channels[c].size(), want[c].size());
    for (std::size_t i = 0; i < want[c].size(); ++i) {
      const double expect = static_cast<double>(want[c][i]) / 32767.0;
      ASSERT_NEAR(got.channels[c][i], expect, 1e-12) << "ch " << c << " sample " << i;
    }
  }
}

}  // namespace

TEST(Flac, VerbatimMonoRoundTrip) {
  TempDir tmp("flac_v");
  const auto samples = random_samples(1, 3000);
  const auto bytes = test::flac_encode({samples}, 16000, 16, 1024);
  test::write_bytes(tmp.str("a.flac"), bytes);
  expect_decoded_equals(read_flac(tmp.str("a.flac")), {samples});
}

TEST(Flac, ConstantSubframes) {
  TempDir tmp("flac_c");
  std::vector<std::int32_t> samples(2048, 1234);
  const auto bytes = test::flac_encode({samples}, 16000, 16, 1024,
                                       test::FlacSubframeKind::kConstantOrVerbatim);
  test::write_bytes(tmp.str("c.flac"), bytes);
  expect_decoded_equals(read_flac(tmp.str("c.flac")), {samples});
}

TEST(Flac, FixedPredictionWithRiceResidual) {
  TempDir tmp("flac_f");
  const auto samples = tone_samples(440.0, 16000, 5000);
  const auto bytes =
      test::flac_encode({samples}, 16000, 16, 1024, test::FlacSubframeKind::kFixed);
  test::write_bytes(tmp.str("f.flac"), bytes);
  expect_decoded_equals(read_flac(tmp.str("f.flac")), {samples});
}

TEST(Flac, StereoIndependentAndLeftSide) {
  TempDir tmp("flac_s");
  const auto left = tone_samples(440.0, 16000, 2500);
  const auto right = tone_samples(660.0, 16000, 2500);
  {
    const auto bytes = test::flac_encode({left, right}, 16000, 16, 1024,
                                         test::FlacSubframeKind::kFixed, false);
    test::write_bytes(tmp.str("ind.flac"), bytes);
    expect_decoded_equals(read_flac(tmp.str("ind.flac")), {left, right});
  }
  {
    const auto bytes = test::flac_encode({left, right}, 16000, 16, 1024,
                                         test::FlacSubframeKind::kVerbatim, true);
    test::write_bytes(tmp.str("ls.flac"), bytes);
    expect_decoded_equals(read_flac(tmp.str("ls.flac")), {left, right});
  }
}

TEST(Flac, LoadAudioDownmixesFlac) {
  TempDir tmp("flac_load");
  const auto left = tone_samples(440.0, 16000, 2000);
  const auto right = tone_samples(660.0, 16000, 2000);
  const auto bytes = test::flac_encode({left, right}, 16000);
  test::write_bytes(tmp.str("st.flac"), bytes);
  const auto mono = load_audio(tmp.str("st.flac"), 16000);
  ASSERT_EQ(mono.samples.size(), 2000u);
  for (std::size_t i = 0; i < 100; ++i) {
    const double want = (left[i] + right[i]) / 2.0 / 32767.0;
    ASSERT_NEAR(mono.samples[i], want, 1e-12);
  }
}

TEST(Flac, CorruptStreamsRejected) {
  TempDir tmp("flac_bad");
  const auto samples = random_samples(2, 1500);
  auto bytes = test::flac_encode({samples}, 16000);
  // Flip a bit inside the first frame body; the CRC check must catch it.
  bytes[bytes.size() / 2] ^= 0x40;
  test::write_bytes(tmp.str("bad.flac"), bytes);
  EXPECT_THROW(read_flac(tmp.str("bad.flac")), FormatError);
  test::write_bytes(tmp.str("notflac.flac"), {'f', 'L', 'a', 'X', 0, 0, 0, 0});
  EXPECT_THROW(read_flac(tmp.str("notflac.flac")), FormatError);
}
