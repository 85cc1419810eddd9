#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "scd/audio_io.h"
#include "scd/error.h"
#include "scd/rng.h"
#include "test_util.h"

namespace scd {
namespace {

// Hand-built RIFF header so the decoder is checked against bytes that did
// not come from EncodeWav.
std::vector<uint8_t> RawWav(uint16_t format, uint16_t channels, int rate,
                            uint16_t bits, const std::vector<uint8_t> &data) {
  std::vector<uint8_t> out;
  auto put = [&](uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
  };
  auto tag = [&](const char *t) { out.insert(out.end(), t, t + 4); };
  tag("RIFF");
  put(36 + data.size(), 4);
  tag("WAVE");
  tag("fmt ");
  put(16, 4);
  put(format, 2);
  put(channels, 2);
  put(rate, 4);
  put(rate * channels * bits / 8, 4);
  put(channels * bits / 8, 2);
  put(bits, 2);
  tag("data");
  put(data.size(), 4);
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

std::vector<uint8_t> Int16Bytes(const std::vector<int16_t> &v) {
  std::vector<uint8_t> out;
  for (int16_t s : v) {
    auto u = static_cast<uint16_t>(s);
    out.push_back(u & 0xff);
    out.push_back(u >> 8);
  }
  return out;
}

TEST(DecodeWav, OneSecondMono) {
  std::vector<int16_t> pcm(16000, 100);
  AudioClip clip = DecodeWav(RawWav(1, 1, 16000, 16, Int16Bytes(pcm)));
  EXPECT_EQ(clip.samples.size(), 16000u);
  EXPECT_EQ(clip.sample_rate, 16000);
}

TEST(DecodeWav, Int16Scaling) {
  AudioClip clip =
      DecodeWav(RawWav(1, 1, 16000, 16, Int16Bytes({16384, -32768, 0})));
  ASSERT_EQ(clip.samples.size(), 3u);
  EXPECT_EQ(clip.samples[0], 0.5);
  EXPECT_EQ(clip.samples[1], -1.0);
  EXPECT_EQ(clip.samples[2], 0.0);
}

TEST(DecodeWav, StereoOppositeChannelsAverageToZero) {
  std::vector<int16_t> pcm;
  for (int i = 0; i < 100; ++i) {
    int16_t x = static_cast<int16_t>(i * 97 - 4000);
    pcm.push_back(x);
    pcm.push_back(static_cast<int16_t>(-x));
  }
  AudioClip clip = DecodeWav(RawWav(1, 2, 16000, 16, Int16Bytes(pcm)));
  ASSERT_EQ(clip.samples.size(), 100u);
  for (double s : clip.samples) EXPECT_EQ(s, 0.0);
}

TEST(DecodeWav, RejectsCompressedFormat) {
  // Format tag 2 is MS ADPCM.
  auto bytes = RawWav(2, 1, 16000, 4, std::vector<uint8_t>(64, 0));
  EXPECT_SCD_ERROR(DecodeWav(bytes), ErrorCode::kUnsupportedFormat);
}

TEST(DecodeWav, RejectsTruncatedHeader) {
  auto bytes = RawWav(1, 1, 16000, 16, Int16Bytes({1, 2, 3}));
  bytes.resize(20);
  EXPECT_SCD_ERROR(DecodeWav(bytes), ErrorCode::kCorruptHeader);
  std::vector<uint8_t> junk(64, 'x');
  EXPECT_SCD_ERROR(DecodeWav(junk), ErrorCode::kCorruptHeader);
}

TEST(DecodeWav, RejectsEmptyData) {
  EXPECT_SCD_ERROR(DecodeWav(RawWav(1, 1, 16000, 16, {})),
                   ErrorCode::kEmptyAudio);
}

TEST(WavRoundTrip, SampleExactForEveryPcmEncoding) {
  Rng rng(7);
  for (auto enc : {WavEncoding::kPcm8, WavEncoding::kPcm16,
                   WavEncoding::kPcm24, WavEncoding::kFloat32}) {
    AudioClip src;
    for (int i = 0; i < 500; ++i) src.samples.push_back(rng.Uniform(-1, 1));
    // First pass quantizes; the second must reproduce it exactly.
    WavEncoding seen;
    AudioClip a = DecodeWav(EncodeWav(src, enc), &seen);
    EXPECT_EQ(seen, enc);
    AudioClip b = DecodeWav(EncodeWav(a, enc));
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (size_t i = 0; i < a.samples.size(); ++i)
      ASSERT_EQ(a.samples[i], b.samples[i]) << "encoding " << int(enc);
  }
}

TEST(WavRoundTrip, ThroughFile) {
  TempDir dir;
  AudioClip src;
  src.sample_rate = 8000;
  for (int i = 0; i < 800; ++i) src.samples.push_back(std::sin(i * 0.1) * 0.5);
  WriteWav(dir.path() / "a.wav", src);
  AudioClip a = LoadWav(dir.path() / "a.wav");
  EXPECT_EQ(a.sample_rate, 8000);
  WriteWav(dir.path() / "b.wav", a);
  AudioClip b = LoadWav(dir.path() / "b.wav");
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_SCD_ERROR(LoadWav(dir.path() / "a.wav", 16000),
                   ErrorCode::kSampleRateMismatch);
}

TEST(NormalizePeak, Examples) {
  AudioClip c;
  c.samples = {0.2, -0.4};
  auto n = NormalizePeak(c);
  EXPECT_NEAR(n.samples[0], 0.5, 1e-15);
  EXPECT_EQ(n.samples[1], -1.0);
  EXPECT_FALSE(n.silent);

  c.samples = {1.0, -1.0};
  EXPECT_EQ(NormalizePeak(c).samples, c.samples);

  c.samples = {0, 0, 0};
  n = NormalizePeak(c);
  EXPECT_EQ(n.samples, c.samples);
  EXPECT_TRUE(n.silent);
}

TEST(NormalizePeak, PeakIsOneAndIdempotent) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    AudioClip c;
    double scale = std::exp(rng.Uniform(-8, 3));
    for (int i = 0; i < 300; ++i) c.samples.push_back(scale * rng.Normal());
    auto once = NormalizePeak(c);
    double peak = 0;
    for (double s : once.samples) peak = std::max(peak, std::abs(s));
    EXPECT_NEAR(peak, 1.0, 1e-12);
    auto twice = NormalizePeak(once);
    for (size_t i = 0; i < once.samples.size(); ++i)
      ASSERT_NEAR(once.samples[i], twice.samples[i], 1e-12);
  }
}

TEST(FrameSignal, CountsAndStarts) {
  AudioClip c;
  c.samples.resize(16000);
  for (size_t i = 0; i < c.samples.size(); ++i) c.samples[i] = double(i);
  FrameGrid g = FrameSignal(c, 50, 25);
  EXPECT_EQ(g.win_samples(), 800u);
  EXPECT_EQ(g.hop_samples(), 400u);
  EXPECT_EQ(g.size(), 39u);
  for (size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(g.Start(i), i * 400);
    auto f = g.Frame(i);
    ASSERT_EQ(f.size(), 800u);
    EXPECT_EQ(f.front(), double(i * 400));
    EXPECT_EQ(f.back(), double(i * 400 + 799));
  }

  c.samples.resize(800);
  EXPECT_EQ(FrameSignal(c, 50, 25).size(), 1u);
  c.samples.resize(799);
  EXPECT_SCD_ERROR(FrameSignal(c, 50, 25), ErrorCode::kClipTooShort);
}

TEST(FrameCount, MatchesFormula) {
  for (size_t len = 0; len < 3000; len += 37)
    for (size_t win : {1u, 160u, 400u, 800u})
      for (size_t hop : {1u, 80u, 160u, 400u}) {
        if (hop > win) continue;
        size_t expect = len < win ? 0 : (len - win) / hop + 1;
        ASSERT_EQ(FrameCount(len, win, hop), expect);
      }
}

TEST(MsToSamples, RoundsDown) {
  EXPECT_EQ(MsToSamples(50, 16000), 800u);
  EXPECT_EQ(MsToSamples(25, 16000), 400u);
  EXPECT_EQ(MsToSamples(25, 22050), 551u);
}

}  // namespace
}  // namespace scd
