// scd/audio_io.h
//
// WAV ingestion, peak normalization and fixed-hop framing.

#ifndef SCD_AUDIO_IO_H_
#define SCD_AUDIO_IO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace scd {

inline constexpr int kDefaultSampleRate = 16000;

/// Mono audio. Samples are dimensionless amplitudes, nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;
  /// Set by NormalizePeak / RemoveUnvoiced when there is no signal.
  bool silent = false;

  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Sample encodings understood by the RIFF/WAVE reader and writer.
enum class WavEncoding { kPcm8, kPcm16, kPcm24, kFloat32 };

/// Parses an in-memory RIFF/WAVE file. Multi-channel input is averaged to
/// mono. Integer PCM maps to [-1, 1) by dividing by 2^(bits-1).
/// Throws Error with kUnsupportedFormat, kCorruptHeader or kEmptyAudio.
AudioClip DecodeWav(std::span<const uint8_t> bytes,
                    WavEncoding *encoding = nullptr);
std::vector<uint8_t> EncodeWav(const AudioClip &clip,
                               WavEncoding encoding = WavEncoding::kPcm16);

AudioClip LoadWav(const std::filesystem::path &path,
                  WavEncoding *encoding = nullptr);
/// As LoadWav, but rejects clips whose rate differs from expected_rate
/// (kSampleRateMismatch). Resampling is deliberately not offered.
AudioClip LoadWav(const std::filesystem::path &path, int expected_rate);
void WriteWav(const std::filesystem::path &path, const AudioClip &clip,
              WavEncoding encoding = WavEncoding::kPcm16);

/// Uncompressed NIST SPHERE reader (the native TIMIT container).
AudioClip LoadSphere(const std::filesystem::path &path);

/// Scales samples so max |s| == 1. All-zero input is returned unchanged with
/// `silent` set.
AudioClip NormalizePeak(AudioClip clip);

/// Converts a duration in milliseconds to a whole number of samples
/// (rounded down).
std::size_t MsToSamples(double ms, int sample_rate);

/// Overlapping equal-length windows over a clip. Frames are stored
/// contiguously; the trailing partial window is dropped.
class FrameGrid {
 public:
  FrameGrid() = default;
  FrameGrid(const AudioClip &clip, double win_ms, double hop_ms);

  std::size_t size() const { return count_; }
  std::size_t win_samples() const { return win_; }
  std::size_t hop_samples() const { return hop_; }
  double win_ms() const { return win_ms_; }
  double hop_ms() const { return hop_ms_; }
  int sample_rate() const { return sample_rate_; }

  std::size_t Start(std::size_t i) const { return i * hop_; }
  std::span<const double> Frame(std::size_t i) const {
    return {data_.data() + i * win_, win_};
  }

 private:
  std::vector<double> data_;
  std::size_t count_ = 0;
  std::size_t win_ = 0;
  std::size_t hop_ = 0;
  double win_ms_ = 0.0;
  double hop_ms_ = 0.0;
  int sample_rate_ = kDefaultSampleRate;
};

/// Number of full windows: floor((len - win) / hop) + 1, or 0 if len < win.
std::size_t FrameCount(std::size_t len, std::size_t win, std::size_t hop);

/// Throws kClipTooShort when the clip holds less than one window.
FrameGrid FrameSignal(const AudioClip &clip, double win_ms, double hop_ms);

}  // namespace scd

#endif  // SCD_AUDIO_IO_H_
