// scd/features.h
//
// 13-dim MFCC, delta/double-delta expansion to 39 dims, mean/variance
// normalization and super-frame concatenation (10 x 39 = 390 dims).

#ifndef SCD_FEATURES_H_
#define SCD_FEATURES_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scd/audio_io.h"

namespace scd {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MfccConfig {
  double win_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 23;
  int n_ceps = 13;
  /// 0 selects the next power of two >= the window length.
  int fft_size = 0;
  int delta_halfwidth = 2;
  int sample_rate = kDefaultSampleRate;

  int FftSize() const;
  void Validate() const;
  bool operator==(const MfccConfig &) const = default;
};

/// Time-ordered feature frames, one row per frame.
struct FeatureSequence {
  RowMatrix frames;
  double frame_hop_s = 0.0;
  double frame_win_s = 0.0;

  Eigen::Index size() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
  double FrameStart(Eigen::Index i) const { return i * frame_hop_s; }
  bool AllFinite() const { return frames.allFinite(); }
};

inline constexpr double kLogFloor = 1e-10;
inline constexpr double kStdFloor = 1e-8;

/// Hamming window -> |FFT| -> mel filterbank -> log -> orthonormal DCT-II.
/// Throws kClipTooShort when the clip is shorter than one window.
FeatureSequence Mfcc(const AudioClip &clip, const MfccConfig &cfg);

/// Appends regression deltas and double deltas: [static | delta | delta2].
/// Throws kTooFewFrames below 2 * halfwidth + 1 frames.
FeatureSequence AddDeltas(const FeatureSequence &seq, int halfwidth);

struct CmvnStats {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd stddev;  // already floored at kStdFloor
};

/// Pooled per-dimension statistics over one or more sequences.
CmvnStats ComputeCmvnStats(std::span<const FeatureSequence> seqs);
FeatureSequence ApplyCmvn(const FeatureSequence &seq, const CmvnStats &stats);
/// Normalizes with the sequence's own statistics. Throws kTooFewFrames
/// below 2 frames.
FeatureSequence Cmvn(const FeatureSequence &seq);

/// Super-frame i = frames [i*hop, i*hop + win) laid side by side.
/// Throws kTooFewFrames below `win_frames` frames.
FeatureSequence ConcatFrames(const FeatureSequence &seq, int win_frames = 10,
                             int hop_frames = 3);

/// Feature parameters that a trained model depends on.
struct FeaturePipelineConfig {
  MfccConfig mfcc;
  int concat_win = 10;
  int concat_hop = 3;

  int SuperFrameDim() const { return mfcc.n_ceps * 3 * concat_win; }
  /// Stable text form; hashed into model fingerprints.
  std::string Canonical() const;
  uint64_t Fingerprint() const;
  bool operator==(const FeaturePipelineConfig &) const = default;
};

/// 64-bit FNV-1a.
uint64_t Fnv1a64(std::string_view text);

/// Little-endian dump: u64 magic, u64 dim, u64 frame count, f64 hop_s,
/// f64 win_s, then row-major f64 frames.
void SaveFeatures(const std::filesystem::path &path,
                  const FeatureSequence &seq);
FeatureSequence LoadFeatures(const std::filesystem::path &path);
std::vector<uint8_t> EncodeFeatures(const FeatureSequence &seq);
FeatureSequence DecodeFeatures(std::span<const uint8_t> bytes);

inline constexpr uint64_t kFeatureMagic = 0x3154414546445343ULL;  // "CSDFEAT1"

}  // namespace scd

#endif  // SCD_FEATURES_H_
