// scd/vad.h
//
// Energy + spectral-centroid voice activity detection. Both per-frame
// statistics are median smoothed, thresholded at a weighted average of the
// two dominant histogram peaks, and a frame is kept only when both exceed
// their thresholds.

#ifndef SCD_VAD_H_
#define SCD_VAD_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "scd/audio_io.h"

namespace scd {

struct VadConfig {
  double win_ms = 50.0;
  double hop_ms = 25.0;
  int smooth_order = 5;
  int smooth_passes = 2;
  int hist_bins = 40;
  /// Weight W of the lower histogram peak in (W*M1 + M2) / (W + 1).
  double local_max_weight = 5.0;
  /// Multiplies both thresholds; values above 1 make the VAD stricter.
  double strictness_scale = 1.0;

  /// Throws kInvalidConfig on violated invariants.
  void Validate() const;
  bool operator==(const VadConfig &) const = default;
};

struct VadMask {
  std::vector<bool> voiced;
  std::vector<double> energies;   // smoothed E per frame
  std::vector<double> centroids;  // smoothed C per frame
  double energy_threshold = 0.0;
  double centroid_threshold = 0.0;
  std::size_t win_samples = 0;
  std::size_t hop_samples = 0;

  std::size_t VoicedCount() const;
};

/// E = (1/N) sum |s(n)|^2.
double ShortTermEnergy(std::span<const double> frame);

/// C = sum k*S(k) / sum S(k), k = 1..K over the magnitude spectrum, where
/// k = 1 is the DC bin and K = floor(N/2). Returns 0 for a zero spectrum.
double SpectralCentroid(std::span<const double> frame);

/// Running median with an odd window, edges padded by replication.
std::vector<double> MedianSmooth(std::span<const double> seq, int order,
                                 int passes);

/// Threshold from the two largest local maxima of the value histogram.
/// Bins are laid out so that the first and last bin centers coincide with
/// the minimum and maximum value. Falls back to the mean when fewer than two
/// peaks exist. Throws kTooFewValues below 10 values.
double HistogramThreshold(std::span<const double> values,
                          const VadConfig &cfg);

/// Throws kClipTooShort when the clip yields fewer than 10 frames.
VadMask DetectVoiced(const AudioClip &clip, const VadConfig &cfg);

/// Keeps the hop-sized slice [i*hop, (i+1)*hop) of every voiced frame i.
/// Throws kMaskMismatch if the mask was not computed on this clip's framing.
AudioClip RemoveUnvoiced(const AudioClip &clip, const VadMask &mask);

/// One 0/1 character per line, one line per frame.
void WriteMask(const std::filesystem::path &path, const VadMask &mask);

}  // namespace scd

#endif  // SCD_VAD_H_
