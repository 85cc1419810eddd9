// scd/vad.cc

#include "scd/vad.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numeric>
#include <string>

#include <unsupported/Eigen/FFT>

#include "scd/error.h"

namespace scd {

void VadConfig::Validate() const {
  if (!(hop_ms > 0.0) || win_ms < hop_ms) {
    throw Error(ErrorCode::kInvalidConfig, "vad: need win_ms >= hop_ms > 0");
  }
  if (smooth_order < 3 || smooth_order % 2 == 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "vad: smooth_order must be odd and >= 3");
  }
  if (smooth_passes < 0) {
    throw Error(ErrorCode::kInvalidConfig, "vad: smooth_passes < 0");
  }
  if (hist_bins < 10) {
    throw Error(ErrorCode::kInvalidConfig, "vad: hist_bins must be >= 10");
  }
  if (!(local_max_weight > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "vad: local_max_weight must be > 0");
  }
  if (!(strictness_scale >= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "vad: strictness_scale must be >= 1");
  }
}

std::size_t VadMask::VoicedCount() const {
  return static_cast<std::size_t>(std::count(voiced.begin(), voiced.end(), true));
}

double ShortTermEnergy(std::span<const double> frame) {
  if (frame.empty()) return 0.0;
  double acc = 0.0;
  for (double s : frame) acc += s * s;
  return acc / static_cast<double>(frame.size());
}

double SpectralCentroid(std::span<const double> frame) {
  const std::size_t n = frame.size();
  if (n < 2) return 0.0;
  std::vector<double> in(frame.begin(), frame.end());
  std::vector<std::complex<double>> spec;
  Eigen::FFT<double> fft;
  fft.fwd(spec, in);
  const std::size_t bins = n / 2;
  double num = 0.0, den = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double mag = std::abs(spec[b]);
    num += static_cast<double>(b + 1) * mag;
    den += mag;
  }
  // Round-off leaves ~1e-17 magnitudes on an all-zero frame.
  if (den <= 1e-12 * static_cast<double>(n)) return 0.0;
  return num / den;
}

std::vector<double> MedianSmooth(std::span<const double> seq, int order,
                                 int passes) {
  if (order < 3 || order % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "median order must be odd and >= 3");
  }
  std::vector<double> cur(seq.begin(), seq.end());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(cur.size());
  const std::ptrdiff_t half = order / 2;
  std::vector<double> window(static_cast<std::size_t>(order));
  for (int p = 0; p < passes && n > 0; ++p) {
    std::vector<double> next(cur.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      for (std::ptrdiff_t j = -half; j <= half; ++j) {
        const std::ptrdiff_t k = std::clamp<std::ptrdiff_t>(i + j, 0, n - 1);
        window[static_cast<std::size_t>(j + half)] =
            cur[static_cast<std::size_t>(k)];
      }
      std::nth_element(window.begin(), window.begin() + half, window.end());
      next[static_cast<std::size_t>(i)] = window[static_cast<std::size_t>(half)];
    }
    cur.swap(next);
  }
  return cur;
}

double HistogramThreshold(std::span<const double> values,
                          const VadConfig &cfg) {
  if (values.size() < 10) {
    throw Error(ErrorCode::kTooFewValues,
                std::to_string(values.size()) + " values, need >= 10");
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) /
      static_cast<double>(values.size());
  const double w = cfg.local_max_weight;

  // A constant sequence has a single populated bin; zero stands in for the
  // lower (noise) peak so silence stays below threshold and a steady tone
  // stays above it.
  if (hi - lo <= 1e-9 * std::max(std::abs(hi), std::abs(lo))) {
    return (w * 0.0 + mean) / (w + 1.0) * cfg.strictness_scale;
  }

  const int bins = cfg.hist_bins;
  const double width = (hi - lo) / (bins - 1);
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : values) {
    int b = static_cast<int>(std::floor((v - lo) / width + 0.5));
    b = std::clamp(b, 0, bins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  counts = MedianSmooth(counts, 3, 1);

  struct Peak {
    double count;
    double center;
  };
  std::vector<Peak> peaks;
  for (int i = 0; i < bins; ++i) {
    const double c = counts[static_cast<std::size_t>(i)];
    if (c <= 0.0) continue;
    const bool rises = i == 0 || c > counts[static_cast<std::size_t>(i - 1)];
    const bool holds = i == bins - 1 || c >= counts[static_cast<std::size_t>(i + 1)];
    if (rises && holds) peaks.push_back({c, lo + i * width});
  }
  if (peaks.size() < 2) return mean * cfg.strictness_scale;

  // Largest two by count; earlier position wins ties.
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak &a, const Peak &b) { return a.count > b.count; });
  const double m1 = std::min(peaks[0].center, peaks[1].center);
  const double m2 = std::max(peaks[0].center, peaks[1].center);
  return (w * m1 + m2) / (w + 1.0) * cfg.strictness_scale;
}

VadMask DetectVoiced(const AudioClip &clip, const VadConfig &cfg) {
  cfg.Validate();
  const std::size_t win = MsToSamples(cfg.win_ms, clip.sample_rate);
  const std::size_t hop = MsToSamples(cfg.hop_ms, clip.sample_rate);
  const std::size_t count = FrameCount(clip.samples.size(), win, hop);
  if (count < 10) {
    throw Error(ErrorCode::kClipTooShort,
                "VAD needs >= 10 frames, clip yields " + std::to_string(count));
  }
  const FrameGrid grid(clip, cfg.win_ms, cfg.hop_ms);

  std::vector<double> energy(count), centroid(count);
  for (std::size_t i = 0; i < count; ++i) {
    energy[i] = ShortTermEnergy(grid.Frame(i));
    centroid[i] = SpectralCentroid(grid.Frame(i));
  }

  VadMask mask;
  mask.win_samples = win;
  mask.hop_samples = hop;
  mask.energies = MedianSmooth(energy, cfg.smooth_order, cfg.smooth_passes);
  mask.centroids = MedianSmooth(centroid, cfg.smooth_order, cfg.smooth_passes);
  mask.energy_threshold = HistogramThreshold(mask.energies, cfg);
  mask.centroid_threshold = HistogramThreshold(mask.centroids, cfg);
  mask.voiced.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    mask.voiced[i] = mask.energies[i] > mask.energy_threshold &&
                     mask.centroids[i] > mask.centroid_threshold;
  }
  return mask;
}

AudioClip RemoveUnvoiced(const AudioClip &clip, const VadMask &mask) {
  const std::size_t expected =
      FrameCount(clip.samples.size(), mask.win_samples, mask.hop_samples);
  if (mask.hop_samples == 0 || expected != mask.voiced.size()) {
    throw Error(ErrorCode::kMaskMismatch,
                "mask has " + std::to_string(mask.voiced.size()) +
                    " frames, clip framing yields " + std::to_string(expected));
  }
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.reserve(mask.VoicedCount() * mask.hop_samples);
  for (std::size_t i = 0; i < mask.voiced.size(); ++i) {
    if (!mask.voiced[i]) continue;
    const auto first = clip.samples.begin() +
                       static_cast<std::ptrdiff_t>(i * mask.hop_samples);
    out.samples.insert(out.samples.end(), first,
                       first + static_cast<std::ptrdiff_t>(mask.hop_samples));
  }
  out.silent = out.samples.empty();
  return out;
}

void WriteMask(const std::filesystem::path &path, const VadMask &mask) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (bool v : mask.voiced) out << (v ? '1' : '0') << '\n';
}

}  // namespace scd
