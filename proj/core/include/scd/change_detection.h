// scd/change_detection.h
//
// Speaker change detection on likelihood sequences: interval mean vectors,
// p-norm distances between adjacent intervals, a two-Gaussian Bayes
// threshold on those distances, and scoring against ground truth.
//
// Boundary t (t = 1 .. n-1) sits between interval t-1 and interval t, at
// time t * interval_s. Per-boundary vectors are indexed from 0 for t = 1.

#ifndef SCD_CHANGE_DETECTION_H_
#define SCD_CHANGE_DETECTION_H_

#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scd/classifier.h"

namespace scd {

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();
inline constexpr double kSigmaFloor = 1e-6;

struct ScdConfig {
  double interval_s = 1.0;
  /// Norm order; kInfNorm selects the max norm.
  double p = 2.0;
  bool use_second_difference = false;

  void Validate() const;
  bool operator==(const ScdConfig &) const = default;
};

struct IntervalSeries {
  std::vector<Eigen::VectorXd> means;
  std::vector<int> frames_per_interval;
  std::vector<double> interval_starts;
  double interval_s = 0.0;

  std::size_t size() const { return means.size(); }
};

/// Assigns each frame to interval floor(start / interval_s) and averages.
/// Only intervals fully covered by the sequence's audio span,
/// (n - 1) * hop + win, are kept. Throws kTooShortForIntervals below two
/// intervals and kEmptyInterval if a kept interval receives no frame.
IntervalSeries IntervalMeans(const LikelihoodSequence &seq,
                             const ScdConfig &cfg);

/// (sum |a_k - b_k|^p)^(1/p); max |a_k - b_k| for p = infinity.
double PNormDistance(const Eigen::VectorXd &a, const Eigen::VectorXd &b,
                     double p);

/// (cur - prev) + (cur - next).
double SecondDifference(double prev, double cur, double next);

/// d'_t for t = 1 .. n-1.
std::vector<double> BoundaryDistances(const IntervalSeries &series, double p);

/// d''_t for every boundary. A missing neighbour at either end is replaced
/// by the boundary's own distance, which zeroes that half of the sum.
std::vector<double> SecondDifferences(std::span<const double> distances);

struct GaussianPair {
  double mu_neg = 0.0, sigma_neg = 1.0, prior_neg = 0.5;
  double mu_pos = 0.0, sigma_pos = 1.0, prior_pos = 0.5;
};

/// Sample mean and unbiased standard deviation per class (floored at
/// kSigmaFloor); priors are class frequencies. Throws kClassEmpty when a
/// class has fewer than two samples, kLengthMismatch on unequal inputs.
GaussianPair FitGaussians(std::span<const double> samples,
                          const std::vector<bool> &labels);

struct BayesThreshold {
  double x = 0.0;
  /// No decision boundary between the class means; x is their midpoint.
  bool degenerate = false;
};

/// Point where prior-weighted class densities are equal.
BayesThreshold SolveBayesThreshold(const GaussianPair &g);

struct ScoreMetrics {
  int tp = 0, fp = 0, tn = 0, fn = 0;
  double pe = 0.0, f1 = 0.0, fnr = 0.0, fpr = 0.0;

  int Positives() const { return tp + fn; }
  int Negatives() const { return tn + fp; }
};

struct DetectionReport {
  std::vector<bool> flags;
  std::vector<double> distances;  // d' (or d'' when second difference is on)
  std::vector<double> boundary_times;
  ScoreMetrics metrics;
};

/// Flags boundary t when its distance exceeds the threshold.
DetectionReport Detect(const IntervalSeries &series, const ScdConfig &cfg,
                       double threshold);

/// Confusion counts by position. F1 is 1 when there is nothing to find and
/// nothing was flagged. Throws kLengthMismatch.
ScoreMetrics Score(const std::vector<bool> &flags,
                   const std::vector<bool> &truth);

/// As Score, but a flag within `tolerance` boundaries of an unmatched true
/// change counts as a hit. tolerance 0 is identical to Score.
ScoreMetrics ScoreWithTolerance(const std::vector<bool> &flags,
                                const std::vector<bool> &truth, int tolerance);

/// Expected rates when both classes follow the fitted Gaussians and the
/// threshold is applied: FNR = Phi((x - mu_pos)/sigma_pos),
/// FPR = 1 - Phi((x - mu_neg)/sigma_neg), counts weighted by priors.
ScoreMetrics TheoreticalScore(const GaussianPair &g, double threshold);

double NormalCdf(double z);

/// Threshold file record: one line per (metric, interval) calibration.
struct ThresholdRecord {
  std::string metric;  // "d1" (adjacent distance) or "d2" (second difference)
  double p = 2.0;
  double interval_s = 1.0;
  double threshold = 0.0;
  bool degenerate = false;
  GaussianPair fit;
};

void WriteThresholdFile(const std::filesystem::path &path,
                        const std::vector<ThresholdRecord> &records);
std::vector<ThresholdRecord> ReadThresholdFile(const std::filesystem::path &path);
/// Throws kInvalidArgument when no record matches.
const ThresholdRecord &FindThreshold(const std::vector<ThresholdRecord> &records,
                                     const ScdConfig &cfg);

std::string MetricName(const ScdConfig &cfg);

}  // namespace scd

#endif  // SCD_CHANGE_DETECTION_H_
