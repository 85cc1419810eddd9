// scd/config.h
//
// Pipeline configuration: an INI file with one section per stage.
//
//   [audio]    sample_rate
//   [vad]      win_ms hop_ms smooth_order smooth_passes hist_bins
//              local_max_weight strictness
//   [mfcc]     win_ms hop_ms n_mels n_ceps fft_size delta_halfwidth
//   [concat]   win hop
//   [cmvn]     scope             speaker or corpus
//   [network]  hidden            comma-separated hidden layer sizes
//   [train]    lambda_schedule cg_iters_per_stage stop_delta stop_patience
//              init_range seed holdout_fraction
//   [scd]      interval_s p second_difference intervals tolerance
//   [paths]    corpus features model
//   [run]      jobs
//
// Missing keys keep their defaults; unknown sections or keys are rejected.

#ifndef SCD_CONFIG_H_
#define SCD_CONFIG_H_

#include <filesystem>
#include <string>
#include <vector>

#include "scd/change_detection.h"
#include "scd/classifier.h"
#include "scd/features.h"
#include "scd/vad.h"

namespace scd {

struct PipelinePaths {
  std::string corpus;
  std::string features;
  std::string model;

  bool operator==(const PipelinePaths &) const = default;
};

/// Which frames share CMVN statistics when preparing a speaker corpus.
/// Conversations are always normalized per file.
enum class CmvnScope { kSpeaker, kCorpus };

const char *CmvnScopeName(CmvnScope scope);

struct PipelineConfig {
  int sample_rate = kDefaultSampleRate;
  VadConfig vad;
  /// features.mfcc.sample_rate mirrors sample_rate.
  FeaturePipelineConfig features;
  /// Corpus-wide statistics keep between-speaker level differences, which
  /// the classifier needs; per-speaker statistics erase part of them.
  CmvnScope cmvn_scope = CmvnScope::kCorpus;
  std::vector<int> hidden_layers{200};
  TrainConfig train;
  /// Fraction of each speaker's training super-frames (taken from the end)
  /// held out to decide early stopping. 0 disables early stopping.
  double holdout_fraction = 0.1;
  ScdConfig scd;
  /// Interval lengths reported by multi-interval commands.
  std::vector<double> intervals{0.5, 1.0, 2.0};
  /// Boundary tolerance used when scoring (0 = exact position).
  int tolerance = 0;
  PipelinePaths paths;
  int jobs = 1;

  /// Input layer from the feature config, hidden layers, n_speakers outputs.
  NetworkShape Shape(int n_speakers) const;
  /// Per-field and cross-field checks; throws kInvalidConfig.
  void Validate() const;
  /// Input dim == 3 * n_ceps * concat win and output dim == n_speakers.
  void ValidateShape(const NetworkShape &shape, int n_speakers) const;
  bool operator==(const PipelineConfig &) const = default;
};

PipelineConfig ParseConfig(const std::string &text);
PipelineConfig LoadConfig(const std::filesystem::path &path);
/// Every key is written; ParseConfig(SerializeConfig(c)) == c.
std::string SerializeConfig(const PipelineConfig &cfg);

/// "3,1,0.3" -> {3, 1, 0.3}; "inf" is accepted. Throws kInvalidConfig.
std::vector<double> ParseDoubleList(const std::string &text);
std::vector<int> ParseIntList(const std::string &text);
/// Shortest round-trip decimal form; infinity is "inf".
std::string FormatDouble(double v);

}  // namespace scd

#endif  // SCD_CONFIG_H_
