// scd/pipeline.h
//
// End-to-end stages shared by the command line tool and the integration
// tests: corpus preprocessing, training-set assembly, feature stores,
// conversation transforms, threshold calibration and detection.

#ifndef SCD_PIPELINE_H_
#define SCD_PIPELINE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "scd/change_detection.h"
#include "scd/classifier.h"
#include "scd/config.h"
#include "scd/corpus.h"
#include "scd/features.h"

namespace scd {

/// Peak-normalized, voiced-only, 39-dim features of one clip.
struct UtteranceFeatures {
  FeatureSequence mfcc;  // [static | delta | delta2], not normalized
  VadMask mask;
  std::size_t samples_in = 0;
  std::size_t samples_kept = 0;
};

/// Throws kClipTooShort / kTooFewFrames when too little voiced audio is left.
UtteranceFeatures ExtractUtterance(const AudioClip &clip,
                                   const PipelineConfig &cfg,
                                   bool apply_vad = true);

struct PreparedUtterance {
  std::filesystem::path source;
  UtteranceCategory category = UtteranceCategory::kTrain;
  FeatureSequence super_frames;  // normalized and concatenated
  VadMask mask;
  std::size_t samples_in = 0;
  std::size_t samples_kept = 0;
};

struct PreparedSpeaker {
  std::string id;
  std::vector<PreparedUtterance> utterances;
};

struct PrepareSummary {
  std::size_t utterances = 0;
  std::size_t skipped = 0;  // too little voiced audio
  std::size_t samples_in = 0;
  std::size_t samples_kept = 0;
};

/// Every utterance is normalized with statistics pooled over all of its
/// speaker's utterances (or the whole corpus, per cfg.cmvn_scope). Per-file work fans out over cfg.jobs workers.
/// Errors carry the file name.
std::vector<PreparedSpeaker> PrepareCorpus(const SpeakerDataset &ds,
                                           const PipelineConfig &cfg,
                                           PrepareSummary *summary = nullptr);

struct TrainingData {
  SpeakerFeatures train;
  SpeakerFeatures holdout;
  SpeakerFiles test;
};

/// Stacks each speaker's train super-frames; the trailing holdout_fraction
/// of them becomes the early-stopping holdout.
TrainingData AssembleTrainingData(const std::vector<PreparedSpeaker> &speakers,
                                  double holdout_fraction);

/// Trains with cfg.Shape(#speakers) and stamps the feature fingerprint.
Model TrainModel(const TrainingData &data, const PipelineConfig &cfg,
                 TrainReport *report = nullptr);

/// Throws kFingerprintMismatch when the model was trained on features
/// from a different feature configuration.
void CheckFingerprint(const Model &model, const PipelineConfig &cfg);

/// Feature store layout: <dir>/features.tsv (speaker, category, source,
/// relative feature path), <dir>/fingerprint.txt, one .feat dump and one
/// .mask text file per utterance. Refuses to overwrite unless `force`.
void WriteFeatureStore(const std::filesystem::path &dir,
                       const std::vector<PreparedSpeaker> &speakers,
                       const PipelineConfig &cfg, bool force);
/// Throws kFingerprintMismatch when the store was written under another
/// feature configuration and kMissingManifest when features.tsv is absent.
std::vector<PreparedSpeaker> ReadFeatureStore(const std::filesystem::path &dir,
                                              const PipelineConfig &cfg);

/// Normalized super-frames of a whole clip with per-file statistics.
/// Conversations are assembled from voiced speech, so VAD is off by default.
FeatureSequence ClipSuperFrames(const AudioClip &clip, const PipelineConfig &cfg,
                                bool apply_vad = false);

LikelihoodSequence ConversationLikelihoods(const Model &model,
                                           const AudioClip &clip,
                                           const PipelineConfig &cfg,
                                           bool apply_vad = false);

struct LabeledConversation {
  LikelihoodSequence loglik;
  std::vector<double> change_points;
};

/// The distance series selected by cfg (d' or d'') and its truth labels.
struct BoundarySeries {
  std::vector<double> distances;
  std::vector<double> boundary_times;
  std::vector<bool> truth;
};

BoundarySeries MakeBoundarySeries(const LabeledConversation &conv,
                                  const ScdConfig &cfg);

/// Fits the two class-conditional Gaussians over the boundaries of all
/// conversations and solves for the Bayes threshold.
ThresholdRecord Calibrate(const std::vector<LabeledConversation> &convs,
                          const ScdConfig &cfg);

/// Detection on one conversation, scored against its change points with the
/// given boundary tolerance.
DetectionReport DetectAndScore(const LabeledConversation &conv,
                               const ScdConfig &cfg, double threshold,
                               int tolerance = 0);

}  // namespace scd

#endif  // SCD_PIPELINE_H_
