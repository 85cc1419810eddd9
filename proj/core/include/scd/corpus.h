// scd/corpus.h
//
// Speaker dataset layout, synthesized conversations with known change
// points, and ground-truth labeling of interval boundaries.
//
// Layout: root/manifest.tsv with tab-separated `speaker_id  relative_path
// category` rows (category is "train" or "test"; lines starting with '#'
// are comments), plus one folder of WAV files per speaker.

#ifndef SCD_CORPUS_H_
#define SCD_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scd/audio_io.h"
#include "scd/vad.h"

namespace scd {

/// kTrain: speaker-specific text (TIMIT SX/SI). kTest: text shared by all
/// speakers (TIMIT SA), used for classifier testing.
enum class UtteranceCategory { kTrain, kTest };

const char *CategoryName(UtteranceCategory c);

struct Utterance {
  std::filesystem::path path;  // absolute or relative to the working dir
  UtteranceCategory category = UtteranceCategory::kTrain;
};

struct Speaker {
  std::string id;
  std::vector<Utterance> utterances;

  std::vector<Utterance> OfCategory(UtteranceCategory c) const;
};

struct SpeakerDataset {
  std::filesystem::path root;
  std::vector<Speaker> speakers;  // lexicographic by id

  const Speaker &Get(const std::string &id) const;
  std::vector<std::string> Ids() const;
};

/// Reads and validates root/manifest.tsv. Throws kMissingManifest when the
/// manifest or a listed file is absent, kEmptySpeaker when a speaker folder
/// holds no WAV file or a speaker has no train utterance.
SpeakerDataset ScanDataset(const std::filesystem::path &root);

/// Maps a TIMIT tree (<root>/<dialect>/<speaker>/*.WAV) onto the dataset
/// model: SX/SI -> train, SA -> test. Only male speakers (id starting with
/// 'M') when male_only. Speakers are sorted by id.
SpeakerDataset ScanTimit(const std::filesystem::path &root,
                         bool male_only = true);

/// Loads any supported container (RIFF/WAVE or NIST SPHERE).
AudioClip LoadUtterance(const std::filesystem::path &path, int sample_rate);

void WriteManifest(const SpeakerDataset &ds);

struct Conversation {
  AudioClip audio;
  std::vector<double> change_points;  // seconds, ascending
  std::vector<std::string> speaker_order;
  double block_s = 0.0;  // per-speaker duration T
};

struct ConversationOptions {
  int sample_rate = kDefaultSampleRate;
  /// Peak-normalize and strip unvoiced frames from every utterance before
  /// duration accounting.
  bool apply_vad = true;
  VadConfig vad;
  double min_block_s = 1.0;
  /// When > 0, T is rounded down to a multiple of this so that change
  /// points land on interval boundaries.
  double block_quantum_s = 0.0;
  /// Which utterances to draw from.
  UtteranceCategory category = UtteranceCategory::kTrain;
};

/// Concatenates each speaker's (shuffled by seed) utterances, truncates to
/// T = min total duration over the speakers, and joins the blocks in the
/// given order. Throws kSpeakerTooShort when some speaker has less than
/// min_block_s of speech.
Conversation BuildConversation(const SpeakerDataset &ds,
                               const std::vector<std::string> &speakers,
                               uint64_t seed, const ConversationOptions &opts);

/// Same rule over already-prepared per-speaker speech.
Conversation BuildConversationFromSpeech(const std::vector<AudioClip> &speech,
                                         const std::vector<std::string> &ids,
                                         const ConversationOptions &opts);

/// Boundary t (t = 1 .. n-1, n = floor(duration / interval)) is positive
/// iff a change point lies in [t * interval, (t + 1) * interval).
std::vector<bool> TruthLabels(const Conversation &conv, double interval_s);
std::vector<bool> TruthLabels(std::span<const double> change_points,
                              double interval_s, std::size_t n_intervals);

/// Sidecar: one change time (seconds) per line; '#' lines are comments.
void WriteChangePoints(const std::filesystem::path &path,
                       const Conversation &conv);
std::vector<double> ReadChangePoints(const std::filesystem::path &path);

}  // namespace scd

#endif  // SCD_CORPUS_H_
