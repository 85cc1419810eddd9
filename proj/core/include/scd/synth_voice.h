// scd/synth_voice.h
//
// Source-filter speaker synthesis for self-contained corpora: a glottal
// pulse train plus breath noise, shaped by a speaker-specific three-formant
// resonator cascade, spoken as syllables separated by low-level
// low-frequency background noise.

#ifndef SCD_SYNTH_VOICE_H_
#define SCD_SYNTH_VOICE_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scd/audio_io.h"
#include "scd/corpus.h"

namespace scd {

inline constexpr double kMinF0Hz = 80.0;
inline constexpr double kMaxF0Hz = 250.0;
inline constexpr double kF0SlotHz = 5.0;

/// Number of distinct F0 values available to one corpus.
int MaxSyntheticSpeakers();

struct VoiceProfile {
  double f0_hz = 120.0;
  std::array<double, 3> formants_hz{500, 1500, 2500};
  std::array<double, 3> bandwidths_hz{60, 90, 120};
  /// One-pole coefficient of each of the two glottal low-pass stages.
  double glottal_pole = 0.7;
  /// Breath noise level relative to the pulse source.
  double breathiness = 0.04;
  /// Per-vowel, per-formant factors on the shared vowel targets (accent).
  std::array<std::array<double, 3>, 6> vowel_bias{{{1, 1, 1},
                                                   {1, 1, 1},
                                                   {1, 1, 1},
                                                   {1, 1, 1},
                                                   {1, 1, 1},
                                                   {1, 1, 1}}};
  /// Scales every vowel's departure from the neutral tract (0 = one vowel).
  double vowel_spread = 1.0;
};

/// n voices with F0s drawn without replacement from the 5 Hz grid on
/// [80, 250] Hz. Each speaker's vowel targets are scaled by factors drawn
/// from 1 +- accent_spread. Throws kTooManySpeakers when n exceeds the grid.
std::vector<VoiceProfile> DrawVoices(int n, uint64_t seed,
                                     double accent_spread = 0.12);

/// One utterance. Per-utterance jitter of +-2% on F0 and +-3% on formant
/// centers comes from stream_seed.
AudioClip SynthesizeUtterance(const VoiceProfile &voice, uint64_t stream_seed,
                              double seconds,
                              int sample_rate = kDefaultSampleRate);

struct SynthCorpusOptions {
  int n_speakers = 20;
  int utts_per_speaker = 6;
  double utt_seconds = 4.0;
  uint64_t seed = 1;
  int sample_rate = kDefaultSampleRate;
  std::string id_prefix = "syn";
  /// Trailing utterances per speaker tagged as test (shared-text) files.
  int test_utts = 1;
  double accent_spread = 0.12;
  double vowel_spread = 0.25;
  /// Worker threads; each utterance has its own RNG stream.
  int jobs = 1;
};

/// Writes <root>/<id>/uNN.wav and <root>/manifest.tsv, replacing existing
/// files of the same name, and returns the scanned dataset.
SpeakerDataset SynthSpeakerCorpus(const SynthCorpusOptions &opts,
                                  const std::filesystem::path &root);

}  // namespace scd

#endif  // SCD_SYNTH_VOICE_H_
