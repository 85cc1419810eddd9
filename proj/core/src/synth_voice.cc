// scd/synth_voice.cc

#include "scd/synth_voice.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "scd/error.h"
#include "scd/parallel.h"
#include "scd/rng.h"

namespace fs = std::filesystem;

namespace scd {
namespace {

constexpr std::array<double, 3> kBaseFormants{500, 1500, 2500};
constexpr std::array<double, 3> kBaseBandwidths{60, 90, 120};

// Vowel targets as multipliers of the speaker's neutral F1..F3. All speakers
// share the set so that vowel identity carries no speaker information.
constexpr std::array<std::array<double, 3>, 6> kVowels{{
    {1.46, 0.73, 0.98},
    {0.54, 1.53, 1.20},
    {0.70, 0.75, 1.00},
    {1.06, 1.23, 0.99},
    {1.10, 0.75, 1.00},
    {1.32, 1.15, 0.96},
}};

constexpr double kPeak = 0.9;
constexpr double kBackgroundDb = -32.0;
constexpr double kRampSeconds = 0.025;
constexpr std::size_t kGlideStep = 32;

// Second-order digital resonator, unity gain at DC.
class Resonator {
 public:
  void Set(double freq, double bw, double sr) {
    const double t = 1.0 / sr;
    c_ = -std::exp(-2.0 * std::numbers::pi * bw * t);
    b_ = 2.0 * std::exp(-std::numbers::pi * bw * t) *
         std::cos(2.0 * std::numbers::pi * freq * t);
    a_ = 1.0 - b_ - c_;
  }
  double Step(double x) {
    const double y = a_ * x + b_ * y1_ + c_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a_ = 1.0, b_ = 0.0, c_ = 0.0, y1_ = 0.0, y2_ = 0.0;
};

struct Syllable {
  std::size_t begin = 0;
  std::size_t end = 0;
  int vowel = 0;       // target at onset
  int glide_to = 0;    // target at offset
};

std::vector<Syllable> PlanSyllables(Rng &rng, std::size_t n, int sr) {
  std::vector<Syllable> out;
  double t = rng.Uniform(0.05, 0.2);
  const double total = static_cast<double>(n) / sr;
  while (true) {
    const double len = rng.Uniform(0.12, 0.3);
    if (t + len > total - 0.05) break;
    Syllable s;
    s.begin = static_cast<std::size_t>(t * sr);
    s.end = static_cast<std::size_t>((t + len) * sr);
    s.vowel = static_cast<int>(rng.Below(kVowels.size()));
    s.glide_to = static_cast<int>(rng.Below(kVowels.size()));
    out.push_back(s);
    t += len;
    t += rng.Uniform() < 0.1 ? rng.Uniform(0.3, 0.6) : rng.Uniform(0.03, 0.15);
  }
  return out;
}

}  // namespace

int MaxSyntheticSpeakers() {
  return static_cast<int>((kMaxF0Hz - kMinF0Hz) / kF0SlotHz + 1e-9) + 1;
}

std::vector<VoiceProfile> DrawVoices(int n, uint64_t seed, double accent_spread) {
  const int slots = MaxSyntheticSpeakers();
  if (n < 1 || n > slots) {
    throw Error(ErrorCode::kTooManySpeakers,
                "requested " + std::to_string(n) + " voices, the F0 grid holds " +
                    std::to_string(slots));
  }
  Rng rng(MixSeed(seed, 0xf0));
  std::vector<int> order(static_cast<std::size_t>(slots));
  for (int i = 0; i < slots; ++i) order[static_cast<std::size_t>(i)] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.Below(i)]);
  }
  std::vector<VoiceProfile> voices;
  for (int s = 0; s < n; ++s) {
    VoiceProfile v;
    v.f0_hz = kMinF0Hz + kF0SlotHz * order[static_cast<std::size_t>(s)];
    const double tract = rng.Uniform(0.82, 1.18);
    for (std::size_t k = 0; k < 3; ++k) {
      v.formants_hz[k] = kBaseFormants[k] / tract * rng.Uniform(0.9, 1.1);
      v.bandwidths_hz[k] = kBaseBandwidths[k] * rng.Uniform(0.85, 1.2);
    }
    v.glottal_pole = rng.Uniform(0.25, 0.5);
    v.breathiness = rng.Uniform(0.02, 0.08);
    for (auto &vowel : v.vowel_bias) {
      for (double &f : vowel) f = rng.Uniform(1.0 - accent_spread, 1.0 + accent_spread);
    }
    voices.push_back(v);
  }
  return voices;
}

AudioClip SynthesizeUtterance(const VoiceProfile &voice, uint64_t stream_seed,
                              double seconds, int sample_rate) {
  if (!(seconds > 0.5) || sample_rate < 8000) {
    throw Error(ErrorCode::kInvalidArgument,
                "synthetic utterances need >= 0.5 s at >= 8 kHz");
  }
  Rng rng(stream_seed);
  const auto n = static_cast<std::size_t>(seconds * sample_rate);
  const double sr = sample_rate;

  const double f0 = voice.f0_hz * rng.Uniform(0.98, 1.02);
  const double declination = rng.Uniform(0.0, 0.04);
  std::array<double, 3> formants{};
  for (std::size_t k = 0; k < 3; ++k) {
    formants[k] = voice.formants_hz[k] * rng.Uniform(0.97, 1.03);
  }
  const std::vector<Syllable> plan = PlanSyllables(rng, n, sample_rate);

  std::vector<double> speech(n, 0.0);
  std::array<Resonator, 3> tract;
  double phase = 0.0, lp1 = 0.0, lp2 = 0.0, prev = 0.0;
  const double g = voice.glottal_pole;
  const auto ramp = static_cast<std::size_t>(kRampSeconds * sr);
  std::size_t next = 0;
  auto target = [&](int vowel, std::size_t k) {
    const auto v = static_cast<std::size_t>(vowel);
    const double shape = 1.0 + voice.vowel_spread * (kVowels[v][k] - 1.0);
    return formants[k] * shape * voice.vowel_bias[v][k];
  };
  for (const Syllable &syl : plan) {
    // Let the filters ring out through the preceding gap.
    for (; next < syl.end; ++next) {
      double src = 0.0;
      if (next >= syl.begin) {
        // Formants glide between the two targets; coefficients are
        // refreshed every kGlideStep samples.
        if ((next - syl.begin) % kGlideStep == 0) {
          const double u = static_cast<double>(next - syl.begin) /
                           static_cast<double>(syl.end - syl.begin);
          const double w = u * u * (3.0 - 2.0 * u);
          for (std::size_t k = 0; k < 3; ++k) {
            const double f = (1.0 - w) * target(syl.vowel, k) + w * target(syl.glide_to, k);
            tract[k].Set(std::min(f, 0.45 * sr), voice.bandwidths_hz[k], sr);
          }
        }
        const double frac = static_cast<double>(next) / static_cast<double>(n);
        phase += f0 * (1.0 + declination * (1.0 - 2.0 * frac)) / sr;
        const double pulse = phase >= 1.0 ? 1.0 : 0.0;
        if (phase >= 1.0) phase -= 1.0;
        const std::size_t in = next - syl.begin, left = syl.end - next;
        const std::size_t edge = std::min(in, left);
        const double env =
            edge >= ramp ? 1.0
                         : 0.5 - 0.5 * std::cos(std::numbers::pi *
                                                static_cast<double>(edge) /
                                                static_cast<double>(ramp));
        src = env * (pulse + voice.breathiness * rng.Normal());
      }
      lp1 = (1.0 - g) * src + g * lp1;
      lp2 = (1.0 - g) * lp1 + g * lp2;
      double y = lp2;
      for (Resonator &r : tract) y = r.Step(y);
      speech[next] = y - prev;
      prev = y;
    }
  }
  for (; next < n; ++next) {
    double y = 0.0;
    for (Resonator &r : tract) y = r.Step(y);
    speech[next] = y - prev;
    prev = y;
  }

  // Level each syllable (with the ring-out before the next onset) so loudness
  // does not depend on how the vowel's formants meet the harmonics.
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const std::size_t end = i + 1 < plan.size() ? plan[i + 1].begin : n;
    double e = 0.0;
    for (std::size_t j = plan[i].begin; j < plan[i].end; ++j) e += speech[j] * speech[j];
    const double syl_rms =
        std::sqrt(e / static_cast<double>(plan[i].end - plan[i].begin));
    if (syl_rms <= 0.0) continue;
    const double gain = rng.Uniform(0.7, 1.0) / syl_rms;
    for (std::size_t j = plan[i].begin; j < end; ++j) speech[j] *= gain;
  }

  double power = 0.0;
  for (double s : speech) power += s * s;
  const double rms = std::sqrt(power / static_cast<double>(n));
  const double level = (rms > 0.0 ? rms : 1e-3) * std::pow(10.0, kBackgroundDb / 20.0);

  // Doubly integrated white noise: low-level, low-frequency background.
  std::vector<double> noise(n);
  double i1 = 0.0, i2 = 0.0, noise_power = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    i1 = 0.995 * i1 + rng.Normal();
    i2 = 0.995 * i2 + i1;
    noise[i] = i2;
    noise_power += i2 * i2;
  }
  const double noise_rms = std::sqrt(noise_power / static_cast<double>(n));
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    clip.samples[i] = speech[i] + noise[i] * level / noise_rms;
    peak = std::max(peak, std::abs(clip.samples[i]));
  }
  for (double &s : clip.samples) s *= kPeak / peak;
  return clip;
}

SpeakerDataset SynthSpeakerCorpus(const SynthCorpusOptions &opts,
                                  const fs::path &root) {
  if (opts.utts_per_speaker < 1 || opts.test_utts < 0 ||
      opts.test_utts >= opts.utts_per_speaker) {
    throw Error(ErrorCode::kInvalidArgument,
                "need at least one train utterance per speaker");
  }
  std::vector<VoiceProfile> voices = DrawVoices(opts.n_speakers, opts.seed, opts.accent_spread);
  for (VoiceProfile &v : voices) v.vowel_spread = opts.vowel_spread;
  SpeakerDataset ds;
  ds.root = root;
  fs::create_directories(root);
  const auto utts = static_cast<std::size_t>(opts.utts_per_speaker);
  for (int s = 0; s < opts.n_speakers; ++s) {
    char id[64];
    std::snprintf(id, sizeof(id), "%s%03d", opts.id_prefix.c_str(), s);
    Speaker spk;
    spk.id = id;
    fs::create_directories(root / spk.id);
    for (std::size_t u = 0; u < utts; ++u) {
      char name[32];
      std::snprintf(name, sizeof(name), "u%02zu.wav", u);
      spk.utterances.push_back(
          {root / spk.id / name,
           u >= utts - static_cast<std::size_t>(opts.test_utts)
               ? UtteranceCategory::kTest
               : UtteranceCategory::kTrain});
    }
    ds.speakers.push_back(std::move(spk));
  }
  ParallelFor(ds.speakers.size() * utts, opts.jobs, [&](std::size_t job) {
    const std::size_t s = job / utts, u = job % utts;
    const uint64_t stream = MixSeed(opts.seed, s + 1, u + 1);
    WriteWav(ds.speakers[s].utterances[u].path,
             SynthesizeUtterance(voices[s], stream, opts.utt_seconds,
                                 opts.sample_rate));
  });
  WriteManifest(ds);
  return ScanDataset(root);
}

}  // namespace scd
