// scd/pipeline.cc

#include "scd/pipeline.h"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "scd/error.h"
#include "scd/log.h"
#include "scd/parallel.h"

namespace fs = std::filesystem;

namespace scd {
namespace {

constexpr const char *kStoreIndex = "features.tsv";
constexpr const char *kStoreFingerprint = "fingerprint.txt";

bool IsShortInput(const Error &e) {
  return e.code() == ErrorCode::kClipTooShort || e.code() == ErrorCode::kTooFewFrames ||
         e.code() == ErrorCode::kEmptyAudio;
}

FeatureSequence Stack(const std::vector<const FeatureSequence *> &parts) {
  FeatureSequence out;
  Eigen::Index rows = 0;
  for (const FeatureSequence *p : parts) rows += p->size();
  out.frames.resize(rows, parts.front()->dim());
  out.frame_hop_s = parts.front()->frame_hop_s;
  out.frame_win_s = parts.front()->frame_win_s;
  Eigen::Index r = 0;
  for (const FeatureSequence *p : parts) {
    out.frames.middleRows(r, p->size()) = p->frames;
    r += p->size();
  }
  return out;
}

FeatureSequence Rows(const FeatureSequence &seq, Eigen::Index begin, Eigen::Index count) {
  FeatureSequence out;
  out.frames = seq.frames.middleRows(begin, count);
  out.frame_hop_s = seq.frame_hop_s;
  out.frame_win_s = seq.frame_win_s;
  return out;
}

std::string FingerprintText(const PipelineConfig &cfg) {
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016" PRIx64, cfg.features.Fingerprint());
  return std::string("fingerprint ") + hex + "\nfeatures " + cfg.features.Canonical() +
         "\ncmvn " + CmvnScopeName(cfg.cmvn_scope) + "\n";
}

}  // namespace

UtteranceFeatures ExtractUtterance(const AudioClip &clip, const PipelineConfig &cfg,
                                   bool apply_vad) {
  UtteranceFeatures out;
  out.samples_in = clip.samples.size();
  AudioClip speech = NormalizePeak(clip);
  if (speech.silent) {
    throw Error(ErrorCode::kEmptyAudio, "clip is all zeros");
  }
  if (apply_vad) {
    out.mask = DetectVoiced(speech, cfg.vad);
    speech = RemoveUnvoiced(speech, out.mask);
  }
  out.samples_kept = speech.samples.size();
  out.mfcc = AddDeltas(Mfcc(speech, cfg.features.mfcc), cfg.features.mfcc.delta_halfwidth);
  return out;
}

std::vector<PreparedSpeaker> PrepareCorpus(const SpeakerDataset &ds,
                                           const PipelineConfig &cfg,
                                           PrepareSummary *summary) {
  struct Job {
    std::size_t speaker;
    const Utterance *utt;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < ds.speakers.size(); ++s) {
    for (const Utterance &u : ds.speakers[s].utterances) jobs.push_back({s, &u});
  }
  std::vector<UtteranceFeatures> extracted(jobs.size());
  std::vector<char> kept(jobs.size(), 0);
  ParallelFor(jobs.size(), cfg.jobs, [&](std::size_t i) {
    const fs::path &path = jobs[i].utt->path;
    try {
      extracted[i] = ExtractUtterance(LoadUtterance(path, cfg.sample_rate), cfg);
      kept[i] = 1;
    } catch (const Error &e) {
      if (!IsShortInput(e)) throw e.WithContext(path.string());
      SCD_LOG(kWarn) << path.string() << ": skipped (" << e.detail() << ")";
    }
  });

  PrepareSummary sum;
  std::vector<PreparedSpeaker> out(ds.speakers.size());
  for (std::size_t s = 0; s < ds.speakers.size(); ++s) out[s].id = ds.speakers[s].id;

  // Statistics are pooled over all of a speaker's utterances, or over the
  // whole corpus.
  std::vector<std::vector<FeatureSequence>> parts(ds.speakers.size());
  std::vector<bool> has_train(ds.speakers.size(), false);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    ++sum.utterances;
    sum.samples_in += extracted[i].samples_in;
    sum.samples_kept += extracted[i].samples_kept;
    if (!kept[i]) {
      ++sum.skipped;
      continue;
    }
    parts[jobs[i].speaker].push_back(extracted[i].mfcc);
    if (jobs[i].utt->category == UtteranceCategory::kTrain) has_train[jobs[i].speaker] = true;
  }
  std::vector<CmvnStats> stats(ds.speakers.size());
  for (std::size_t s = 0; s < ds.speakers.size(); ++s) {
    if (!has_train[s]) {
      throw Error(ErrorCode::kEmptySpeaker,
                  ds.speakers[s].id + " has no usable train utterance");
    }
    if (cfg.cmvn_scope == CmvnScope::kSpeaker) stats[s] = ComputeCmvnStats(parts[s]);
  }
  if (cfg.cmvn_scope == CmvnScope::kCorpus) {
    std::vector<FeatureSequence> all;
    for (auto &p : parts) all.insert(all.end(), p.begin(), p.end());
    std::fill(stats.begin(), stats.end(), ComputeCmvnStats(all));
  }

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!kept[i]) continue;
    const Job &job = jobs[i];
    PreparedUtterance pu;
    pu.source = job.utt->path;
    pu.category = job.utt->category;
    pu.samples_in = extracted[i].samples_in;
    pu.samples_kept = extracted[i].samples_kept;
    pu.mask = std::move(extracted[i].mask);
    try {
      const FeatureSequence normed = ApplyCmvn(extracted[i].mfcc, stats[job.speaker]);
      pu.super_frames =
          ConcatFrames(normed, cfg.features.concat_win, cfg.features.concat_hop);
    } catch (const Error &e) {
      if (!IsShortInput(e)) throw e.WithContext(pu.source.string());
      SCD_LOG(kWarn) << pu.source.string() << ": skipped (" << e.detail() << ")";
      ++sum.skipped;
      continue;
    }
    out[job.speaker].utterances.push_back(std::move(pu));
  }
  if (summary) *summary = sum;
  return out;
}

TrainingData AssembleTrainingData(const std::vector<PreparedSpeaker> &speakers,
                                  double holdout_fraction) {
  TrainingData data;
  for (const PreparedSpeaker &spk : speakers) {
    std::vector<const FeatureSequence *> parts;
    for (const PreparedUtterance &u : spk.utterances) {
      if (u.category == UtteranceCategory::kTrain) {
        parts.push_back(&u.super_frames);
      } else {
        data.test[spk.id].push_back(u.super_frames);
      }
    }
    if (parts.empty()) {
      throw Error(ErrorCode::kEmptySpeaker, spk.id + " has no train features");
    }
    const FeatureSequence all = Stack(parts);
    const auto held = static_cast<Eigen::Index>(
        std::floor(holdout_fraction * static_cast<double>(all.size())));
    if (held > 0 && held < all.size()) {
      data.train[spk.id] = Rows(all, 0, all.size() - held);
      data.holdout[spk.id] = Rows(all, all.size() - held, held);
    } else {
      data.train[spk.id] = all;
    }
  }
  return data;
}

Model TrainModel(const TrainingData &data, const PipelineConfig &cfg,
                 TrainReport *report) {
  const int k = static_cast<int>(data.train.size());
  const NetworkShape shape = cfg.Shape(k);
  cfg.ValidateShape(shape, k);
  Model model = Train(data.train, cfg.train, shape, data.holdout, report);
  model.feature_fingerprint = cfg.features.Fingerprint();
  model.feature_config = cfg.features.Canonical();
  return model;
}

void CheckFingerprint(const Model &model, const PipelineConfig &cfg) {
  if (model.feature_fingerprint != cfg.features.Fingerprint()) {
    throw Error(ErrorCode::kFingerprintMismatch,
                "model expects features [" + model.feature_config +
                    "] but the configuration produces [" + cfg.features.Canonical() +
                    "]");
  }
}

void WriteFeatureStore(const fs::path &dir, const std::vector<PreparedSpeaker> &speakers,
                       const PipelineConfig &cfg, bool force) {
  if (!force && fs::exists(dir / kStoreIndex)) {
    throw Error(ErrorCode::kInvalidArgument,
                (dir / kStoreIndex).string() + " exists; pass --force to overwrite");
  }
  fs::create_directories(dir);
  std::ofstream index(dir / kStoreIndex, std::ios::trunc);
  if (!index) throw Error(ErrorCode::kIo, "cannot write " + (dir / kStoreIndex).string());
  index << "# speaker_id\tcategory\tsource\tfeatures\n";
  for (const PreparedSpeaker &spk : speakers) {
    fs::create_directories(dir / spk.id);
    std::map<std::string, int> used;
    for (const PreparedUtterance &u : spk.utterances) {
      std::string stem = u.source.stem().string();
      if (used[stem]++ > 0) stem += "_" + std::to_string(used[stem] - 1);
      const fs::path rel = fs::path(spk.id) / (stem + ".feat");
      SaveFeatures(dir / rel, u.super_frames);
      if (!u.mask.voiced.empty()) {
        WriteMask(dir / fs::path(spk.id) / (stem + ".mask"), u.mask);
      }
      index << spk.id << '\t' << CategoryName(u.category) << '\t' << u.source.string()
            << '\t' << rel.generic_string() << '\n';
    }
  }
  std::ofstream fp(dir / kStoreFingerprint, std::ios::trunc);
  fp << FingerprintText(cfg);
}

std::vector<PreparedSpeaker> ReadFeatureStore(const fs::path &dir,
                                              const PipelineConfig &cfg) {
  std::ifstream index(dir / kStoreIndex);
  if (!index) {
    throw Error(ErrorCode::kMissingManifest,
                "no " + std::string(kStoreIndex) + " in " + dir.string() +
                    " (run preprocess first)");
  }
  std::ifstream fp(dir / kStoreFingerprint);
  std::stringstream fps;
  fps << fp.rdbuf();
  if (fps.str() != FingerprintText(cfg)) {
    throw Error(ErrorCode::kFingerprintMismatch,
                dir.string() + " was written under a different feature configuration");
  }
  std::map<std::string, PreparedSpeaker> by_id;
  std::string line;
  while (std::getline(index, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string id, cat, source, rel;
    if (!std::getline(is, id, '\t') || !std::getline(is, cat, '\t') ||
        !std::getline(is, source, '\t') || !std::getline(is, rel, '\t')) {
      throw Error(ErrorCode::kCorruptHeader, "malformed line in " + (dir / kStoreIndex).string());
    }
    PreparedUtterance u;
    u.source = source;
    u.category = cat == "test" ? UtteranceCategory::kTest : UtteranceCategory::kTrain;
    try {
      u.super_frames = LoadFeatures(dir / rel);
    } catch (const Error &e) {
      throw e.WithContext((dir / rel).string());
    }
    by_id[id].id = id;
    by_id[id].utterances.push_back(std::move(u));
  }
  std::vector<PreparedSpeaker> out;
  for (auto &[id, spk] : by_id) out.push_back(std::move(spk));
  if (out.empty()) throw Error(ErrorCode::kEmptySpeaker, dir.string() + " holds no features");
  return out;
}

FeatureSequence ClipSuperFrames(const AudioClip &clip, const PipelineConfig &cfg,
                                bool apply_vad) {
  if (clip.sample_rate != cfg.sample_rate) {
    throw Error(ErrorCode::kSampleRateMismatch,
                "clip is " + std::to_string(clip.sample_rate) + " Hz, expected " +
                    std::to_string(cfg.sample_rate) + " Hz");
  }
  const UtteranceFeatures f = ExtractUtterance(clip, cfg, apply_vad);
  return ConcatFrames(Cmvn(f.mfcc), cfg.features.concat_win, cfg.features.concat_hop);
}

LikelihoodSequence ConversationLikelihoods(const Model &model, const AudioClip &clip,
                                           const PipelineConfig &cfg, bool apply_vad) {
  CheckFingerprint(model, cfg);
  return Transform(model, ClipSuperFrames(clip, cfg, apply_vad));
}

BoundarySeries MakeBoundarySeries(const LabeledConversation &conv, const ScdConfig &cfg) {
  const IntervalSeries series = IntervalMeans(conv.loglik, cfg);
  const DetectionReport rep = Detect(series, cfg, 0.0);
  BoundarySeries out;
  out.distances = rep.distances;
  out.boundary_times = rep.boundary_times;
  out.truth = TruthLabels(conv.change_points, cfg.interval_s, series.size());
  return out;
}

ThresholdRecord Calibrate(const std::vector<LabeledConversation> &convs,
                          const ScdConfig &cfg) {
  std::vector<double> samples;
  std::vector<bool> labels;
  for (const LabeledConversation &c : convs) {
    const BoundarySeries b = MakeBoundarySeries(c, cfg);
    samples.insert(samples.end(), b.distances.begin(), b.distances.end());
    labels.insert(labels.end(), b.truth.begin(), b.truth.end());
  }
  ThresholdRecord rec;
  rec.metric = MetricName(cfg);
  rec.p = cfg.p;
  rec.interval_s = cfg.interval_s;
  rec.fit = FitGaussians(samples, labels);
  const BayesThreshold thr = SolveBayesThreshold(rec.fit);
  rec.threshold = thr.x;
  rec.degenerate = thr.degenerate;
  if (thr.degenerate) {
    SCD_LOG(kWarn) << "no Bayes boundary between the class means at interval "
                   << cfg.interval_s << " s; using their midpoint";
  }
  return rec;
}

DetectionReport DetectAndScore(const LabeledConversation &conv, const ScdConfig &cfg,
                               double threshold, int tolerance) {
  const IntervalSeries series = IntervalMeans(conv.loglik, cfg);
  DetectionReport rep = Detect(series, cfg, threshold);
  const std::vector<bool> truth =
      TruthLabels(conv.change_points, cfg.interval_s, series.size());
  rep.metrics = ScoreWithTolerance(rep.flags, truth, tolerance);
  return rep;
}

}  // namespace scd
