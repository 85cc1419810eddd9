// scd command line tool: every pipeline stage as a subcommand.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scd/change_detection.h"
#include "scd/classifier.h"
#include "scd/config.h"
#include "scd/corpus.h"
#include "scd/error.h"
#include "scd/log.h"
#include "scd/pipeline.h"
#include "scd/synth_voice.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

int ExitCodeFor(scd::ErrorCode code) {
  switch (code) {
    case scd::ErrorCode::kInvalidArgument:
    case scd::ErrorCode::kInvalidConfig:
      return kExitUsage;
    case scd::ErrorCode::kDivergedCost:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

// Options shared by every subcommand; flags override the config file.
struct GlobalOptions {
  std::string config_path;
  std::optional<int> jobs;
  std::optional<double> vad_strictness;
  std::optional<int> vad_order;
  std::optional<int> vad_passes;
};

scd::PipelineConfig ResolveConfig(const GlobalOptions &g) {
  scd::PipelineConfig cfg =
      g.config_path.empty() ? scd::PipelineConfig{} : scd::LoadConfig(g.config_path);
  if (g.jobs) cfg.jobs = *g.jobs;
  if (g.vad_strictness) cfg.vad.strictness_scale = *g.vad_strictness;
  if (g.vad_order) cfg.vad.smooth_order = *g.vad_order;
  if (g.vad_passes) cfg.vad.smooth_passes = *g.vad_passes;
  cfg.Validate();
  return cfg;
}

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string DefaultSidecar(const fs::path &audio) {
  fs::path p = audio;
  p.replace_extension(".changes.txt");
  return p.string();
}

std::vector<scd::PreparedSpeaker> LoadPrepared(const std::string &corpus,
                                               const std::string &features,
                                               const scd::PipelineConfig &cfg) {
  if (!features.empty()) return scd::ReadFeatureStore(features, cfg);
  if (corpus.empty()) {
    throw scd::Error(scd::ErrorCode::kInvalidArgument, "give --corpus or --features");
  }
  scd::PrepareSummary sum;
  auto out = scd::PrepareCorpus(scd::ScanDataset(corpus), cfg, &sum);
  SCD_LOG(kInfo) << "prepared " << sum.utterances - sum.skipped << " of " << sum.utterances
                 << " utterances";
  return out;
}

void PrintAccuracy(const scd::AccuracyReport &r, std::ostream &os) {
  auto secs = [](double frames) {
    return Fixed(scd::FramesToDuration(static_cast<int>(std::lround(frames))), 2);
  };
  os << "Frame accuracy  File accuracy  Frames (seconds) needed for 100% accuracy\n"
     << "                               min         mean        max\n"
     << Fixed(100.0 * r.frame_accuracy, 2) << "%          "
     << Fixed(100.0 * r.file_accuracy, 2) << "%        " << r.needed_min << " ("
     << secs(r.needed_min) << ")    " << Fixed(r.needed_mean, 1) << " ("
     << secs(r.needed_mean) << ")  " << r.needed_max << " (" << secs(r.needed_max)
     << ")\n"
     << "files " << r.files << ", frames " << r.frames << "\n";
}

void PrintMetricHeader(std::ostream &os) {
  os << "interval_s  metric  Pe(%)    F1      FNR(%)   FPR(%)   TP  FP  TN  FN\n";
}

void PrintMetricRow(std::ostream &os, double interval, const std::string &metric,
                    const scd::ScoreMetrics &m) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-11.2f %-7s %-8.2f %-7.3f %-8.2f %-8.2f %-3d %-3d %-3d %d\n",
                interval, metric.c_str(), 100.0 * m.pe, m.f1, 100.0 * m.fnr, 100.0 * m.fpr,
                m.tp, m.fp, m.tn, m.fn);
  os << buf;
}

struct FlagRow {
  double time = 0.0;
  double distance = 0.0;
  bool flag = false;
};

void WriteFlagsCsv(std::ostream &os, const scd::DetectionReport &rep,
                   const std::vector<bool> *truth) {
  os.precision(10);
  os << "boundary_time_s,distance,flag";
  if (truth) os << ",truth";
  os << '\n';
  for (std::size_t i = 0; i < rep.flags.size(); ++i) {
    os << rep.boundary_times[i] << ',' << rep.distances[i] << ',' << (rep.flags[i] ? 1 : 0);
    if (truth) os << ',' << ((*truth)[i] ? 1 : 0);
    os << '\n';
  }
}

std::vector<FlagRow> ReadFlagsCsv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw scd::Error(scd::ErrorCode::kIo, "cannot open " + path);
  std::vector<FlagRow> rows;
  std::string line;
  std::getline(in, line);
  if (line.rfind("boundary_time_s,distance,flag", 0) != 0) {
    throw scd::Error(scd::ErrorCode::kCorruptHeader, path + ": not a flags CSV");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string a, b, c;
    std::getline(is, a, ',');
    std::getline(is, b, ',');
    std::getline(is, c, ',');
    try {
      rows.push_back({std::stod(a), std::stod(b), std::stoi(c) != 0});
    } catch (const std::exception &) {
      throw scd::Error(scd::ErrorCode::kCorruptHeader, path + ": bad row '" + line + "'");
    }
  }
  return rows;
}

std::vector<double> IntervalsOrConfig(const std::vector<double> &flag,
                                      const scd::PipelineConfig &cfg) {
  return flag.empty() ? cfg.intervals : flag;
}

scd::LabeledConversation LoadConversation(const scd::Model &model, const std::string &audio,
                                          const std::string &labels,
                                          const scd::PipelineConfig &cfg) {
  scd::LabeledConversation conv;
  try {
    conv.loglik = scd::ConversationLikelihoods(
        model, scd::LoadUtterance(audio, cfg.sample_rate), cfg);
  } catch (const scd::Error &e) {
    throw e.WithContext(audio);
  }
  conv.change_points = scd::ReadChangePoints(labels.empty() ? DefaultSidecar(audio) : labels);
  return conv;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Neural speaker classifier and speaker change detector"};
  app.require_subcommand(1, 2);
  GlobalOptions g;
  app.add_option("--config", g.config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--jobs", g.jobs, "worker threads for per-file stages")->check(CLI::PositiveNumber);
  app.add_option("--vad-strictness", g.vad_strictness, "VAD threshold scale")
      ->check(CLI::PositiveNumber);
  app.add_option("--vad-order", g.vad_order, "VAD median filter order")->check(CLI::PositiveNumber);
  app.add_option("--vad-passes", g.vad_passes, "VAD median filter passes")
      ->check(CLI::NonNegativeNumber);

  // synth corpus / synth conversation
  auto *synth = app.add_subcommand("synth", "generate synthetic corpora and conversations");
  synth->require_subcommand(1);
  scd::SynthCorpusOptions sc;
  std::string sc_out;
  auto *synth_corpus = synth->add_subcommand("corpus", "synthetic speaker corpus");
  synth_corpus->add_option("--out", sc_out, "output directory")->required();
  synth_corpus->add_option("--speakers", sc.n_speakers, "number of speakers");
  synth_corpus->add_option("--utts", sc.utts_per_speaker, "utterances per speaker");
  synth_corpus->add_option("--seconds", sc.utt_seconds, "utterance length");
  synth_corpus->add_option("--seed", sc.seed, "corpus seed");
  synth_corpus->add_option("--prefix", sc.id_prefix, "speaker id prefix");
  synth_corpus->add_option("--test-utts", sc.test_utts, "trailing test utterances per speaker");
  synth_corpus->add_option("--accent-spread", sc.accent_spread, "per-speaker vowel target spread");
  synth_corpus->add_option("--vowel-spread", sc.vowel_spread, "scale of the shared vowel inventory");

  std::string conv_corpus, conv_out, conv_truth, conv_category = "train";
  std::vector<std::string> conv_speakers;
  uint64_t conv_seed = 1;
  double conv_quantum = 0.0;
  bool conv_no_vad = false;
  auto *synth_conv = synth->add_subcommand("conversation", "concatenate speakers into a conversation");
  synth_conv->add_option("--corpus", conv_corpus, "speaker dataset root")->required();
  synth_conv->add_option("--speakers", conv_speakers, "speaker ids in order (default: all)")
      ->delimiter(',');
  synth_conv->add_option("--out", conv_out, "output WAV")->required();
  synth_conv->add_option("--truth", conv_truth, "change point sidecar (default <out>.changes.txt)");
  synth_conv->add_option("--seed", conv_seed, "utterance shuffle seed");
  synth_conv->add_option("--quantum", conv_quantum, "round block length down to a multiple (s)");
  synth_conv->add_option("--category", conv_category, "train or test utterances")
      ->check(CLI::IsMember({"train", "test"}));
  synth_conv->add_flag("--no-vad", conv_no_vad, "keep unvoiced frames");

  // preprocess
  std::string pre_corpus, pre_out;
  bool pre_force = false;
  auto *preprocess = app.add_subcommand("preprocess", "VAD + features for every utterance");
  preprocess->add_option("--corpus", pre_corpus, "speaker dataset root")->required();
  preprocess->add_option("--out", pre_out, "feature store directory")->required();
  preprocess->add_flag("--force", pre_force, "overwrite an existing store");

  // train
  std::string tr_corpus, tr_features, tr_out, tr_lambdas;
  std::optional<uint64_t> tr_seed;
  std::vector<int> tr_hidden;
  std::optional<int> tr_iters;
  auto *train = app.add_subcommand("train", "train the speaker classifier");
  train->add_option("--corpus", tr_corpus, "speaker dataset root");
  train->add_option("--features", tr_features, "feature store from preprocess");
  train->add_option("--out", tr_out, "model file");
  train->add_option("--seed", tr_seed, "weight initialization seed");
  train->add_option("--lambda-schedule", tr_lambdas, "comma-separated regularization ladder");
  train->add_option("--hidden", tr_hidden, "hidden layer sizes")->delimiter(',');
  train->add_option("--iters", tr_iters, "line searches per lambda stage");

  // evaluate
  std::string ev_model, ev_corpus, ev_features, ev_csv;
  auto *evaluate = app.add_subcommand("evaluate", "frame and file accuracy on test utterances");
  evaluate->add_option("--model", ev_model, "model file");
  evaluate->add_option("--corpus", ev_corpus, "speaker dataset root");
  evaluate->add_option("--features", ev_features, "feature store from preprocess");
  evaluate->add_option("--csv", ev_csv, "per-file CSV output");

  // calibrate
  std::string cal_model, cal_out;
  std::vector<std::string> cal_convs, cal_labels;
  std::vector<double> cal_intervals;
  std::optional<double> cal_p;
  auto *calibrate = app.add_subcommand("calibrate", "fit Bayes thresholds on labeled conversations");
  calibrate->add_option("--model", cal_model, "model file");
  calibrate->add_option("--conversation", cal_convs, "conversation WAV(s)")->required();
  calibrate->add_option("--labels", cal_labels, "change point sidecar(s), same order");
  calibrate->add_option("--interval", cal_intervals, "interval lengths (default: config)")
      ->delimiter(',');
  calibrate->add_option("--p", cal_p, "norm order (inf for max norm)");
  calibrate->add_option("--out", cal_out, "threshold file")->required();

  // detect
  std::string det_model, det_audio, det_thr, det_out;
  std::optional<double> det_interval, det_p;
  bool det_second = false, det_vad = false;
  auto *detect = app.add_subcommand("detect", "flag speaker changes in a recording");
  detect->add_option("--model", det_model, "model file");
  detect->add_option("--audio", det_audio, "input WAV")->required();
  detect->add_option("--interval", det_interval, "interval length (s)");
  detect->add_option("--p", det_p, "norm order (inf for max norm)");
  detect->add_option("--threshold-file", det_thr, "output of calibrate")->required();
  detect->add_flag("--second-diff", det_second, "use the second difference of distances");
  detect->add_flag("--vad", det_vad, "drop unvoiced frames first (shifts the time axis)");
  detect->add_option("--out", det_out, "flags CSV (default stdout)");

  // score
  std::string sc_flags, sc_truth, sc_csv;
  std::optional<int> sc_tol;
  auto *score = app.add_subcommand("score", "score detection flags against ground truth");
  score->add_option("--flags", sc_flags, "flags CSV from detect")->required();
  score->add_option("--truth", sc_truth, "change point sidecar")->required();
  score->add_option("--tolerance", sc_tol, "boundaries of slack for a hit");
  score->add_option("--csv", sc_csv, "per-boundary CSV with truth column");

  // experiment: calibrate on one conversation, score another, every interval
  std::string ex_model, ex_cal, ex_cal_labels, ex_test, ex_test_labels, ex_csv;
  std::vector<double> ex_intervals;
  std::optional<double> ex_p;
  auto *experiment = app.add_subcommand(
      "experiment", "calibrate and test at each configured interval, both metrics");
  experiment->add_option("--model", ex_model, "model file");
  experiment->add_option("--calibration", ex_cal, "calibration conversation WAV")->required();
  experiment->add_option("--calibration-labels", ex_cal_labels, "its change points");
  experiment->add_option("--test", ex_test, "test conversation WAV")->required();
  experiment->add_option("--test-labels", ex_test_labels, "its change points");
  experiment->add_option("--interval", ex_intervals, "interval lengths")->delimiter(',');
  experiment->add_option("--p", ex_p, "norm order");
  experiment->add_option("--csv", ex_csv, "metric table as CSV");

  // sweep
  std::string sw_corpus, sw_features;
  std::vector<int> sw_nodes{50, 100, 200, 400}, sw_layers{1, 2};
  double sw_subset = 0.1;
  auto *sweep = app.add_subcommand("sweep", "hidden layer/node grid on a frame subset");
  sweep->add_option("--corpus", sw_corpus, "speaker dataset root");
  sweep->add_option("--features", sw_features, "feature store");
  sweep->add_option("--nodes", sw_nodes, "hidden sizes")->delimiter(',');
  sweep->add_option("--layers", sw_layers, "hidden layer counts")->delimiter(',');
  sweep->add_option("--subset", sw_subset, "fraction of train frames used")
      ->check(CLI::Range(0.0, 1.0));

  // config dump
  auto *show_config = app.add_subcommand("config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    scd::PipelineConfig cfg = ResolveConfig(g);
    auto model_path = [&](const std::string &flag) {
      const std::string p = flag.empty() ? cfg.paths.model : flag;
      if (p.empty()) throw scd::Error(scd::ErrorCode::kInvalidArgument, "no --model given");
      return p;
    };

    if (show_config->parsed()) {
      std::cout << scd::SerializeConfig(cfg);
    } else if (synth_corpus->parsed()) {
      sc.sample_rate = cfg.sample_rate;
      sc.jobs = cfg.jobs;
      const scd::SpeakerDataset ds = scd::SynthSpeakerCorpus(sc, sc_out);
      std::cout << "wrote " << ds.speakers.size() << " speakers x " << sc.utts_per_speaker
                << " utterances to " << sc_out << "\n";
    } else if (synth_conv->parsed()) {
      const scd::SpeakerDataset ds = scd::ScanDataset(conv_corpus);
      if (conv_speakers.empty()) conv_speakers = ds.Ids();
      scd::ConversationOptions opts;
      opts.sample_rate = cfg.sample_rate;
      opts.apply_vad = !conv_no_vad;
      opts.vad = cfg.vad;
      opts.block_quantum_s = conv_quantum;
      opts.category = conv_category == "test" ? scd::UtteranceCategory::kTest
                                              : scd::UtteranceCategory::kTrain;
      const scd::Conversation conv = scd::BuildConversation(ds, conv_speakers, conv_seed, opts);
      scd::WriteWav(conv_out, conv.audio);
      const std::string truth = conv_truth.empty() ? DefaultSidecar(conv_out) : conv_truth;
      scd::WriteChangePoints(truth, conv);
      std::cout << "conversation " << conv_out << ": " << conv.speaker_order.size()
                << " speakers, T = " << Fixed(conv.block_s, 3) << " s, "
                << conv.change_points.size() << " changes -> " << truth << "\n";
    } else if (preprocess->parsed()) {
      if (!pre_force && fs::exists(fs::path(pre_out) / "features.tsv")) {
        throw scd::Error(scd::ErrorCode::kInvalidArgument,
                         pre_out + " already holds features; pass --force to overwrite");
      }
      scd::PrepareSummary sum;
      const auto prepared = scd::PrepareCorpus(scd::ScanDataset(pre_corpus), cfg, &sum);
      scd::WriteFeatureStore(pre_out, prepared, cfg, pre_force);
      const double kept = sum.samples_in ? 100.0 * static_cast<double>(sum.samples_kept) /
                                               static_cast<double>(sum.samples_in)
                                         : 0.0;
      std::cout << "utterances " << sum.utterances << " (skipped " << sum.skipped
                << "), audio kept " << Fixed(kept, 1) << "%, dropped "
                << Fixed(100.0 - kept, 1) << "% -> " << pre_out << "\n";
    } else if (train->parsed()) {
      if (tr_seed) cfg.train.rng_seed = *tr_seed;
      if (!tr_lambdas.empty()) cfg.train.lambda_schedule = scd::ParseDoubleList(tr_lambdas);
      if (!tr_hidden.empty()) cfg.hidden_layers = tr_hidden;
      if (tr_iters) cfg.train.cg_iters_per_stage = *tr_iters;
      cfg.Validate();
      const std::string out = model_path(tr_out);
      const auto prepared = LoadPrepared(tr_corpus, tr_features, cfg);
      const scd::TrainingData data = scd::AssembleTrainingData(prepared, cfg.holdout_fraction);
      scd::TrainReport report;
      const scd::Model model = scd::TrainModel(data, cfg, &report);
      scd::SaveModel(out, model);
      std::ofstream(out + ".json") << scd::ModelMetadataJson(model, &report) << "\n";
      std::cout << "stage  lambda  cost_before  cost_after  searches  train_acc  holdout_acc\n";
      for (std::size_t i = 0; i < report.stages.size(); ++i) {
        const scd::StageReport &s = report.stages[i];
        std::cout << i << "      " << s.lambda << "     " << Fixed(s.cost_before, 4) << "      "
                  << Fixed(s.cost_after, 4) << "      " << s.line_searches << "        "
                  << Fixed(100.0 * s.train_frame_accuracy, 2) << "%     "
                  << Fixed(100.0 * s.holdout_frame_accuracy, 2) << "%\n";
      }
      if (report.stopped_early) std::cout << "stopped early\n";
      std::cout << "model -> " << out << "\n";
    } else if (evaluate->parsed()) {
      const scd::Model model = scd::LoadModel(model_path(ev_model));
      scd::CheckFingerprint(model, cfg);
      const auto prepared = LoadPrepared(ev_corpus, ev_features, cfg);
      const scd::TrainingData data = scd::AssembleTrainingData(prepared, 0.0);
      const scd::AccuracyReport rep = scd::Evaluate(model, data.test);
      PrintAccuracy(rep, std::cout);
      if (!ev_csv.empty()) {
        std::ofstream csv(ev_csv);
        csv << "speaker,predicted,frames,frames_correct,frames_needed\n";
        for (const scd::FileAccuracy &f : rep.per_file) {
          csv << f.speaker << ','
              << (f.predicted >= 0 ? model.speaker_labels[static_cast<std::size_t>(f.predicted)]
                                   : "")
              << ',' << f.frames << ',' << f.frames_correct << ',' << f.frames_needed << '\n';
        }
      }
    } else if (calibrate->parsed()) {
      const scd::Model model = scd::LoadModel(model_path(cal_model));
      if (!cal_labels.empty() && cal_labels.size() != cal_convs.size()) {
        throw scd::Error(scd::ErrorCode::kInvalidArgument,
                         "--labels must match --conversation one to one");
      }
      std::vector<scd::LabeledConversation> convs;
      for (std::size_t i = 0; i < cal_convs.size(); ++i) {
        convs.push_back(LoadConversation(model, cal_convs[i],
                                         cal_labels.empty() ? "" : cal_labels[i], cfg));
      }
      std::vector<scd::ThresholdRecord> records;
      for (double interval : IntervalsOrConfig(cal_intervals, cfg)) {
        for (bool second : {false, true}) {
          scd::ScdConfig sc_cfg = cfg.scd;
          sc_cfg.interval_s = interval;
          if (cal_p) sc_cfg.p = *cal_p;
          sc_cfg.use_second_difference = second;
          sc_cfg.Validate();
          records.push_back(scd::Calibrate(convs, sc_cfg));
          const scd::ThresholdRecord &r = records.back();
          std::cout << r.metric << " interval " << interval << " s: x* = " << r.threshold
                    << (r.degenerate ? " (midpoint)" : "") << "\n";
        }
      }
      scd::WriteThresholdFile(cal_out, records);
    } else if (detect->parsed()) {
      if (!fs::exists(det_thr)) {
        throw scd::Error(scd::ErrorCode::kIo, "threshold file " + det_thr +
                                                  " not found; run calibrate first");
      }
      scd::ScdConfig sc_cfg = cfg.scd;
      if (det_interval) sc_cfg.interval_s = *det_interval;
      if (det_p) sc_cfg.p = *det_p;
      if (det_second) sc_cfg.use_second_difference = true;
      sc_cfg.Validate();
      const scd::ThresholdRecord &rec =
          scd::FindThreshold(scd::ReadThresholdFile(det_thr), sc_cfg);
      const scd::Model model = scd::LoadModel(model_path(det_model));
      scd::LikelihoodSequence ll;
      try {
        ll = scd::ConversationLikelihoods(
            model, scd::LoadUtterance(det_audio, cfg.sample_rate), cfg, det_vad);
      } catch (const scd::Error &e) {
        throw e.WithContext(det_audio);
      }
      const scd::DetectionReport rep =
          scd::Detect(scd::IntervalMeans(ll, sc_cfg), sc_cfg, rec.threshold);
      if (det_out.empty()) {
        WriteFlagsCsv(std::cout, rep, nullptr);
      } else {
        std::ofstream out(det_out);
        WriteFlagsCsv(out, rep, nullptr);
      }
    } else if (score->parsed()) {
      const std::vector<FlagRow> rows = ReadFlagsCsv(sc_flags);
      if (rows.empty()) throw scd::Error(scd::ErrorCode::kTooShortForIntervals, "no boundaries");
      const double interval = rows.front().time;
      const std::vector<bool> truth =
          scd::TruthLabels(scd::ReadChangePoints(sc_truth), interval, rows.size() + 1);
      scd::DetectionReport rep;
      for (const FlagRow &r : rows) {
        rep.flags.push_back(r.flag);
        rep.distances.push_back(r.distance);
        rep.boundary_times.push_back(r.time);
      }
      const scd::ScoreMetrics m =
          scd::ScoreWithTolerance(rep.flags, truth, sc_tol.value_or(cfg.tolerance));
      PrintMetricHeader(std::cout);
      PrintMetricRow(std::cout, interval, "-", m);
      if (!sc_csv.empty()) {
        std::ofstream csv(sc_csv);
        WriteFlagsCsv(csv, rep, &truth);
      }
    } else if (experiment->parsed()) {
      const scd::Model model = scd::LoadModel(model_path(ex_model));
      const scd::LabeledConversation cal = LoadConversation(model, ex_cal, ex_cal_labels, cfg);
      const scd::LabeledConversation test =
          LoadConversation(model, ex_test, ex_test_labels, cfg);
      std::ofstream csv;
      if (!ex_csv.empty()) {
        csv.open(ex_csv);
        csv << "interval_s,metric,threshold,pe,f1,fnr,fpr,tp,fp,tn,fn\n";
      }
      PrintMetricHeader(std::cout);
      for (double interval : IntervalsOrConfig(ex_intervals, cfg)) {
        for (bool second : {false, true}) {
          scd::ScdConfig sc_cfg = cfg.scd;
          sc_cfg.interval_s = interval;
          if (ex_p) sc_cfg.p = *ex_p;
          sc_cfg.use_second_difference = second;
          sc_cfg.Validate();
          const scd::ThresholdRecord rec = scd::Calibrate({cal}, sc_cfg);
          const scd::ScoreMetrics m =
              scd::DetectAndScore(test, sc_cfg, rec.threshold, cfg.tolerance).metrics;
          PrintMetricRow(std::cout, interval, rec.metric, m);
          if (csv.is_open()) {
            csv << interval << ',' << rec.metric << ',' << rec.threshold << ',' << m.pe << ','
                << m.f1 << ',' << m.fnr << ',' << m.fpr << ',' << m.tp << ',' << m.fp << ','
                << m.tn << ',' << m.fn << '\n';
          }
        }
      }
    } else if (sweep->parsed()) {
      const auto prepared = LoadPrepared(sw_corpus, sw_features, cfg);
      scd::TrainingData data = scd::AssembleTrainingData(prepared, cfg.holdout_fraction);
      for (auto &[id, seq] : data.train) {
        const auto keep = std::max<Eigen::Index>(
            1, static_cast<Eigen::Index>(std::floor(sw_subset * static_cast<double>(seq.size()))));
        seq.frames.conservativeResize(keep, Eigen::NoChange);
      }
      std::cout << "layers  nodes  holdout_frame_acc\n";
      for (int layers : sw_layers) {
        for (int nodes : sw_nodes) {
          scd::PipelineConfig c = cfg;
          c.hidden_layers.assign(static_cast<std::size_t>(layers), nodes);
          c.Validate();
          scd::TrainReport report;
          const scd::Model model = scd::TrainModel(data, c, &report);
          const double acc = data.holdout.empty() ? scd::FrameAccuracy(model, data.train)
                                                  : scd::FrameAccuracy(model, data.holdout);
          std::cout << layers << "       " << nodes << "    " << Fixed(100.0 * acc, 2) << "%\n";
        }
      }
    }
  } catch (const scd::Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
