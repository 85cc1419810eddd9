// scd/change_detection.cc

#include "scd/change_detection.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scd/error.h"

namespace scd {

void ScdConfig::Validate() const {
  if (!(interval_s > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "scd: interval must be > 0");
  }
  if (!(p > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "scd: norm order must be > 0");
  }
}

IntervalSeries IntervalMeans(const LikelihoodSequence &seq,
                             const ScdConfig &cfg) {
  cfg.Validate();
  if (seq.size() == 0 || !(seq.frame_hop_s > 0.0)) {
    throw Error(ErrorCode::kTooShortForIntervals, "empty likelihood sequence");
  }
  const double span =
      static_cast<double>(seq.size() - 1) * seq.frame_hop_s + seq.frame_win_s;
  const auto count =
      static_cast<std::size_t>(std::floor(span / cfg.interval_s + 1e-9));
  if (count < 2) {
    throw Error(ErrorCode::kTooShortForIntervals,
                "sequence spans " + std::to_string(span) + " s, need two " +
                    std::to_string(cfg.interval_s) + " s intervals");
  }
  IntervalSeries out;
  out.interval_s = cfg.interval_s;
  out.means.assign(count, Eigen::VectorXd::Zero(seq.dim()));
  out.frames_per_interval.assign(count, 0);
  for (Eigen::Index m = 0; m < seq.size(); ++m) {
    const double start = static_cast<double>(m) * seq.frame_hop_s;
    const auto t = static_cast<std::size_t>(std::floor(start / cfg.interval_s + 1e-9));
    if (t >= count) break;
    out.means[t] += seq.rows.row(m).transpose();
    ++out.frames_per_interval[t];
  }
  for (std::size_t t = 0; t < count; ++t) {
    if (out.frames_per_interval[t] == 0) {
      throw Error(ErrorCode::kEmptyInterval,
                  "interval " + std::to_string(t) + " has no frames");
    }
    out.means[t] /= out.frames_per_interval[t];
    out.interval_starts.push_back(static_cast<double>(t) * cfg.interval_s);
  }
  return out;
}

double PNormDistance(const Eigen::VectorXd &a, const Eigen::VectorXd &b,
                     double p) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "distance between " + std::to_string(a.size()) + "- and " +
                    std::to_string(b.size()) + "-dim vectors");
  }
  if (!(p > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "norm order must be > 0");
  }
  const Eigen::ArrayXd diff = (a - b).array().abs();
  if (std::isinf(p)) return diff.size() == 0 ? 0.0 : diff.maxCoeff();
  if (p == 1.0) return diff.sum();
  if (p == 2.0) return std::sqrt(diff.square().sum());
  return std::pow(diff.pow(p).sum(), 1.0 / p);
}

double SecondDifference(double prev, double cur, double next) {
  return (cur - prev) + (cur - next);
}

std::vector<double> BoundaryDistances(const IntervalSeries &series, double p) {
  std::vector<double> d;
  for (std::size_t t = 1; t < series.size(); ++t) {
    d.push_back(PNormDistance(series.means[t], series.means[t - 1], p));
  }
  return d;
}

std::vector<double> SecondDifferences(std::span<const double> distances) {
  std::vector<double> out(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const double prev = i > 0 ? distances[i - 1] : distances[i];
    const double next = i + 1 < distances.size() ? distances[i + 1] : distances[i];
    out[i] = SecondDifference(prev, distances[i], next);
  }
  return out;
}

GaussianPair FitGaussians(std::span<const double> samples,
                          const std::vector<bool> &labels) {
  if (samples.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "samples and labels differ in length");
  }
  double sum[2] = {0, 0};
  int n[2] = {0, 0};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int c = labels[i] ? 1 : 0;
    sum[c] += samples[i];
    ++n[c];
  }
  if (n[0] < 2 || n[1] < 2) {
    throw Error(ErrorCode::kClassEmpty,
                std::to_string(n[0]) + " negative / " + std::to_string(n[1]) +
                    " positive samples; need >= 2 of each");
  }
  const double mu[2] = {sum[0] / n[0], sum[1] / n[1]};
  double ss[2] = {0, 0};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int c = labels[i] ? 1 : 0;
    ss[c] += (samples[i] - mu[c]) * (samples[i] - mu[c]);
  }
  GaussianPair g;
  const double total = n[0] + n[1];
  g.mu_neg = mu[0];
  g.sigma_neg = std::max(std::sqrt(ss[0] / (n[0] - 1)), kSigmaFloor);
  g.prior_neg = n[0] / total;
  g.mu_pos = mu[1];
  g.sigma_pos = std::max(std::sqrt(ss[1] / (n[1] - 1)), kSigmaFloor);
  g.prior_pos = n[1] / total;
  return g;
}

BayesThreshold SolveBayesThreshold(const GaussianPair &g) {
  // log(pn N(x|mn,sn)) - log(pp N(x|mp,sp)) = a x^2 + b x + c.
  const double vn = g.sigma_neg * g.sigma_neg;
  const double vp = g.sigma_pos * g.sigma_pos;
  const double a = 1.0 / (2.0 * vp) - 1.0 / (2.0 * vn);
  const double b = g.mu_neg / vn - g.mu_pos / vp;
  const double c = g.mu_pos * g.mu_pos / (2.0 * vp) -
                   g.mu_neg * g.mu_neg / (2.0 * vn) +
                   std::log(g.prior_neg * g.sigma_pos / (g.prior_pos * g.sigma_neg));
  const double mid = 0.5 * (g.mu_neg + g.mu_pos);

  if (g.sigma_neg == g.sigma_pos) {
    if (b == 0.0) return {mid, true};
    return {-c / b, false};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {mid, true};
  // Cancellation-free pair of roots.
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double roots[2] = {q / a, q != 0.0 ? c / q : q / a};
  const double lo = std::min(g.mu_neg, g.mu_pos);
  const double hi = std::max(g.mu_neg, g.mu_pos);
  bool found = false;
  double best = mid;
  for (double r : roots) {
    if (r > lo && r < hi && (!found || std::abs(r - mid) < std::abs(best - mid))) {
      best = r;
      found = true;
    }
  }
  if (!found) return {mid, true};
  return {best, false};
}

DetectionReport Detect(const IntervalSeries &series, const ScdConfig &cfg,
                       double threshold) {
  if (series.size() < 2) {
    throw Error(ErrorCode::kTooShortForIntervals, "need >= 2 intervals");
  }
  DetectionReport rep;
  rep.distances = BoundaryDistances(series, cfg.p);
  if (cfg.use_second_difference) {
    rep.distances = SecondDifferences(rep.distances);
  }
  for (std::size_t i = 0; i < rep.distances.size(); ++i) {
    rep.flags.push_back(rep.distances[i] > threshold);
    rep.boundary_times.push_back(static_cast<double>(i + 1) * series.interval_s);
  }
  return rep;
}

namespace {

void FinishMetrics(ScoreMetrics *m) {
  const int p = m->Positives();
  const int n = m->Negatives();
  const int total = p + n;
  m->pe = total > 0 ? static_cast<double>(m->fn + m->fp) / total : 0.0;
  const int denom = 2 * m->tp + m->fp + m->fn;
  m->f1 = denom > 0 ? 2.0 * m->tp / denom : 1.0;
  m->fnr = p > 0 ? static_cast<double>(m->fn) / p : 0.0;
  m->fpr = n > 0 ? static_cast<double>(m->fp) / n : 0.0;
}

}  // namespace

ScoreMetrics Score(const std::vector<bool> &flags,
                   const std::vector<bool> &truth) {
  if (flags.size() != truth.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(flags.size()) + " flags vs " +
                    std::to_string(truth.size()) + " truth labels");
  }
  ScoreMetrics m;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] && truth[i]) ++m.tp;
    else if (flags[i]) ++m.fp;
    else if (truth[i]) ++m.fn;
    else ++m.tn;
  }
  FinishMetrics(&m);
  return m;
}

ScoreMetrics ScoreWithTolerance(const std::vector<bool> &flags,
                                const std::vector<bool> &truth, int tolerance) {
  if (tolerance <= 0) return Score(flags, truth);
  if (flags.size() != truth.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(flags.size()) + " flags vs " +
                    std::to_string(truth.size()) + " truth labels");
  }
  const auto n = static_cast<std::ptrdiff_t>(flags.size());
  std::vector<bool> used(flags.size(), false);
  ScoreMetrics m;
  // Exact hits first, then nearest free flag within the tolerance.
  std::vector<bool> matched(flags.size(), false);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (truth[static_cast<std::size_t>(i)] && flags[static_cast<std::size_t>(i)]) {
      used[static_cast<std::size_t>(i)] = matched[static_cast<std::size_t>(i)] = true;
    }
  }
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (!truth[static_cast<std::size_t>(i)] || matched[static_cast<std::size_t>(i)]) continue;
    for (std::ptrdiff_t off = 1; off <= tolerance && !matched[static_cast<std::size_t>(i)]; ++off) {
      for (std::ptrdiff_t j : {i - off, i + off}) {
        if (j < 0 || j >= n) continue;
        const auto ju = static_cast<std::size_t>(j);
        if (flags[ju] && !used[ju] && !truth[ju]) {
          used[ju] = matched[static_cast<std::size_t>(i)] = true;
          break;
        }
      }
    }
  }
  int negatives = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (truth[i]) {
      matched[i] ? ++m.tp : ++m.fn;
    } else {
      ++negatives;
      if (flags[i] && !used[i]) ++m.fp;
    }
  }
  // Flags absorbed by a nearby change are not false alarms.
  m.tn = negatives - m.fp;
  FinishMetrics(&m);
  return m;
}

double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

ScoreMetrics TheoreticalScore(const GaussianPair &g, double threshold) {
  ScoreMetrics m;
  m.fnr = NormalCdf((threshold - g.mu_pos) / g.sigma_pos);
  m.fpr = 1.0 - NormalCdf((threshold - g.mu_neg) / g.sigma_neg);
  const double tp = g.prior_pos * (1.0 - m.fnr);
  const double fn = g.prior_pos * m.fnr;
  const double fp = g.prior_neg * m.fpr;
  m.pe = fn + fp;
  const double denom = 2.0 * tp + fp + fn;
  m.f1 = denom > 0.0 ? 2.0 * tp / denom : 1.0;
  return m;
}

std::string MetricName(const ScdConfig &cfg) {
  return cfg.use_second_difference ? "d2" : "d1";
}

void WriteThresholdFile(const std::filesystem::path &path,
                        const std::vector<ThresholdRecord> &records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.precision(17);
  out << "# metric p interval_s threshold degenerate mu_neg sigma_neg "
         "prior_neg mu_pos sigma_pos prior_pos\n";
  for (const ThresholdRecord &r : records) {
    out << r.metric << ' ';
    if (std::isinf(r.p)) {
      out << "inf";
    } else {
      out << r.p;
    }
    out << ' ' << r.interval_s << ' ' << r.threshold << ' '
        << (r.degenerate ? 1 : 0) << ' ' << r.fit.mu_neg << ' '
        << r.fit.sigma_neg << ' ' << r.fit.prior_neg << ' ' << r.fit.mu_pos
        << ' ' << r.fit.sigma_pos << ' ' << r.fit.prior_pos << '\n';
  }
}

std::vector<ThresholdRecord> ReadThresholdFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open threshold file " + path.string());
  std::vector<ThresholdRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    ThresholdRecord r;
    std::string p;
    int degenerate = 0;
    if (!(is >> r.metric >> p >> r.interval_s >> r.threshold >> degenerate >>
          r.fit.mu_neg >> r.fit.sigma_neg >> r.fit.prior_neg >> r.fit.mu_pos >>
          r.fit.sigma_pos >> r.fit.prior_pos)) {
      throw Error(ErrorCode::kCorruptHeader,
                  path.string() + ":" + std::to_string(line_no) +
                      ": malformed threshold record");
    }
    r.p = p == "inf" ? kInfNorm : std::stod(p);
    r.degenerate = degenerate != 0;
    records.push_back(r);
  }
  return records;
}

const ThresholdRecord &FindThreshold(const std::vector<ThresholdRecord> &records,
                                     const ScdConfig &cfg) {
  const std::string metric = MetricName(cfg);
  for (const ThresholdRecord &r : records) {
    const bool same_p = (std::isinf(r.p) && std::isinf(cfg.p)) ||
                        std::abs(r.p - cfg.p) < 1e-9;
    if (r.metric == metric && same_p &&
        std::abs(r.interval_s - cfg.interval_s) < 1e-9) {
      return r;
    }
  }
  throw Error(ErrorCode::kInvalidArgument,
              "no threshold for metric " + metric + " at interval " +
                  std::to_string(cfg.interval_s) + " s; run calibrate first");
}

}  // namespace scd
