// scd/classifier.cc

#include "scd/classifier.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scd/cg_minimize.h"
#include "scd/error.h"
#include "scd/log.h"
#include "scd/rng.h"

namespace scd {
namespace {

// Sigmoid of (input * W[:,1:]^T + bias) for a batch of row vectors.
template <typename InputMatrix>
Eigen::MatrixXd LayerForward(const InputMatrix &input, const Eigen::MatrixXd &w) {
  Eigen::MatrixXd z = input * w.rightCols(w.cols() - 1).transpose();
  z.rowwise() += w.col(0).transpose();
  return z.unaryExpr([](double v) { return Sigmoid(v); });
}

// Activations of layers 1..L-1 (the input layer is not copied).
std::vector<Eigen::MatrixXd> ForwardLayers(const Model &model,
                                           const RowMatrix &x) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(model.weights.size());
  acts.push_back(LayerForward(x, model.weights[0]));
  for (std::size_t l = 1; l < model.weights.size(); ++l) {
    acts.push_back(LayerForward(acts.back(), model.weights[l]));
  }
  return acts;
}

void CheckBatch(const Model &model, const RowMatrix &x,
                const Eigen::MatrixXd &y) {
  if (x.cols() != model.shape.InputDim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "input dim " + std::to_string(x.cols()) + " != network input " +
                    std::to_string(model.shape.InputDim()));
  }
  if (y.rows() != x.rows() || y.cols() != model.shape.OutputDim()) {
    throw Error(ErrorCode::kDimensionMismatch, "label matrix shape mismatch");
  }
  if (x.rows() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "empty batch");
  }
}

double ClampProb(double h) {
  return std::clamp(h, kProbEpsilon, 1.0 - kProbEpsilon);
}

double CrossEntropySum(const Eigen::MatrixXd &h, const Eigen::MatrixXd &y) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      const double p = ClampProb(h(i, j));
      const double t = y(i, j);
      acc += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
  }
  return acc;
}

struct Batch {
  RowMatrix x;
  Eigen::MatrixXd y;
  std::vector<int> labels;
};

Batch StackSpeakers(const SpeakerFeatures &data,
                    const std::vector<std::string> &labels, int input_dim,
                    int classes) {
  Batch b;
  Eigen::Index rows = 0;
  for (const auto &[name, seq] : data) rows += seq.size();
  b.x.resize(rows, input_dim);
  b.y = Eigen::MatrixXd::Zero(rows, classes);
  b.labels.reserve(static_cast<std::size_t>(rows));
  Eigen::Index at = 0;
  for (const auto &[name, seq] : data) {
    const auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end()) {
      throw Error(ErrorCode::kInvalidArgument, "unknown speaker " + name);
    }
    if (seq.size() > 0 && seq.dim() != input_dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  name + ": feature dim " + std::to_string(seq.dim()) +
                      " != network input " + std::to_string(input_dim));
    }
    const int k = static_cast<int>(it - labels.begin());
    b.x.middleRows(at, seq.size()) = seq.frames;
    b.y.col(k).segment(at, seq.size()).setOnes();
    b.labels.insert(b.labels.end(), static_cast<std::size_t>(seq.size()), k);
    at += seq.size();
  }
  return b;
}

int ArgMaxRow(const Eigen::MatrixXd &m, Eigen::Index row) {
  int best = 0;
  for (Eigen::Index k = 1; k < m.cols(); ++k) {
    if (m(row, k) > m(row, best)) best = static_cast<int>(k);
  }
  return best;
}

double BatchAccuracy(const Model &model, const Batch &b) {
  if (b.x.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::MatrixXd h = ForwardBatch(model, b.x);
  int correct = 0;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    correct += ArgMaxRow(h, i) == b.labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(correct) / static_cast<double>(h.rows());
}

}  // namespace

std::size_t NetworkShape::ParameterCount() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += static_cast<std::size_t>(layer_sizes[l + 1]) *
         static_cast<std::size_t>(layer_sizes[l] + 1);
  }
  return n;
}

void NetworkShape::Validate() const {
  if (layer_sizes.size() < 2) {
    throw Error(ErrorCode::kInvalidConfig, "network needs >= 2 layers");
  }
  for (int s : layer_sizes) {
    if (s < 1) throw Error(ErrorCode::kInvalidConfig, "layer size < 1");
  }
}

bool Model::AllFinite() const {
  return std::all_of(weights.begin(), weights.end(),
                     [](const Eigen::MatrixXd &w) { return w.allFinite(); });
}

void TrainConfig::Validate() const {
  if (lambda_schedule.empty() || lambda_schedule.back() != 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "lambda schedule must end at 0");
  }
  for (std::size_t i = 1; i < lambda_schedule.size(); ++i) {
    if (!(lambda_schedule[i] < lambda_schedule[i - 1])) {
      throw Error(ErrorCode::kInvalidConfig,
                  "lambda schedule must be strictly descending");
    }
  }
  if (cg_iters_per_stage < 1) {
    throw Error(ErrorCode::kInvalidConfig, "cg_iters_per_stage must be >= 1");
  }
  if (stop_patience < 1 || stop_delta < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "invalid early-stopping rule");
  }
  if (!(init_range > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "init_range must be > 0");
  }
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Model InitWeights(const NetworkShape &shape, uint64_t seed, double init_range) {
  shape.Validate();
  Model model;
  model.shape = shape;
  Rng rng(MixSeed(seed, 0x5eed));
  for (int l = 0; l + 1 < shape.NumLayers(); ++l) {
    const auto &s = shape.layer_sizes;
    Eigen::MatrixXd w(s[static_cast<std::size_t>(l) + 1],
                      s[static_cast<std::size_t>(l)] + 1);
    // Row-major fill order keeps the stream layout independent of storage.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        double v = rng.Uniform(-init_range, init_range);
        while (v == -init_range) v = rng.Uniform(-init_range, init_range);
        w(r, c) = v;
      }
    }
    model.weights.push_back(std::move(w));
  }
  return model;
}

std::vector<Eigen::VectorXd> Forward(const Model &model,
                                     const Eigen::VectorXd &x) {
  if (x.size() != model.shape.InputDim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "input dim " + std::to_string(x.size()) + " != " +
                    std::to_string(model.shape.InputDim()));
  }
  std::vector<Eigen::VectorXd> acts{x};
  for (const Eigen::MatrixXd &w : model.weights) {
    Eigen::VectorXd z = w.col(0) + w.rightCols(w.cols() - 1) * acts.back();
    acts.push_back(z.unaryExpr([](double v) { return Sigmoid(v); }));
  }
  return acts;
}

Eigen::MatrixXd ForwardBatch(const Model &model, const RowMatrix &x) {
  if (x.cols() != model.shape.InputDim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "input dim " + std::to_string(x.cols()) + " != " +
                    std::to_string(model.shape.InputDim()));
  }
  if (x.rows() == 0) return Eigen::MatrixXd(0, model.shape.OutputDim());
  Eigen::MatrixXd a = LayerForward(x, model.weights[0]);
  for (std::size_t l = 1; l < model.weights.size(); ++l) {
    a = LayerForward(a, model.weights[l]);
  }
  return a;
}

double SquaredWeightNorm(const Model &model) {
  double acc = 0.0;
  for (const Eigen::MatrixXd &w : model.weights) {
    acc += w.rightCols(w.cols() - 1).squaredNorm();
  }
  return acc;
}

double Cost(const Model &model, const RowMatrix &x, const Eigen::MatrixXd &y,
            double lambda) {
  CheckBatch(model, x, y);
  const Eigen::MatrixXd h = ForwardBatch(model, x);
  const double m = static_cast<double>(x.rows());
  return -CrossEntropySum(h, y) / m + lambda / (2.0 * m) * SquaredWeightNorm(model);
}

double CostAndGradient(const Model &model, const RowMatrix &x,
                       const Eigen::MatrixXd &y, double lambda,
                       std::vector<Eigen::MatrixXd> *grad) {
  CheckBatch(model, x, y);
  const double m = static_cast<double>(x.rows());
  const std::vector<Eigen::MatrixXd> acts = ForwardLayers(model, x);
  const Eigen::MatrixXd &h = acts.back();
  const double cost =
      -CrossEntropySum(h, y) / m + lambda / (2.0 * m) * SquaredWeightNorm(model);
  if (grad == nullptr) return cost;

  // dJ/dz at the output is (h - y)/M wherever the clamp is inactive.
  Eigen::MatrixXd delta(h.rows(), h.cols());
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      const double p = h(i, j);
      delta(i, j) = (p < kProbEpsilon || p > 1.0 - kProbEpsilon)
                        ? 0.0
                        : (p - y(i, j)) / m;
    }
  }

  grad->resize(model.weights.size());
  for (std::size_t l = model.weights.size(); l-- > 0;) {
    const Eigen::MatrixXd &w = model.weights[l];
    Eigen::MatrixXd &g = (*grad)[l];
    g.resize(w.rows(), w.cols());
    g.col(0) = delta.colwise().sum().transpose();
    if (l == 0) {
      g.rightCols(w.cols() - 1).noalias() = delta.transpose() * x;
    } else {
      g.rightCols(w.cols() - 1).noalias() = delta.transpose() * acts[l - 1];
    }
    g.rightCols(w.cols() - 1) += (lambda / m) * w.rightCols(w.cols() - 1);
    if (l > 0) {
      const Eigen::MatrixXd &a = acts[l - 1];
      Eigen::MatrixXd back = delta * w.rightCols(w.cols() - 1);
      delta = back.cwiseProduct((a.array() * (1.0 - a.array())).matrix());
    }
  }
  return cost;
}

std::vector<Eigen::MatrixXd> Gradient(const Model &model, const RowMatrix &x,
                                      const Eigen::MatrixXd &y, double lambda) {
  std::vector<Eigen::MatrixXd> grad;
  CostAndGradient(model, x, y, lambda, &grad);
  return grad;
}

Eigen::VectorXd FlattenWeights(const std::vector<Eigen::MatrixXd> &weights) {
  Eigen::Index n = 0;
  for (const auto &w : weights) n += w.size();
  Eigen::VectorXd flat(n);
  Eigen::Index at = 0;
  for (const auto &w : weights) {
    flat.segment(at, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
    at += w.size();
  }
  return flat;
}

void UnflattenWeights(const Eigen::VectorXd &flat, Model *model) {
  Eigen::Index at = 0;
  for (auto &w : model->weights) {
    Eigen::Map<Eigen::VectorXd>(w.data(), w.size()) = flat.segment(at, w.size());
    at += w.size();
  }
}

Model Train(const SpeakerFeatures &train, const TrainConfig &cfg,
            const NetworkShape &shape, const SpeakerFeatures &holdout,
            TrainReport *report) {
  cfg.Validate();
  shape.Validate();
  if (train.empty()) throw Error(ErrorCode::kEmptySpeaker, "no speakers");
  for (const auto &[name, seq] : train) {
    if (seq.size() < 1) {
      throw Error(ErrorCode::kEmptySpeaker, name + " has no training frames");
    }
  }
  if (static_cast<int>(train.size()) != shape.OutputDim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(train.size()) + " speakers but output layer has " +
                    std::to_string(shape.OutputDim()) + " units");
  }

  Model model = InitWeights(shape, cfg.rng_seed, cfg.init_range);
  for (const auto &[name, seq] : train) model.speaker_labels.push_back(name);

  const Batch data = StackSpeakers(train, model.speaker_labels,
                                   shape.InputDim(), shape.OutputDim());
  const Batch held = StackSpeakers(holdout, model.speaker_labels,
                                   shape.InputDim(), shape.OutputDim());

  TrainReport local;
  TrainReport &rep = report != nullptr ? *report : local;
  rep = TrainReport{};
  rep.initial_holdout_accuracy = BatchAccuracy(model, held);
  double last_acc = rep.initial_holdout_accuracy;
  int stale = 0;

  Model scratch = model;
  std::vector<Eigen::MatrixXd> grads;
  Eigen::VectorXd params = FlattenWeights(model.weights);

  for (double lambda : cfg.lambda_schedule) {
    const Objective objective = [&](const Eigen::VectorXd &w,
                                    Eigen::VectorXd *g) {
      UnflattenWeights(w, &scratch);
      const double j = CostAndGradient(scratch, data.x, data.y, lambda, &grads);
      *g = FlattenWeights(grads);
      return j;
    };
    CgOptions opts;
    opts.max_line_searches = cfg.cg_iters_per_stage;
    CgResult cg = MinimizeCg(objective, params, opts);
    if (!cg.x.allFinite() || !std::isfinite(cg.history.back())) {
      throw Error(ErrorCode::kDivergedCost,
                  "cost became non-finite at lambda " + std::to_string(lambda));
    }
    params = std::move(cg.x);
    UnflattenWeights(params, &model);

    StageReport st;
    st.lambda = lambda;
    st.cost_before = cg.history.front();
    st.cost_after = cg.history.back();
    st.line_searches = cg.line_searches;
    st.evaluations = cg.evaluations;
    st.train_frame_accuracy = BatchAccuracy(model, data);
    st.holdout_frame_accuracy = BatchAccuracy(model, held);
    rep.stages.push_back(st);
    rep.total_line_searches += cg.line_searches;
    rep.cost_history.push_back(std::move(cg.history));
    SCD_LOG(kInfo) << "lambda " << lambda << ": J " << st.cost_before << " -> "
                   << st.cost_after << " in " << st.line_searches
                   << " line searches; frame acc train "
                   << st.train_frame_accuracy << " holdout "
                   << st.holdout_frame_accuracy;

    if (held.x.rows() > 0) {
      const double gain = st.holdout_frame_accuracy - last_acc;
      last_acc = st.holdout_frame_accuracy;
      stale = gain < cfg.stop_delta ? stale + 1 : 0;
      if (stale >= cfg.stop_patience && lambda != cfg.lambda_schedule.back()) {
        rep.stopped_early = true;
        SCD_LOG(kInfo) << "holdout accuracy flat for " << stale
                       << " stages; stopping";
        break;
      }
    }
  }
  if (!model.AllFinite()) {
    throw Error(ErrorCode::kDivergedCost, "non-finite weights after training");
  }
  return model;
}

LikelihoodSequence Transform(const Model &model, const FeatureSequence &seq) {
  if (seq.dim() != model.shape.InputDim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature dim " + std::to_string(seq.dim()) + " != network input " +
                    std::to_string(model.shape.InputDim()));
  }
  LikelihoodSequence out;
  out.frame_hop_s = seq.frame_hop_s;
  out.frame_win_s = seq.frame_win_s;
  const Eigen::MatrixXd h = ForwardBatch(model, seq.frames);
  out.rows = h.unaryExpr([](double p) { return std::log(ClampProb(p)); });
  return out;
}

int PredictSpeaker(const LikelihoodSequence &loglik, Eigen::Index m) {
  if (m < 1 || m > loglik.size()) {
    throw Error(ErrorCode::kTooFewFrames,
                "prefix of " + std::to_string(m) + " frames out of " +
                    std::to_string(loglik.size()));
  }
  const Eigen::RowVectorXd sums = loglik.rows.topRows(m).colwise().sum();
  int best = 0;
  for (Eigen::Index k = 1; k < sums.size(); ++k) {
    if (sums(k) > sums(best)) best = static_cast<int>(k);
  }
  return best;
}

int PredictSpeaker(const Model &model, const FeatureSequence &frames,
                   Eigen::Index m) {
  if (m < 1 || m > frames.size()) {
    throw Error(ErrorCode::kTooFewFrames,
                "prefix of " + std::to_string(m) + " frames out of " +
                    std::to_string(frames.size()));
  }
  FeatureSequence head;
  head.frames = frames.frames.topRows(m);
  head.frame_hop_s = frames.frame_hop_s;
  head.frame_win_s = frames.frame_win_s;
  return PredictSpeaker(Transform(model, head), m);
}

double FramesToDuration(int n, double hop_s, double win_s) {
  return (n - 1) * hop_s + win_s;
}

AccuracyReport Evaluate(const Model &model, const SpeakerFiles &dataset) {
  AccuracyReport rep;
  int files_correct = 0, frames_correct = 0;
  std::vector<int> needed;
  for (const auto &[name, files] : dataset) {
    const auto it =
        std::find(model.speaker_labels.begin(), model.speaker_labels.end(), name);
    if (it == model.speaker_labels.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "speaker " + name + " is not known to the model");
    }
    const int truth = static_cast<int>(it - model.speaker_labels.begin());
    for (const FeatureSequence &seq : files) {
      const LikelihoodSequence ll = Transform(model, seq);
      FileAccuracy fa;
      fa.speaker = name;
      fa.frames = static_cast<int>(ll.size());
      Eigen::RowVectorXd running = Eigen::RowVectorXd::Zero(ll.dim());
      int last_wrong = 0;
      for (Eigen::Index m = 0; m < ll.size(); ++m) {
        int frame_best = 0;
        running += ll.rows.row(m);
        int prefix_best = 0;
        for (Eigen::Index k = 1; k < ll.dim(); ++k) {
          if (ll.rows(m, k) > ll.rows(m, frame_best)) frame_best = static_cast<int>(k);
          if (running(k) > running(prefix_best)) prefix_best = static_cast<int>(k);
        }
        fa.frames_correct += frame_best == truth;
        if (prefix_best != truth) last_wrong = static_cast<int>(m + 1);
        fa.predicted = prefix_best;
      }
      const bool ok = fa.predicted == truth;
      fa.frames_needed = ok ? last_wrong + 1 : 0;
      files_correct += ok;
      frames_correct += fa.frames_correct;
      rep.frames += fa.frames;
      ++rep.files;
      if (ok) needed.push_back(fa.frames_needed);
      rep.per_file.push_back(std::move(fa));
    }
  }
  if (rep.files > 0) {
    rep.file_accuracy = static_cast<double>(files_correct) / rep.files;
  }
  if (rep.frames > 0) {
    rep.frame_accuracy = static_cast<double>(frames_correct) / rep.frames;
  }
  if (!needed.empty()) {
    rep.needed_min = *std::min_element(needed.begin(), needed.end());
    rep.needed_max = *std::max_element(needed.begin(), needed.end());
    double sum = 0.0;
    for (int v : needed) sum += v;
    rep.needed_mean = sum / static_cast<double>(needed.size());
  }
  return rep;
}

double FrameAccuracy(const Model &model, const SpeakerFeatures &data) {
  return BatchAccuracy(model, StackSpeakers(data, model.speaker_labels,
                                            model.shape.InputDim(),
                                            model.shape.OutputDim()));
}

}  // namespace scd
