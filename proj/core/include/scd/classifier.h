// scd/classifier.h
//
// Feed-forward sigmoid network used as a K-speaker classifier. Each output
// unit is an independent binary (one-vs-rest) logistic classifier; the cost
// is the summed binary cross-entropy plus an L2 penalty on non-bias weights.
// The log of the output vector is the transformed feature consumed by
// speaker change detection.

#ifndef SCD_CLASSIFIER_H_
#define SCD_CLASSIFIER_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scd/features.h"

namespace scd {

/// Log arguments are clamped to [kProbEpsilon, 1 - kProbEpsilon].
inline constexpr double kProbEpsilon = 1e-12;

struct NetworkShape {
  /// Units per layer, input first, output last (biases excluded).
  std::vector<int> layer_sizes{390, 200, 200};

  int InputDim() const { return layer_sizes.front(); }
  int OutputDim() const { return layer_sizes.back(); }
  int NumLayers() const { return static_cast<int>(layer_sizes.size()); }
  std::size_t ParameterCount() const;
  void Validate() const;
  bool operator==(const NetworkShape &) const = default;
};

/// weights[l] maps layer l to layer l+1 and has shape
/// layer_sizes[l+1] x (layer_sizes[l] + 1); column 0 holds the biases.
struct Model {
  NetworkShape shape;
  std::vector<Eigen::MatrixXd> weights;
  uint64_t feature_fingerprint = 0;
  std::string feature_config;
  std::vector<std::string> speaker_labels;

  int NumClasses() const { return shape.OutputDim(); }
  bool AllFinite() const;
};

struct TrainConfig {
  std::vector<double> lambda_schedule{3.0, 1.0, 0.3, 0.1, 0.0};
  int cg_iters_per_stage = 200;
  /// Holdout frame-accuracy gain (fraction) below which a stage counts as
  /// no improvement.
  double stop_delta = 0.001;
  int stop_patience = 2;
  double init_range = 0.1;
  uint64_t rng_seed = 1;

  void Validate() const;
  bool operator==(const TrainConfig &) const = default;
};

/// Per-super-frame log outputs, log h(x), every entry in [log eps, 0).
struct LikelihoodSequence {
  RowMatrix rows;
  double frame_hop_s = 0.0;
  double frame_win_s = 0.0;

  Eigen::Index size() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }
};

double Sigmoid(double z);

/// Uniform(-init_range, init_range) weights from a portable RNG stream.
Model InitWeights(const NetworkShape &shape, uint64_t seed,
                  double init_range = 0.1);

/// Per-layer activations for a single input; activations.back() is h(x).
std::vector<Eigen::VectorXd> Forward(const Model &model,
                                     const Eigen::VectorXd &x);

/// Output layer for every row of X (M x K).
Eigen::MatrixXd ForwardBatch(const Model &model, const RowMatrix &x);

/// Sum of squared non-bias weights.
double SquaredWeightNorm(const Model &model);

/// Binary cross-entropy cost, averaged over the M rows of X, plus
/// lambda / (2M) times SquaredWeightNorm. Y is M x K one-hot.
double Cost(const Model &model, const RowMatrix &x, const Eigen::MatrixXd &y,
            double lambda);

/// Backpropagated gradient of Cost, one matrix per weight layer.
std::vector<Eigen::MatrixXd> Gradient(const Model &model, const RowMatrix &x,
                                      const Eigen::MatrixXd &y, double lambda);

/// Cost and gradient in one pass (the training objective).
double CostAndGradient(const Model &model, const RowMatrix &x,
                       const Eigen::MatrixXd &y, double lambda,
                       std::vector<Eigen::MatrixXd> *grad);

Eigen::VectorXd FlattenWeights(const std::vector<Eigen::MatrixXd> &weights);
void UnflattenWeights(const Eigen::VectorXd &flat, Model *model);

struct StageReport {
  double lambda = 0.0;
  double cost_before = 0.0;
  double cost_after = 0.0;
  int line_searches = 0;
  int evaluations = 0;
  double train_frame_accuracy = 0.0;
  double holdout_frame_accuracy = 0.0;  // NaN without holdout data
};

struct TrainReport {
  std::vector<StageReport> stages;
  double initial_holdout_accuracy = 0.0;
  bool stopped_early = false;
  int total_line_searches = 0;
  /// Every accepted-iteration cost in order, across stages.
  std::vector<std::vector<double>> cost_history;
};

using SpeakerFeatures = std::map<std::string, FeatureSequence>;

/// Full-batch training through the lambda schedule. The output layer size
/// of `shape` must equal the number of speakers; speaker indices follow
/// the map's lexicographic order. Throws kEmptySpeaker, kDimensionMismatch
/// or kDivergedCost.
Model Train(const SpeakerFeatures &train, const TrainConfig &cfg,
            const NetworkShape &shape, const SpeakerFeatures &holdout,
            TrainReport *report = nullptr);

LikelihoodSequence Transform(const Model &model, const FeatureSequence &seq);

/// argmax_k of the summed log-likelihood over the first m rows; ties go to
/// the lowest index. Throws kTooFewFrames if m is out of range.
int PredictSpeaker(const LikelihoodSequence &loglik, Eigen::Index m);
int PredictSpeaker(const Model &model, const FeatureSequence &frames,
                   Eigen::Index m);

/// Audio duration covered by n consecutive super-frames:
/// (n - 1) * hop_s + win_s.
double FramesToDuration(int n, double hop_s = 0.03, double win_s = 0.1);

struct FileAccuracy {
  std::string speaker;
  int predicted = -1;
  int frames = 0;
  int frames_correct = 0;
  /// Smallest prefix length from which every longer prefix is classified
  /// correctly; 0 when the whole file is misclassified.
  int frames_needed = 0;
};

struct AccuracyReport {
  double frame_accuracy = 0.0;
  double file_accuracy = 0.0;
  int files = 0;
  int frames = 0;
  /// Statistics of frames_needed over correctly classified files.
  int needed_min = 0;
  double needed_mean = 0.0;
  int needed_max = 0;
  std::vector<FileAccuracy> per_file;
};

using SpeakerFiles = std::map<std::string, std::vector<FeatureSequence>>;

AccuracyReport Evaluate(const Model &model, const SpeakerFiles &dataset);

/// Frame-level accuracy of argmax over single rows.
double FrameAccuracy(const Model &model, const SpeakerFeatures &data);

/// Versioned little-endian container.
void SaveModel(const std::filesystem::path &path, const Model &model);
Model LoadModel(const std::filesystem::path &path);
std::vector<uint8_t> EncodeModel(const Model &model);
Model DecodeModel(std::span<const uint8_t> bytes);
/// Human-readable JSON metadata written next to the model.
std::string ModelMetadataJson(const Model &model,
                              const TrainReport *report = nullptr);

}  // namespace scd

#endif  // SCD_CLASSIFIER_H_
