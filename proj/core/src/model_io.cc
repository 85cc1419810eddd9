// scd/model_io.cc
//
// Model container layout (all integers little-endian u64 unless noted):
//   8 bytes  magic "SCDMODEL"
//   u32      format version, u32 reserved (0)
//   fingerprint, feature-config string (length + bytes)
//   layer count, layer sizes
//   label count, labels (length + bytes each)
//   weight matrices in layer order, row-major f64

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "scd/classifier.h"
#include "scd/error.h"

namespace scd {
namespace {

constexpr char kModelMagic[8] = {'S', 'C', 'D', 'M', 'O', 'D', 'E', 'L'};
constexpr uint32_t kModelVersion = 1;

class Writer {
 public:
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(uint8_t(v >> (8 * i)));
  }
  void U64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(uint8_t(v >> (8 * i)));
  }
  void F64(double v) { U64(std::bit_cast<uint64_t>(v)); }
  void Str(const std::string &s) {
    U64(s.size());
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void Raw(const char *p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  std::vector<uint8_t> Take() { return std::move(out_); }

 private:
  std::vector<uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}
  const uint8_t *Take(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorCode::kCorruptHeader, "model file truncated");
    }
    const uint8_t *p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  uint32_t U32() {
    const uint8_t *p = Take(4);
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
           uint32_t(p[3]) << 24;
  }
  uint64_t U64() {
    const uint8_t *p = Take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
    return v;
  }
  double F64() { return std::bit_cast<double>(U64()); }
  std::string Str() {
    const uint64_t n = U64();
    if (n > bytes_.size()) throw Error(ErrorCode::kCorruptHeader, "bad string");
    const uint8_t *p = Take(n);
    return std::string(reinterpret_cast<const char *>(p), n);
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  std::span<const uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::string Hex64(uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

std::vector<uint8_t> EncodeModel(const Model &model) {
  Writer w;
  w.Raw(kModelMagic, sizeof(kModelMagic));
  w.U32(kModelVersion);
  w.U32(0);
  w.U64(model.feature_fingerprint);
  w.Str(model.feature_config);
  w.U64(model.shape.layer_sizes.size());
  for (int s : model.shape.layer_sizes) w.U64(static_cast<uint64_t>(s));
  w.U64(model.speaker_labels.size());
  for (const std::string &label : model.speaker_labels) w.Str(label);
  for (const Eigen::MatrixXd &m : model.weights) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) w.F64(m(r, c));
    }
  }
  return w.Take();
}

Model DecodeModel(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  if (std::memcmp(r.Take(8), kModelMagic, 8) != 0) {
    throw Error(ErrorCode::kCorruptHeader, "not a model file");
  }
  const uint32_t version = r.U32();
  if (version != kModelVersion) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "model format version " + std::to_string(version));
  }
  r.U32();
  Model model;
  model.feature_fingerprint = r.U64();
  model.feature_config = r.Str();
  const uint64_t layers = r.U64();
  if (layers < 2 || layers > 64) {
    throw Error(ErrorCode::kCorruptHeader, "implausible layer count");
  }
  model.shape.layer_sizes.clear();
  for (uint64_t i = 0; i < layers; ++i) {
    const uint64_t s = r.U64();
    if (s == 0 || s > (1u << 24)) {
      throw Error(ErrorCode::kCorruptHeader, "implausible layer size");
    }
    model.shape.layer_sizes.push_back(static_cast<int>(s));
  }
  const uint64_t labels = r.U64();
  if (labels != static_cast<uint64_t>(model.shape.OutputDim())) {
    throw Error(ErrorCode::kCorruptHeader, "label count != output units");
  }
  for (uint64_t i = 0; i < labels; ++i) model.speaker_labels.push_back(r.Str());
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Eigen::MatrixXd m(model.shape.layer_sizes[l + 1],
                      model.shape.layer_sizes[l] + 1);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.F64();
    }
    model.weights.push_back(std::move(m));
  }
  if (!r.AtEnd()) throw Error(ErrorCode::kCorruptHeader, "trailing bytes");
  if (!model.AllFinite()) {
    throw Error(ErrorCode::kCorruptHeader, "non-finite weights");
  }
  return model;
}

void SaveModel(const std::filesystem::path &path, const Model &model) {
  const std::vector<uint8_t> bytes = EncodeModel(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

Model LoadModel(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};
  try {
    return DecodeModel(bytes);
  } catch (const Error &e) {
    throw e.WithContext(path.string());
  }
}

std::string ModelMetadataJson(const Model &model, const TrainReport *report) {
  nlohmann::ordered_json j;
  j["format_version"] = kModelVersion;
  j["layer_sizes"] = model.shape.layer_sizes;
  j["parameter_count"] = model.shape.ParameterCount();
  j["feature_fingerprint"] = Hex64(model.feature_fingerprint);
  j["feature_config"] = model.feature_config;
  j["speaker_labels"] = model.speaker_labels;
  if (report != nullptr) {
    nlohmann::ordered_json stages = nlohmann::ordered_json::array();
    for (const StageReport &s : report->stages) {
      nlohmann::ordered_json st;
      st["lambda"] = s.lambda;
      st["cost_before"] = s.cost_before;
      st["cost_after"] = s.cost_after;
      st["line_searches"] = s.line_searches;
      st["evaluations"] = s.evaluations;
      st["train_frame_accuracy"] = s.train_frame_accuracy;
      if (std::isfinite(s.holdout_frame_accuracy)) {
        st["holdout_frame_accuracy"] = s.holdout_frame_accuracy;
      }
      stages.push_back(st);
    }
    j["training"]["stages"] = stages;
    j["training"]["stopped_early"] = report->stopped_early;
    j["training"]["total_line_searches"] = report->total_line_searches;
  }
  return j.dump(2) + "\n";
}

}  // namespace scd
