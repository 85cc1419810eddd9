// scd/features.cc

#include "scd/features.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "scd/error.h"

namespace scd {
namespace {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular filters, n_mels x (fft_size/2 + 1), spanning 0 .. Nyquist.
Eigen::MatrixXd MelFilterbank(int n_mels, int fft_size, int sample_rate) {
  const int n_bins = fft_size / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double mel_max = HzToMel(nyquist);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[static_cast<std::size_t>(i)] = MelToHz(mel_max * i / (n_mels + 1));
  }
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    for (int b = 0; b < n_bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / fft_size;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      fb(m, b) = w;
    }
  }
  return fb;
}

// Orthonormal DCT-II rows 0..n_ceps-1 over n inputs.
Eigen::MatrixXd DctMatrix(int n_ceps, int n) {
  Eigen::MatrixXd d(n_ceps, n);
  for (int k = 0; k < n_ceps; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i) {
      d(k, i) = scale * std::cos(std::numbers::pi * k * (2 * i + 1) / (2.0 * n));
    }
  }
  return d;
}

RowMatrix RegressionDelta(const RowMatrix &x, int halfwidth) {
  const Eigen::Index n = x.rows();
  double denom = 0.0;
  for (int k = 1; k <= halfwidth; ++k) denom += 2.0 * k * k;
  RowMatrix out(n, x.cols());
  for (Eigen::Index t = 0; t < n; ++t) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(x.cols());
    for (int k = 1; k <= halfwidth; ++k) {
      const Eigen::Index next = std::min<Eigen::Index>(t + k, n - 1);
      const Eigen::Index prev = std::max<Eigen::Index>(t - k, 0);
      acc += k * (x.row(next) - x.row(prev));
    }
    out.row(t) = acc / denom;
  }
  return out;
}

void PutU64(std::vector<uint8_t> *out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out->push_back(uint8_t(v >> (8 * i)));
}

uint64_t GetU64(const uint8_t *p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
  return v;
}

}  // namespace

int MfccConfig::FftSize() const {
  if (fft_size > 0) return fft_size;
  const auto win = static_cast<unsigned>(MsToSamples(win_ms, sample_rate));
  return static_cast<int>(std::bit_ceil(std::max(win, 2u)));
}

void MfccConfig::Validate() const {
  if (!(hop_ms > 0.0) || !(win_ms > hop_ms)) {
    throw Error(ErrorCode::kInvalidConfig, "mfcc: need win_ms > hop_ms > 0");
  }
  if (n_ceps < 1 || n_mels < n_ceps) {
    throw Error(ErrorCode::kInvalidConfig, "mfcc: need n_mels >= n_ceps >= 1");
  }
  if (sample_rate <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "mfcc: sample_rate must be > 0");
  }
  if (fft_size != 0 &&
      fft_size < static_cast<int>(MsToSamples(win_ms, sample_rate))) {
    throw Error(ErrorCode::kInvalidConfig, "mfcc: fft_size below window");
  }
  if (delta_halfwidth < 1) {
    throw Error(ErrorCode::kInvalidConfig, "mfcc: delta_halfwidth must be >= 1");
  }
}

FeatureSequence Mfcc(const AudioClip &clip, const MfccConfig &cfg) {
  cfg.Validate();
  if (clip.sample_rate != cfg.sample_rate) {
    throw Error(ErrorCode::kSampleRateMismatch,
                "clip is " + std::to_string(clip.sample_rate) +
                    " Hz, features configured for " +
                    std::to_string(cfg.sample_rate) + " Hz");
  }
  const std::size_t win = MsToSamples(cfg.win_ms, cfg.sample_rate);
  const std::size_t hop = MsToSamples(cfg.hop_ms, cfg.sample_rate);
  if (clip.samples.size() < win) {
    throw Error(ErrorCode::kClipTooShort,
                "clip shorter than one " + std::to_string(win) +
                    "-sample MFCC window");
  }
  const std::size_t count = FrameCount(clip.samples.size(), win, hop);
  const int fft_size = cfg.FftSize();
  const int n_bins = fft_size / 2 + 1;
  const Eigen::MatrixXd fb = MelFilterbank(cfg.n_mels, fft_size, cfg.sample_rate);
  const Eigen::MatrixXd dct = DctMatrix(cfg.n_ceps, cfg.n_mels);

  std::vector<double> window(win);
  for (std::size_t n = 0; n < win; ++n) {
    window[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (win - 1));
  }

  FeatureSequence out;
  out.frames.resize(static_cast<Eigen::Index>(count), cfg.n_ceps);
  out.frame_hop_s = static_cast<double>(hop) / cfg.sample_rate;
  out.frame_win_s = static_cast<double>(win) / cfg.sample_rate;

  Eigen::FFT<double> fft;
  std::vector<double> buf(static_cast<std::size_t>(fft_size), 0.0);
  std::vector<std::complex<double>> spec;
  Eigen::VectorXd mag(n_bins);
  for (std::size_t i = 0; i < count; ++i) {
    const double *s = clip.samples.data() + i * hop;
    for (std::size_t n = 0; n < win; ++n) buf[n] = s[n] * window[n];
    fft.fwd(spec, buf);
    for (int b = 0; b < n_bins; ++b) mag(b) = std::abs(spec[static_cast<std::size_t>(b)]);
    Eigen::VectorXd mel = fb * mag;
    for (Eigen::Index m = 0; m < mel.size(); ++m) {
      mel(m) = std::log(std::max(mel(m), kLogFloor));
    }
    out.frames.row(static_cast<Eigen::Index>(i)) = (dct * mel).transpose();
  }
  return out;
}

FeatureSequence AddDeltas(const FeatureSequence &seq, int halfwidth) {
  if (halfwidth < 1) {
    throw Error(ErrorCode::kInvalidArgument, "delta halfwidth must be >= 1");
  }
  if (seq.size() < 2 * halfwidth + 1) {
    throw Error(ErrorCode::kTooFewFrames,
                std::to_string(seq.size()) + " frames, deltas need >= " +
                    std::to_string(2 * halfwidth + 1));
  }
  const RowMatrix delta = RegressionDelta(seq.frames, halfwidth);
  const RowMatrix delta2 = RegressionDelta(delta, halfwidth);
  FeatureSequence out;
  out.frame_hop_s = seq.frame_hop_s;
  out.frame_win_s = seq.frame_win_s;
  out.frames.resize(seq.size(), 3 * seq.dim());
  out.frames << seq.frames, delta, delta2;
  return out;
}

CmvnStats ComputeCmvnStats(std::span<const FeatureSequence> seqs) {
  if (seqs.empty()) {
    throw Error(ErrorCode::kTooFewFrames, "no sequences for CMVN");
  }
  const Eigen::Index dim = seqs.front().dim();
  Eigen::Index total = 0;
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(dim);
  for (const FeatureSequence &s : seqs) {
    if (s.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "CMVN over mixed dims");
    }
    total += s.size();
    sum += s.frames.colwise().sum();
  }
  if (total < 2) {
    throw Error(ErrorCode::kTooFewFrames, "CMVN needs >= 2 frames");
  }
  CmvnStats stats;
  stats.mean = sum / static_cast<double>(total);
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(dim);
  for (const FeatureSequence &s : seqs) {
    sq += (s.frames.rowwise() - stats.mean).array().square().colwise().sum().matrix();
  }
  stats.stddev = (sq / static_cast<double>(total)).array().sqrt().max(kStdFloor).matrix();
  return stats;
}

FeatureSequence ApplyCmvn(const FeatureSequence &seq, const CmvnStats &stats) {
  if (seq.dim() != stats.mean.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "CMVN stats dim differs");
  }
  FeatureSequence out;
  out.frame_hop_s = seq.frame_hop_s;
  out.frame_win_s = seq.frame_win_s;
  out.frames = ((seq.frames.rowwise() - stats.mean).array().rowwise() /
                stats.stddev.array())
                   .matrix();
  return out;
}

FeatureSequence Cmvn(const FeatureSequence &seq) {
  return ApplyCmvn(seq, ComputeCmvnStats(std::span<const FeatureSequence>(&seq, 1)));
}

FeatureSequence ConcatFrames(const FeatureSequence &seq, int win_frames,
                             int hop_frames) {
  if (win_frames < 1 || hop_frames < 1) {
    throw Error(ErrorCode::kInvalidArgument, "concat window and hop must be >= 1");
  }
  if (seq.size() < win_frames) {
    throw Error(ErrorCode::kTooFewFrames,
                std::to_string(seq.size()) + " frames < concat window " +
                    std::to_string(win_frames));
  }
  const Eigen::Index count = (seq.size() - win_frames) / hop_frames + 1;
  const Eigen::Index dim = seq.dim();
  FeatureSequence out;
  out.frame_hop_s = hop_frames * seq.frame_hop_s;
  out.frame_win_s = win_frames * seq.frame_hop_s;
  out.frames.resize(count, dim * win_frames);
  for (Eigen::Index i = 0; i < count; ++i) {
    for (int j = 0; j < win_frames; ++j) {
      out.frames.block(i, j * dim, 1, dim) = seq.frames.row(i * hop_frames + j);
    }
  }
  return out;
}

std::string FeaturePipelineConfig::Canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "mfcc:win_ms=" << mfcc.win_ms << ";hop_ms=" << mfcc.hop_ms
     << ";n_mels=" << mfcc.n_mels << ";n_ceps=" << mfcc.n_ceps
     << ";fft=" << mfcc.FftSize() << ";delta=" << mfcc.delta_halfwidth
     << ";rate=" << mfcc.sample_rate << ";window=hamming;spectrum=magnitude"
     << ";dct=ortho;log_floor=1e-10|concat:win=" << concat_win
     << ";hop=" << concat_hop;
  return os.str();
}

uint64_t Fnv1a64(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t FeaturePipelineConfig::Fingerprint() const {
  return Fnv1a64(Canonical());
}

std::vector<uint8_t> EncodeFeatures(const FeatureSequence &seq) {
  std::vector<uint8_t> out;
  out.reserve(40 + static_cast<std::size_t>(seq.frames.size()) * 8);
  PutU64(&out, kFeatureMagic);
  PutU64(&out, static_cast<uint64_t>(seq.dim()));
  PutU64(&out, static_cast<uint64_t>(seq.size()));
  PutU64(&out, std::bit_cast<uint64_t>(seq.frame_hop_s));
  PutU64(&out, std::bit_cast<uint64_t>(seq.frame_win_s));
  for (Eigen::Index i = 0; i < seq.frames.size(); ++i) {
    PutU64(&out, std::bit_cast<uint64_t>(seq.frames.data()[i]));
  }
  return out;
}

FeatureSequence DecodeFeatures(std::span<const uint8_t> bytes) {
  if (bytes.size() < 40 || GetU64(bytes.data()) != kFeatureMagic) {
    throw Error(ErrorCode::kCorruptHeader, "not a feature dump");
  }
  const uint64_t dim = GetU64(bytes.data() + 8);
  const uint64_t count = GetU64(bytes.data() + 16);
  if (dim == 0 || bytes.size() != 40 + dim * count * 8) {
    throw Error(ErrorCode::kCorruptHeader, "feature dump size mismatch");
  }
  FeatureSequence seq;
  seq.frame_hop_s = std::bit_cast<double>(GetU64(bytes.data() + 24));
  seq.frame_win_s = std::bit_cast<double>(GetU64(bytes.data() + 32));
  seq.frames.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  const uint8_t *p = bytes.data() + 40;
  for (Eigen::Index i = 0; i < seq.frames.size(); ++i, p += 8) {
    seq.frames.data()[i] = std::bit_cast<double>(GetU64(p));
  }
  return seq;
}

void SaveFeatures(const std::filesystem::path &path,
                  const FeatureSequence &seq) {
  const std::vector<uint8_t> bytes = EncodeFeatures(seq);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

FeatureSequence LoadFeatures(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};
  try {
    return DecodeFeatures(bytes);
  } catch (const Error &e) {
    throw e.WithContext(path.string());
  }
}

}  // namespace scd
