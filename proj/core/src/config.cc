// scd/config.cc

#include "scd/config.h"

#include <charconv>
#include <functional>
#include <type_traits>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "scd/error.h"

namespace pt = boost::property_tree;

namespace scd {
namespace {

std::string Trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

double ToDouble(const std::string &raw, const std::string &key) {
  const std::string s = Trim(raw);
  if (s == "inf" || s == "Inf" || s == "INF") return kInfNorm;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw Error(ErrorCode::kInvalidConfig, key + ": '" + raw + "' is not a number");
  }
  return v;
}

long ToLong(const std::string &raw, const std::string &key) {
  const std::string s = Trim(raw);
  long v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw Error(ErrorCode::kInvalidConfig, key + ": '" + raw + "' is not an integer");
  }
  return v;
}

bool ToBool(const std::string &raw, const std::string &key) {
  const std::string s = Trim(raw);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(ErrorCode::kInvalidConfig, key + ": '" + raw + "' is not a boolean");
}

template <typename T>
std::string JoinList(const std::vector<T> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += FormatDouble(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

// Key table shared by the reader and the writer so they cannot drift.
struct Field {
  std::string section;
  std::string key;
  std::function<void(PipelineConfig &, const std::string &, const std::string &)> read;
  std::function<std::string(const PipelineConfig &)> write;
};

Field DoubleField(std::string sec, std::string key, double PipelineConfig::*outer) {
  return {sec, key,
          [outer](PipelineConfig &c, const std::string &v, const std::string &k) {
            c.*outer = ToDouble(v, k);
          },
          [outer](const PipelineConfig &c) { return FormatDouble(c.*outer); }};
}

template <typename Get>
Field DoubleRef(std::string sec, std::string key, Get get) {
  return {sec, key,
          [get](PipelineConfig &c, const std::string &v, const std::string &k) {
            get(c) = ToDouble(v, k);
          },
          [get](const PipelineConfig &c) {
            return FormatDouble(get(const_cast<PipelineConfig &>(c)));
          }};
}

template <typename Get>
Field IntRef(std::string sec, std::string key, Get get) {
  return {sec, key,
          [get](PipelineConfig &c, const std::string &v, const std::string &k) {
            get(c) = static_cast<std::remove_reference_t<decltype(get(c))>>(ToLong(v, k));
          },
          [get](const PipelineConfig &c) {
            return std::to_string(get(const_cast<PipelineConfig &>(c)));
          }};
}

template <typename Get>
Field StringRef(std::string sec, std::string key, Get get) {
  return {sec, key,
          [get](PipelineConfig &c, const std::string &v, const std::string &) {
            get(c) = Trim(v);
          },
          [get](const PipelineConfig &c) { return get(const_cast<PipelineConfig &>(c)); }};
}

const std::vector<Field> &Fields() {
  static const std::vector<Field> fields = [] {
    using C = PipelineConfig;
    std::vector<Field> f;
    f.push_back(IntRef("audio", "sample_rate", [](C &c) -> int & { return c.sample_rate; }));
    f.push_back(DoubleRef("vad", "win_ms", [](C &c) -> double & { return c.vad.win_ms; }));
    f.push_back(DoubleRef("vad", "hop_ms", [](C &c) -> double & { return c.vad.hop_ms; }));
    f.push_back(IntRef("vad", "smooth_order", [](C &c) -> int & { return c.vad.smooth_order; }));
    f.push_back(IntRef("vad", "smooth_passes", [](C &c) -> int & { return c.vad.smooth_passes; }));
    f.push_back(IntRef("vad", "hist_bins", [](C &c) -> int & { return c.vad.hist_bins; }));
    f.push_back(DoubleRef("vad", "local_max_weight",
                          [](C &c) -> double & { return c.vad.local_max_weight; }));
    f.push_back(DoubleRef("vad", "strictness",
                          [](C &c) -> double & { return c.vad.strictness_scale; }));
    f.push_back(DoubleRef("mfcc", "win_ms", [](C &c) -> double & { return c.features.mfcc.win_ms; }));
    f.push_back(DoubleRef("mfcc", "hop_ms", [](C &c) -> double & { return c.features.mfcc.hop_ms; }));
    f.push_back(IntRef("mfcc", "n_mels", [](C &c) -> int & { return c.features.mfcc.n_mels; }));
    f.push_back(IntRef("mfcc", "n_ceps", [](C &c) -> int & { return c.features.mfcc.n_ceps; }));
    f.push_back(IntRef("mfcc", "fft_size", [](C &c) -> int & { return c.features.mfcc.fft_size; }));
    f.push_back(IntRef("mfcc", "delta_halfwidth",
                       [](C &c) -> int & { return c.features.mfcc.delta_halfwidth; }));
    f.push_back(IntRef("concat", "win", [](C &c) -> int & { return c.features.concat_win; }));
    f.push_back(IntRef("concat", "hop", [](C &c) -> int & { return c.features.concat_hop; }));
    f.push_back({"cmvn", "scope",
                 [](C &c, const std::string &v, const std::string &k) {
                   const std::string s = Trim(v);
                   if (s == "speaker") {
                     c.cmvn_scope = CmvnScope::kSpeaker;
                   } else if (s == "corpus") {
                     c.cmvn_scope = CmvnScope::kCorpus;
                   } else {
                     throw Error(ErrorCode::kInvalidConfig,
                                 k + ": '" + v + "' is not speaker or corpus");
                   }
                 },
                 [](const C &c) { return std::string(CmvnScopeName(c.cmvn_scope)); }});
    f.push_back({"network", "hidden",
                 [](C &c, const std::string &v, const std::string &) {
                   c.hidden_layers = ParseIntList(v);
                 },
                 [](const C &c) { return JoinList(c.hidden_layers); }});
    f.push_back({"train", "lambda_schedule",
                 [](C &c, const std::string &v, const std::string &) {
                   c.train.lambda_schedule = ParseDoubleList(v);
                 },
                 [](const C &c) { return JoinList(c.train.lambda_schedule); }});
    f.push_back(IntRef("train", "cg_iters_per_stage",
                       [](C &c) -> int & { return c.train.cg_iters_per_stage; }));
    f.push_back(DoubleRef("train", "stop_delta", [](C &c) -> double & { return c.train.stop_delta; }));
    f.push_back(IntRef("train", "stop_patience", [](C &c) -> int & { return c.train.stop_patience; }));
    f.push_back(DoubleRef("train", "init_range", [](C &c) -> double & { return c.train.init_range; }));
    f.push_back({"train", "seed",
                 [](C &c, const std::string &v, const std::string &k) {
                   const long s = ToLong(v, k);
                   if (s < 0) throw Error(ErrorCode::kInvalidConfig, k + " must be >= 0");
                   c.train.rng_seed = static_cast<uint64_t>(s);
                 },
                 [](const C &c) { return std::to_string(c.train.rng_seed); }});
    f.push_back(DoubleField("train", "holdout_fraction", &C::holdout_fraction));
    f.push_back(DoubleRef("scd", "interval_s", [](C &c) -> double & { return c.scd.interval_s; }));
    f.push_back(DoubleRef("scd", "p", [](C &c) -> double & { return c.scd.p; }));
    f.push_back({"scd", "second_difference",
                 [](C &c, const std::string &v, const std::string &k) {
                   c.scd.use_second_difference = ToBool(v, k);
                 },
                 [](const C &c) {
                   return std::string(c.scd.use_second_difference ? "true" : "false");
                 }});
    f.push_back({"scd", "intervals",
                 [](C &c, const std::string &v, const std::string &) {
                   c.intervals = ParseDoubleList(v);
                 },
                 [](const C &c) { return JoinList(c.intervals); }});
    f.push_back(IntRef("scd", "tolerance", [](C &c) -> int & { return c.tolerance; }));
    f.push_back(StringRef("paths", "corpus", [](C &c) -> std::string & { return c.paths.corpus; }));
    f.push_back(StringRef("paths", "features",
                          [](C &c) -> std::string & { return c.paths.features; }));
    f.push_back(StringRef("paths", "model", [](C &c) -> std::string & { return c.paths.model; }));
    f.push_back(IntRef("run", "jobs", [](C &c) -> int & { return c.jobs; }));
    return f;
  }();
  return fields;
}

}  // namespace

const char *CmvnScopeName(CmvnScope scope) {
  return scope == CmvnScope::kSpeaker ? "speaker" : "corpus";
}

std::string FormatDouble(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::vector<double> ParseDoubleList(const std::string &text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ToDouble(item, "list '" + text + "'"));
  if (out.empty()) throw Error(ErrorCode::kInvalidConfig, "empty list");
  return out;
}

std::vector<int> ParseIntList(const std::string &text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(static_cast<int>(ToLong(item, "list '" + text + "'")));
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidConfig, "empty list");
  return out;
}

NetworkShape PipelineConfig::Shape(int n_speakers) const {
  NetworkShape shape;
  shape.layer_sizes = {features.SuperFrameDim()};
  shape.layer_sizes.insert(shape.layer_sizes.end(), hidden_layers.begin(),
                           hidden_layers.end());
  shape.layer_sizes.push_back(n_speakers);
  return shape;
}

void PipelineConfig::Validate() const {
  auto fail = [](const std::string &m) { throw Error(ErrorCode::kInvalidConfig, m); };
  if (sample_rate < 8000) fail("audio.sample_rate must be >= 8000");
  if (features.mfcc.sample_rate != sample_rate) {
    fail("mfcc sample rate differs from audio.sample_rate");
  }
  vad.Validate();
  features.mfcc.Validate();
  if (features.concat_win < 1 || features.concat_hop < 1) {
    fail("concat.win and concat.hop must be >= 1");
  }
  for (int h : hidden_layers) {
    if (h < 1) fail("network.hidden sizes must be >= 1");
  }
  train.Validate();
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 0.5)) {
    fail("train.holdout_fraction must lie in [0, 0.5)");
  }
  scd.Validate();
  if (intervals.empty()) fail("scd.intervals is empty");
  for (double i : intervals) {
    if (!(i > 0.0) || !std::isfinite(i)) fail("scd.intervals must be positive");
  }
  if (tolerance < 0) fail("scd.tolerance must be >= 0");
  if (jobs < 1) fail("run.jobs must be >= 1");
}

void PipelineConfig::ValidateShape(const NetworkShape &shape, int n_speakers) const {
  if (shape.InputDim() != features.SuperFrameDim()) {
    throw Error(ErrorCode::kInvalidConfig,
                "network input " + std::to_string(shape.InputDim()) +
                    " != " + std::to_string(3 * features.mfcc.n_ceps) + " x concat win " +
                    std::to_string(features.concat_win));
  }
  if (shape.OutputDim() != n_speakers) {
    throw Error(ErrorCode::kInvalidConfig,
                "network output " + std::to_string(shape.OutputDim()) +
                    " != speaker count " + std::to_string(n_speakers));
  }
}

PipelineConfig ParseConfig(const std::string &text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  std::map<std::string, std::map<std::string, const Field *>> index;
  for (const Field &f : Fields()) index[f.section][f.key] = &f;

  PipelineConfig cfg;
  for (const auto &[section, body] : tree) {
    const auto sec = index.find(section);
    if (sec == index.end() || body.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "unknown section [" + section + "]");
    }
    for (const auto &[key, value] : body) {
      const auto f = sec->second.find(key);
      if (f == sec->second.end()) {
        throw Error(ErrorCode::kInvalidConfig, "unknown key " + section + "." + key);
      }
      f->second->read(cfg, value.data(), section + "." + key);
    }
  }
  cfg.features.mfcc.sample_rate = cfg.sample_rate;
  cfg.Validate();
  return cfg;
}

PipelineConfig LoadConfig(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return ParseConfig(ss.str());
  } catch (const Error &e) {
    throw e.WithContext(path.string());
  }
}

std::string SerializeConfig(const PipelineConfig &cfg) {
  std::ostringstream out;
  std::string section;
  for (const Field &f : Fields()) {
    if (f.section != section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.write(cfg) << '\n';
  }
  return out.str();
}

}  // namespace scd
