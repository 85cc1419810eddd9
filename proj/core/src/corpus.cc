// scd/corpus.cc

#include "scd/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "scd/error.h"
#include "scd/features.h"
#include "scd/log.h"
#include "scd/rng.h"

namespace fs = std::filesystem;

namespace scd {
namespace {

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string Upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

bool IsWav(const fs::path &p) { return Lower(p.extension().string()) == ".wav"; }

UtteranceCategory ParseCategory(const std::string &s, const std::string &where) {
  const std::string l = Lower(s);
  if (l == "train") return UtteranceCategory::kTrain;
  if (l == "test") return UtteranceCategory::kTest;
  throw Error(ErrorCode::kMissingManifest,
              where + ": unknown category '" + s + "'");
}

}  // namespace

const char *CategoryName(UtteranceCategory c) {
  return c == UtteranceCategory::kTrain ? "train" : "test";
}

std::vector<Utterance> Speaker::OfCategory(UtteranceCategory c) const {
  std::vector<Utterance> out;
  for (const Utterance &u : utterances) {
    if (u.category == c) out.push_back(u);
  }
  return out;
}

const Speaker &SpeakerDataset::Get(const std::string &id) const {
  const auto it = std::find_if(speakers.begin(), speakers.end(),
                               [&](const Speaker &s) { return s.id == id; });
  if (it == speakers.end()) {
    throw Error(ErrorCode::kInvalidArgument, "no speaker '" + id + "' in " +
                                                 root.string());
  }
  return *it;
}

std::vector<std::string> SpeakerDataset::Ids() const {
  std::vector<std::string> ids;
  for (const Speaker &s : speakers) ids.push_back(s.id);
  return ids;
}

SpeakerDataset ScanDataset(const fs::path &root) {
  const fs::path manifest = root / "manifest.tsv";
  std::ifstream in(manifest);
  if (!in) {
    throw Error(ErrorCode::kMissingManifest, "no manifest at " + manifest.string());
  }
  std::map<std::string, Speaker> by_id;
  std::set<fs::path> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string id, rel, cat;
    if (!std::getline(is, id, '\t') || !std::getline(is, rel, '\t') ||
        !std::getline(is, cat, '\t')) {
      throw Error(ErrorCode::kMissingManifest,
                  manifest.string() + ":" + std::to_string(line_no) +
                      ": expected speaker_id<TAB>path<TAB>category");
    }
    const std::string where = manifest.string() + ":" + std::to_string(line_no);
    const fs::path file = root / rel;
    if (!fs::is_regular_file(file)) {
      throw Error(ErrorCode::kMissingManifest,
                  where + ": listed file " + file.string() + " does not exist");
    }
    if (!seen.insert(fs::weakly_canonical(file)).second) {
      throw Error(ErrorCode::kMissingManifest, where + ": duplicate entry " + rel);
    }
    Speaker &spk = by_id[id];
    spk.id = id;
    spk.utterances.push_back({file, ParseCategory(cat, where)});
  }

  // Every speaker folder must hold audio, listed or not.
  for (const auto &entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    bool has_wav = false;
    for (const auto &f : fs::directory_iterator(entry.path())) {
      if (f.is_regular_file() && IsWav(f.path())) {
        has_wav = true;
        break;
      }
    }
    if (!has_wav) {
      throw Error(ErrorCode::kEmptySpeaker,
                  "speaker folder " + entry.path().string() + " has no WAV files");
    }
  }

  SpeakerDataset ds;
  ds.root = root;
  for (auto &[id, spk] : by_id) {
    if (spk.OfCategory(UtteranceCategory::kTrain).empty()) {
      throw Error(ErrorCode::kEmptySpeaker, "speaker " + id + " has no train utterance");
    }
    ds.speakers.push_back(std::move(spk));
  }
  if (ds.speakers.empty()) {
    throw Error(ErrorCode::kEmptySpeaker, "manifest lists no speakers");
  }
  return ds;
}

SpeakerDataset ScanTimit(const fs::path &root, bool male_only) {
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::kMissingManifest, "no TIMIT tree at " + root.string());
  }
  std::map<std::string, Speaker> by_id;
  std::set<std::string> seen;
  for (const auto &entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = Upper(entry.path().filename().string());
    // "SA1.WAV" and converted copies such as "SA1.WAV.wav" share this stem.
    const std::string stem = name.substr(0, name.find('.'));
    if (!IsWav(entry.path()) || stem.size() < 3) continue;
    const std::string kind = stem.substr(0, 2);
    if (kind != "SA" && kind != "SX" && kind != "SI") continue;
    const std::string id = Upper(entry.path().parent_path().filename().string());
    if (male_only && (id.empty() || id[0] != 'M')) continue;
    if (!seen.insert(id + "/" + stem).second) continue;
    Speaker &spk = by_id[id];
    spk.id = id;
    spk.utterances.push_back({entry.path(), kind == "SA" ? UtteranceCategory::kTest
                                                         : UtteranceCategory::kTrain});
  }
  SpeakerDataset ds;
  ds.root = root;
  for (auto &[id, spk] : by_id) {
    std::sort(spk.utterances.begin(), spk.utterances.end(),
              [](const Utterance &a, const Utterance &b) { return a.path < b.path; });
    ds.speakers.push_back(std::move(spk));
  }
  if (ds.speakers.empty()) {
    throw Error(ErrorCode::kEmptySpeaker, "no TIMIT speakers under " + root.string());
  }
  return ds;
}

AudioClip LoadUtterance(const fs::path &path, int sample_rate) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  AudioClip clip = std::string(magic, 4) == "RIFF" ? LoadWav(path) : LoadSphere(path);
  if (clip.sample_rate != sample_rate) {
    throw Error(ErrorCode::kSampleRateMismatch,
                path.string() + " is " + std::to_string(clip.sample_rate) +
                    " Hz, expected " + std::to_string(sample_rate) + " Hz");
  }
  return clip;
}

void WriteManifest(const SpeakerDataset &ds) {
  const fs::path manifest = ds.root / "manifest.tsv";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + manifest.string());
  out << "# speaker_id\tpath\tcategory\n";
  for (const Speaker &s : ds.speakers) {
    for (const Utterance &u : s.utterances) {
      out << s.id << '\t' << fs::relative(u.path, ds.root).generic_string() << '\t'
          << CategoryName(u.category) << '\n';
    }
  }
}

Conversation BuildConversationFromSpeech(const std::vector<AudioClip> &speech,
                                         const std::vector<std::string> &ids,
                                         const ConversationOptions &opts) {
  if (speech.size() != ids.size() || speech.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "need one speech clip per speaker");
  }
  std::size_t block = speech.front().samples.size();
  for (std::size_t i = 0; i < speech.size(); ++i) {
    const double secs = speech[i].DurationSeconds();
    if (secs < opts.min_block_s) {
      throw Error(ErrorCode::kSpeakerTooShort,
                  ids[i] + " has " + std::to_string(secs) + " s of speech, need " +
                      std::to_string(opts.min_block_s) + " s");
    }
    block = std::min(block, speech[i].samples.size());
  }
  if (opts.block_quantum_s > 0.0) {
    const double secs = static_cast<double>(block) / opts.sample_rate;
    const double quantized =
        std::floor(secs / opts.block_quantum_s + 1e-9) * opts.block_quantum_s;
    if (quantized < opts.min_block_s || quantized <= 0.0) {
      throw Error(ErrorCode::kSpeakerTooShort,
                  "shortest speaker (" + std::to_string(secs) +
                      " s) is below one block quantum");
    }
    block = static_cast<std::size_t>(std::llround(quantized * opts.sample_rate));
  }

  Conversation conv;
  conv.audio.sample_rate = opts.sample_rate;
  conv.block_s = static_cast<double>(block) / opts.sample_rate;
  conv.speaker_order = ids;
  conv.audio.samples.reserve(block * speech.size());
  for (std::size_t i = 0; i < speech.size(); ++i) {
    if (i > 0) conv.change_points.push_back(static_cast<double>(i) * conv.block_s);
    conv.audio.samples.insert(conv.audio.samples.end(), speech[i].samples.begin(),
                              speech[i].samples.begin() +
                                  static_cast<std::ptrdiff_t>(block));
  }
  return conv;
}

Conversation BuildConversation(const SpeakerDataset &ds,
                               const std::vector<std::string> &speakers,
                               uint64_t seed, const ConversationOptions &opts) {
  std::vector<AudioClip> speech;
  for (const std::string &id : speakers) {
    std::vector<Utterance> utts = ds.Get(id).OfCategory(opts.category);
    // Fisher-Yates with a per-speaker stream.
    Rng rng(MixSeed(seed, Fnv1a64(id)));
    for (std::size_t i = utts.size(); i > 1; --i) {
      std::swap(utts[i - 1], utts[rng.Below(i)]);
    }
    AudioClip joined;
    joined.sample_rate = opts.sample_rate;
    for (const Utterance &u : utts) {
      AudioClip clip = NormalizePeak(LoadUtterance(u.path, opts.sample_rate));
      if (opts.apply_vad && !clip.silent) {
        try {
          clip = RemoveUnvoiced(clip, DetectVoiced(clip, opts.vad));
        } catch (const Error &e) {
          if (e.code() != ErrorCode::kClipTooShort) throw;
          SCD_LOG(kWarn) << u.path.string() << ": too short for VAD, skipped";
          continue;
        }
      }
      joined.samples.insert(joined.samples.end(), clip.samples.begin(),
                            clip.samples.end());
    }
    speech.push_back(std::move(joined));
  }
  return BuildConversationFromSpeech(speech, speakers, opts);
}

std::vector<bool> TruthLabels(std::span<const double> change_points,
                              double interval_s, std::size_t n_intervals) {
  if (!(interval_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "interval must be > 0");
  }
  std::vector<bool> truth(n_intervals > 0 ? n_intervals - 1 : 0, false);
  for (double c : change_points) {
    const double t = std::floor(c / interval_s + 1e-9);
    if (t >= 1.0 && t < static_cast<double>(n_intervals)) {
      truth[static_cast<std::size_t>(t) - 1] = true;
    }
  }
  return truth;
}

std::vector<bool> TruthLabels(const Conversation &conv, double interval_s) {
  const auto n = static_cast<std::size_t>(
      std::floor(conv.audio.DurationSeconds() / interval_s + 1e-9));
  return TruthLabels(conv.change_points, interval_s, n);
}

void WriteChangePoints(const fs::path &path, const Conversation &conv) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.precision(10);
  out << "# block_s " << conv.block_s << "\n# speakers";
  for (const std::string &id : conv.speaker_order) out << ' ' << id;
  out << '\n';
  for (double c : conv.change_points) out << c << '\n';
}

std::vector<double> ReadChangePoints(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    try {
      out.push_back(std::stod(line));
    } catch (const std::exception &) {
      throw Error(ErrorCode::kCorruptHeader,
                  path.string() + ": bad change point '" + line + "'");
    }
  }
  if (!std::is_sorted(out.begin(), out.end())) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": change points not ascending");
  }
  return out;
}

}  // namespace scd
