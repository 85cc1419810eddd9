#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "scd/corpus.h"
#include "scd/error.h"
#include "test_util.h"

namespace scd {
namespace {

namespace fs = std::filesystem;

AudioClip Clip(double seconds, double value = 0.25, int sr = 1000) {
  AudioClip c;
  c.sample_rate = sr;
  c.samples.assign(static_cast<size_t>(std::llround(seconds * sr)), value);
  return c;
}

void MakeSpeaker(const fs::path &root, const std::string &id, int files) {
  fs::create_directories(root / id);
  for (int i = 0; i < files; ++i)
    WriteWav(root / id / ("u" + std::to_string(i) + ".wav"), Clip(0.1, 0.1, 16000));
}

TEST(ScanDataset, LexicographicSpeakers) {
  TempDir dir;
  std::string manifest = "# id\tpath\tcategory\n";
  for (std::string id : {"zed", "amy", "kim", "bob"}) {
    MakeSpeaker(dir.path(), id, 2);
    manifest += id + "\t" + id + "/u0.wav\ttrain\n";
    manifest += id + "\t" + id + "/u1.wav\ttest\n";
  }
  WriteText(dir.path() / "manifest.tsv", manifest);
  SpeakerDataset ds = ScanDataset(dir.path());
  EXPECT_EQ(ds.Ids(), (std::vector<std::string>{"amy", "bob", "kim", "zed"}));
  const Speaker &kim = ds.Get("kim");
  ASSERT_EQ(kim.utterances.size(), 2u);
  EXPECT_EQ(kim.OfCategory(UtteranceCategory::kTrain).size(), 1u);
  EXPECT_EQ(kim.OfCategory(UtteranceCategory::kTest).size(), 1u);
  EXPECT_TRUE(fs::exists(kim.utterances[0].path));
}

TEST(ScanDataset, ManifestRoundTrip) {
  TempDir dir;
  MakeSpeaker(dir.path(), "a", 2);
  MakeSpeaker(dir.path(), "b", 1);
  WriteText(dir.path() / "manifest.tsv",
            "a\ta/u0.wav\ttrain\na\ta/u1.wav\ttest\nb\tb/u0.wav\ttrain\n");
  SpeakerDataset ds = ScanDataset(dir.path());
  WriteManifest(ds);
  SpeakerDataset again = ScanDataset(dir.path());
  EXPECT_EQ(again.Ids(), ds.Ids());
  EXPECT_EQ(again.Get("a").utterances.size(), 2u);
}

TEST(ScanDataset, Errors) {
  TempDir dir;
  EXPECT_SCD_ERROR(ScanDataset(dir.path()), ErrorCode::kMissingManifest);

  MakeSpeaker(dir.path(), "a", 1);
  WriteText(dir.path() / "manifest.tsv", "a\ta/u0.wav\ttrain\na\ta/u9.wav\ttrain\n");
  try {
    ScanDataset(dir.path());
    ADD_FAILURE() << "missing file accepted";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingManifest);
    EXPECT_NE(e.detail().find("u9.wav"), std::string::npos);
  }

  fs::create_directories(dir.path() / "ghost");
  WriteText(dir.path() / "manifest.tsv", "a\ta/u0.wav\ttrain\n");
  EXPECT_SCD_ERROR(ScanDataset(dir.path()), ErrorCode::kEmptySpeaker);
  fs::remove(dir.path() / "ghost");

  WriteText(dir.path() / "manifest.tsv", "a\ta/u0.wav\ttest\n");
  EXPECT_SCD_ERROR(ScanDataset(dir.path()), ErrorCode::kEmptySpeaker);

  WriteText(dir.path() / "manifest.tsv", "a\ta/u0.wav\tbogus\n");
  EXPECT_SCD_ERROR(ScanDataset(dir.path()), ErrorCode::kMissingManifest);
}

TEST(ScanTimit, MapsCategoriesAndFiltersMale) {
  TempDir dir;
  auto touch = [&](const std::string &rel) {
    fs::create_directories((dir.path() / rel).parent_path());
    WriteText(dir.path() / rel, "x");
  };
  for (std::string spk : {"DR1/MABC0", "DR2/MXYZ1", "DR1/FDEF0"}) {
    touch(spk + "/SA1.WAV");
    touch(spk + "/SA2.WAV");
    touch(spk + "/SX10.WAV");
    touch(spk + "/SI500.WAV");
    touch(spk + "/SX10.PHN");
  }
  SpeakerDataset ds = ScanTimit(dir.path());
  EXPECT_EQ(ds.Ids(), (std::vector<std::string>{"MABC0", "MXYZ1"}));
  const Speaker &s = ds.Get("MABC0");
  EXPECT_EQ(s.OfCategory(UtteranceCategory::kTest).size(), 2u);
  EXPECT_EQ(s.OfCategory(UtteranceCategory::kTrain).size(), 2u);
  EXPECT_EQ(ScanTimit(dir.path(), false).speakers.size(), 3u);
}

TEST(BuildConversation, MinRule) {
  ConversationOptions opts;
  opts.sample_rate = 1000;
  Conversation c = BuildConversationFromSpeech(
      {Clip(5, 0.1), Clip(4, 0.2), Clip(6, 0.3)}, {"a", "b", "c"}, opts);
  EXPECT_DOUBLE_EQ(c.block_s, 4.0);
  EXPECT_EQ(c.audio.samples.size(), 12000u);
  EXPECT_EQ(c.change_points, (std::vector<double>{4.0, 8.0}));
  EXPECT_EQ(c.speaker_order, (std::vector<std::string>{"a", "b", "c"}));
  // Blocks appear in order, each truncated to T.
  EXPECT_EQ(c.audio.samples[3999], 0.1);
  EXPECT_EQ(c.audio.samples[4000], 0.2);
  EXPECT_EQ(c.audio.samples[8000], 0.3);
}

TEST(BuildConversation, SixtyThreeSpeakers) {
  ConversationOptions opts;
  opts.sample_rate = 100;
  std::vector<AudioClip> speech;
  std::vector<std::string> ids;
  for (int i = 0; i < 63; ++i) {
    speech.push_back(Clip(14 + 0.5 * (i % 3), 0.1, 100));
    ids.push_back("s" + std::to_string(i));
  }
  Conversation c = BuildConversationFromSpeech(speech, ids, opts);
  EXPECT_DOUBLE_EQ(c.audio.DurationSeconds(), 882.0);
  EXPECT_EQ(c.change_points.size(), 62u);
  for (size_t i = 1; i < c.change_points.size(); ++i)
    EXPECT_GT(c.change_points[i], c.change_points[i - 1]);
}

TEST(BuildConversation, SingleSpeakerAndErrors) {
  ConversationOptions opts;
  opts.sample_rate = 1000;
  Conversation c = BuildConversationFromSpeech({Clip(3)}, {"a"}, opts);
  EXPECT_TRUE(c.change_points.empty());
  EXPECT_SCD_ERROR(BuildConversationFromSpeech({Clip(3), Clip(0.5)}, {"a", "b"}, opts),
                   ErrorCode::kSpeakerTooShort);
}

TEST(BuildConversation, QuantumAlignsBlocks) {
  ConversationOptions opts;
  opts.sample_rate = 1000;
  opts.block_quantum_s = 2.0;
  Conversation c =
      BuildConversationFromSpeech({Clip(7.3), Clip(9.9), Clip(8)}, {"a", "b", "c"}, opts);
  EXPECT_DOUBLE_EQ(c.block_s, 6.0);
  EXPECT_EQ(c.change_points, (std::vector<double>{6.0, 12.0}));
  EXPECT_EQ(c.audio.samples.size(), 18000u);
}

TEST(TruthLabels, Examples) {
  // Boundary index i sits between intervals i and i + 1.
  auto t = TruthLabels(std::vector<double>{4.0}, 1.0, 8);
  ASSERT_EQ(t.size(), 7u);
  for (size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i], i == 3) << i;

  t = TruthLabels(std::vector<double>{}, 1.0, 8);
  for (bool b : t) EXPECT_FALSE(b);

  t = TruthLabels(std::vector<double>{4.2}, 0.5, 12);
  for (size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i], i == 7) << i;
}

TEST(TruthLabels, EqualBlocksGiveOnePositivePerChange) {
  ConversationOptions opts;
  opts.sample_rate = 1000;
  std::vector<AudioClip> speech(7, Clip(6));
  std::vector<std::string> ids{"a", "b", "c", "d", "e", "f", "g"};
  Conversation c = BuildConversationFromSpeech(speech, ids, opts);
  for (double interval : {0.5, 1.0, 2.0, 3.0}) {
    auto t = TruthLabels(c, interval);
    EXPECT_EQ(t.size(), static_cast<size_t>(42 / interval) - 1);
    EXPECT_EQ(std::count(t.begin(), t.end(), true), 6) << interval;
  }
}

TEST(ChangePointFile, RoundTrip) {
  TempDir dir;
  ConversationOptions opts;
  opts.sample_rate = 1000;
  Conversation c =
      BuildConversationFromSpeech({Clip(2.5), Clip(3), Clip(4)}, {"x", "y", "z"}, opts);
  WriteChangePoints(dir.path() / "c.txt", c);
  EXPECT_EQ(ReadChangePoints(dir.path() / "c.txt"), c.change_points);
  WriteText(dir.path() / "bad.txt", "3\n1\n");
  EXPECT_THROW(ReadChangePoints(dir.path() / "bad.txt"), Error);
}

}  // namespace
}  // namespace scd
