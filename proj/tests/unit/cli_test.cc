#include <sys/wait.h>

#include <cstdio>
#include <string>

#include <gtest/gtest.h>

#include "scd/audio_io.h"
#include "scd/config.h"
#include "scd/synth_voice.h"
#include "test_util.h"

namespace scd {
namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult RunCli(const std::string &args) {
  const std::string cmd = std::string(SCD_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE *pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Q(const std::filesystem::path &p) { return "'" + p.string() + "'"; }

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(RunCli("--help").exit_code, 0);
  EXPECT_EQ(RunCli("frobnicate").exit_code, 1);
  EXPECT_EQ(RunCli("detect").exit_code, 1);  // missing required options
}

TEST(Cli, ConfigDumpParses) {
  const RunResult r = RunCli("config");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(ParseConfig(r.output), PipelineConfig{});
}

TEST(Cli, DetectWithoutThresholdsSuggestsCalibrate) {
  TempDir dir;
  const RunResult r =
      RunCli("detect --audio x.wav --threshold-file " + Q(dir.path() / "thr.json"));
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.output.find("calibrate"), std::string::npos) << r.output;
}

TEST(Cli, CorruptWavIsNamed) {
  TempDir dir;
  SynthCorpusOptions o;
  o.n_speakers = 2;
  o.utts_per_speaker = 2;
  o.utt_seconds = 1.5;
  SynthSpeakerCorpus(o, dir.path() / "c");
  WriteText(dir.path() / "c" / "syn001" / "u01.wav", "RIFFjunk");
  const RunResult r =
      RunCli("preprocess --corpus " + Q(dir.path() / "c") + " --out " + Q(dir.path() / "f"));
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_NE(r.output.find("u01.wav"), std::string::npos) << r.output;
}

TEST(Cli, PreprocessRefusesToOverwrite) {
  TempDir dir;
  SynthCorpusOptions o;
  o.n_speakers = 2;
  o.utts_per_speaker = 2;
  o.utt_seconds = 1.5;
  SynthSpeakerCorpus(o, dir.path() / "c");
  const std::string args =
      "preprocess --corpus " + Q(dir.path() / "c") + " --out " + Q(dir.path() / "f");
  ASSERT_EQ(RunCli(args).exit_code, 0);
  const RunResult again = RunCli(args);
  EXPECT_NE(again.exit_code, 0);
  EXPECT_NE(again.output.find("--force"), std::string::npos) << again.output;
  EXPECT_EQ(RunCli(args + " --force").exit_code, 0);
}

TEST(Cli, SynthConversationWritesTruth) {
  TempDir dir;
  const std::string c = Q(dir.path() / "c");
  ASSERT_EQ(RunCli("synth corpus --out " + c + " --speakers 3 --utts 3 --seconds 3").exit_code,
            0);
  const RunResult r = RunCli("synth conversation --corpus " + c + " --out " +
                             Q(dir.path() / "conv.wav") + " --quantum 0.5");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "conv.changes.txt")) << r.output;
  EXPECT_GT(LoadUtterance(dir.path() / "conv.wav", 16000).samples.size(), 0u);
}

}  // namespace
}  // namespace scd
