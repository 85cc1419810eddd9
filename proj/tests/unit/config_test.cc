#include <cmath>
#include <limits>
#include <string>

#include <gtest/gtest.h>

#include "scd/config.h"
#include "scd/error.h"
#include "test_util.h"

namespace scd {
namespace {

TEST(Config, DefaultsRoundTrip) {
  const PipelineConfig def;
  def.Validate();
  EXPECT_EQ(ParseConfig(SerializeConfig(def)), def);
  EXPECT_EQ(ParseConfig(""), def);
}

TEST(Config, EditedFieldsRoundTrip) {
  PipelineConfig c;
  c.vad.strictness_scale = 1.25;
  c.features.mfcc.n_mels = 26;
  c.cmvn_scope = CmvnScope::kSpeaker;
  c.hidden_layers = {64, 32};
  c.train.lambda_schedule = {1.0, 0.1, 0.0};
  c.train.cg_iters_per_stage = 17;
  c.scd.p = kInfNorm;
  c.scd.use_second_difference = true;
  c.intervals = {0.25, 3.0};
  c.paths.model = "m.bin";
  c.jobs = 4;
  const PipelineConfig back = ParseConfig(SerializeConfig(c));
  EXPECT_EQ(back, c);
  EXPECT_TRUE(std::isinf(back.scd.p));
}

TEST(Config, PartialFileKeepsDefaults) {
  const PipelineConfig c = ParseConfig("[cmvn]\nscope = speaker\n\n[scd]\np = 4\n");
  EXPECT_EQ(c.cmvn_scope, CmvnScope::kSpeaker);
  EXPECT_EQ(c.scd.p, 4.0);
  EXPECT_EQ(c.hidden_layers, PipelineConfig{}.hidden_layers);
}

TEST(Config, RejectsUnknownAndMalformed) {
  EXPECT_SCD_ERROR(ParseConfig("[vad]\nwindow = 50\n"), ErrorCode::kInvalidConfig);
  EXPECT_SCD_ERROR(ParseConfig("[nonsense]\nx = 1\n"), ErrorCode::kInvalidConfig);
  EXPECT_SCD_ERROR(ParseConfig("[vad]\nwin_ms = fifty\n"), ErrorCode::kInvalidConfig);
  EXPECT_SCD_ERROR(ParseConfig("[cmvn]\nscope = global\n"), ErrorCode::kInvalidConfig);
  // Schedule must descend strictly and end at 0.
  EXPECT_SCD_ERROR(ParseConfig("[train]\nlambda_schedule = 3,1\n"), ErrorCode::kInvalidConfig);
  EXPECT_SCD_ERROR(ParseConfig("[train]\nlambda_schedule = 1,3,0\n"), ErrorCode::kInvalidConfig);
  EXPECT_SCD_ERROR(ParseConfig("[scd]\np = 0\n"), ErrorCode::kInvalidConfig);
}

TEST(Config, LoadNamesTheFile) {
  TempDir dir;
  EXPECT_SCD_ERROR(LoadConfig(dir.path() / "absent.ini"), ErrorCode::kIo);
  WriteText(dir.path() / "bad.ini", "[vad]\nbogus = 1\n");
  try {
    LoadConfig(dir.path() / "bad.ini");
    ADD_FAILURE() << "bad key accepted";
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("bad.ini"), std::string::npos) << e.what();
  }
}

TEST(Config, ShapeFollowsFeatures) {
  PipelineConfig c;
  const NetworkShape s = c.Shape(20);
  EXPECT_EQ(s.layer_sizes, (std::vector<int>{390, 200, 20}));
  c.ValidateShape(s, 20);
  EXPECT_SCD_ERROR(c.ValidateShape(s, 21), ErrorCode::kInvalidConfig);
  NetworkShape wrong = s;
  wrong.layer_sizes[0] = 389;
  EXPECT_SCD_ERROR(c.ValidateShape(wrong, 20), ErrorCode::kInvalidConfig);
}

TEST(DoubleList, ParsesAndFormats) {
  EXPECT_EQ(ParseDoubleList("3, 1,0.3"), (std::vector<double>{3, 1, 0.3}));
  EXPECT_TRUE(std::isinf(ParseDoubleList("inf")[0]));
  EXPECT_SCD_ERROR(ParseDoubleList("1,,2"), ErrorCode::kInvalidConfig);
  EXPECT_EQ(ParseIntList("200,50"), (std::vector<int>{200, 50}));
  EXPECT_EQ(FormatDouble(0.1), "0.1");
  EXPECT_EQ(FormatDouble(std::numeric_limits<double>::infinity()), "inf");
  for (double v : {1.0 / 3.0, 1e-12, 123456.789}) EXPECT_EQ(std::stod(FormatDouble(v)), v);
}

}  // namespace
}  // namespace scd
