#include <gtest/gtest.h>

#include <fstream>

#include "monorec/config.hpp"
#include "support.hpp"

using namespace monorec;
namespace ts = testing_support;

namespace {

ConfigError parse_error(const std::string& text) {
  try {
    PipelineConfig::parse(text, "test.cfg");
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no error for: " << text;
  return ConfigError("", "", 0, "");
}

}  // namespace

TEST(Config, DefaultsMatchDocumentedValues) {
  const PipelineConfig c;
  EXPECT_EQ(c.depth.d_min, 0.05);
  EXPECT_EQ(c.depth.d_max, 0.5);
  EXPECT_EQ(c.depth.steps, 32);
  EXPECT_EQ(c.loss.lambda, 0.85);
  EXPECT_EQ(c.loss.alpha, 4.0);
  EXPECT_EQ(c.loss.beta_base, 1e-3);
  EXPECT_EQ(c.loss.gamma, 4.0);
  EXPECT_EQ(c.thresholds.stereo_error, 0.3);
  EXPECT_EQ(c.thresholds.temporal_error, 0.25);
  EXPECT_EQ(c.thresholds.depth_ratio, 1.5);
  EXPECT_EQ(c.match_iou, 0.25);
  EXPECT_EQ(c.moving_fraction, 0.4);
  EXPECT_EQ(c.probability_threshold, 0.5);
  EXPECT_EQ(c.depth_cap, 80.0);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, SerializeParseRoundTrip) {
  ts::Rng rng(91);
  for (int trial = 0; trial < 300; ++trial) {
    PipelineConfig c;
    c.depth.d_min = ts::uniform(rng, 0.01, 0.2);
    c.depth.d_max = c.depth.d_min + ts::uniform(rng, 0.01, 1.0);
    c.depth.steps = ts::uniform_int(rng, 2, 128);
    c.alpha_w = ts::uniform(rng, 0.1, 20.0);
    c.loss.lambda = ts::uniform(rng, 0.0, 1.0);
    c.loss.beta_base = ts::uniform(rng, 0.0, 1e-2);
    c.scales = ts::uniform_int(rng, 1, 8);
    c.thresholds.depth_ratio = ts::uniform(rng, 1.01, 3.0);
    c.match_iou = ts::uniform(rng, 0.01, 1.0);
    c.moving_fraction = ts::uniform(rng, 0.0, 0.99);
    c.movable_classes = trial % 2 ? std::vector<std::string>{"car", "person"} : std::vector<std::string>{};
    c.seed = static_cast<std::uint64_t>(rng());
    c.bundle = "dir/b" + std::to_string(trial);
    const PipelineConfig back = PipelineConfig::parse(c.serialize());
    ASSERT_EQ(back, c) << c.serialize();
    ASSERT_EQ(back.serialize(), c.serialize());
  }
}

TEST(Config, CommentsBlankLinesAndMissingKeys) {
  const auto c = PipelineConfig::parse("# header\n\n  depth.steps = 16   # fewer planes\nmask.tau3=2\n");
  EXPECT_EQ(c.depth.steps, 16);
  EXPECT_EQ(c.thresholds.depth_ratio, 2.0);
  EXPECT_EQ(c.loss.gamma, 4.0);
}

TEST(Config, ErrorsNameFileAndField) {
  auto e = parse_error("depth.stepz = 3\n");
  EXPECT_EQ(e.file(), "test.cfg");
  EXPECT_EQ(e.field(), "depth.stepz");
  EXPECT_EQ(e.line(), 1);
  e = parse_error("mask.iou = 0.2\nmask.iou = 0.3\n");
  EXPECT_EQ(e.field(), "mask.iou");
  EXPECT_EQ(e.line(), 2);
  EXPECT_EQ(parse_error("loss.alpha = four\n").field(), "loss.alpha");
  EXPECT_EQ(parse_error("depth.steps = 2.5\n").field(), "depth.steps");
  EXPECT_EQ(parse_error("just words\n").line(), 1);
}

TEST(Config, ValidationNamesOffendingField) {
  EXPECT_EQ(parse_error("depth.d_min = 0.6\n").field(), "depth");
  EXPECT_EQ(parse_error("costvolume.alpha_w = 0\n").field(), "costvolume.alpha_w");
  EXPECT_EQ(parse_error("loss.scales = 0\n").field(), "loss.scales");
  EXPECT_EQ(parse_error("mask.tau3 = 1\n").field(), "mask.tau3");
  EXPECT_EQ(parse_error("mask.moving_fraction = 1\n").field(), "mask.moving_fraction");
  EXPECT_EQ(parse_error("mask.probability_threshold = 0\n").field(), "mask.probability_threshold");
  EXPECT_EQ(parse_error("eval.cap = -1\n").field(), "eval.cap");
  EXPECT_EQ(parse_error("loss.lambda = 1.5\n").field(), "loss");
}

TEST(Config, LoadFromFile) {
  const auto dir = ts::temp_dir("config");
  const std::string path = (dir / "run.cfg").string();
  std::ofstream(path) << "run.seed = 11\nio.output = out dir\n";
  const auto c = PipelineConfig::load(path);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.output, "out dir");
  try {
    PipelineConfig::load((dir / "missing.cfg").string());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.file(), (dir / "missing.cfg").string());
  }
}
