#include <gtest/gtest.h>

#include <fstream>

#include "cli_pipeline.hpp"
#include "monorec/config.hpp"
#include "support.hpp"

namespace cp = cli_pipeline;
namespace ts = testing_support;

namespace {

std::string first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST(Cli, PrintDefaultsParsesBackToDefaults) {
  const auto dir = ts::temp_dir("cli_defaults");
  ASSERT_EQ(cp::run("--print-defaults", (dir / "d.cfg").string()), 0);
  const std::string text = ts::read_bytes(dir / "d.cfg");
  EXPECT_EQ(text, monorec::PipelineConfig{}.serialize());
  EXPECT_EQ(monorec::PipelineConfig::parse(text), monorec::PipelineConfig{});
}

TEST(Cli, MissingInputGivesOneErrorLine) {
  const auto dir = ts::temp_dir("cli_missing");
  const auto err = dir / "err.txt";
  EXPECT_EQ(cp::run("costvol --bundle " + (dir / "nowhere").string() + " --out " + (dir / "v").string(), "",
                    err.string()),
            1);
  const std::string line = first_line(err);
  EXPECT_EQ(line.rfind("ERROR kind=missing_input file=\"", 0), 0u) << line;
  EXPECT_NE(line.find("field=\"bundle\""), std::string::npos) << line;
  EXPECT_NE(line.find("message=\""), std::string::npos) << line;
  EXPECT_FALSE(std::filesystem::exists(dir / "v"));
}

TEST(Cli, BadConfigNamesField) {
  const auto dir = ts::temp_dir("cli_config");
  std::ofstream(dir / "bad.cfg") << "mask.tau3 = 0.9\n";
  const auto err = dir / "err.txt";
  EXPECT_EQ(cp::run("--config " + (dir / "bad.cfg").string() + " gradcheck --points 3", "", err.string()), 1);
  const std::string line = first_line(err);
  EXPECT_EQ(line.rfind("ERROR kind=config", 0), 0u) << line;
  EXPECT_NE(line.find("field=\"mask.tau3\""), std::string::npos) << line;
}

TEST(Cli, UsageErrorsAreReported) {
  const auto dir = ts::temp_dir("cli_usage");
  const auto err = dir / "err.txt";
  EXPECT_EQ(cp::run("costvol --kind sideways", "", err.string()), 1);
  EXPECT_EQ(first_line(err).rfind("ERROR kind=usage", 0), 0u);
  EXPECT_EQ(cp::run("--threads 0 gradcheck", "", err.string()), 1);
}

TEST(Cli, PipelineRunsAndIsRepeatable) {
  const auto root = ts::temp_dir("cli_pipeline");
  ASSERT_EQ(cp::run_all(root / "a", 1), "");
  ASSERT_EQ(cp::run_all(root / "b", 3), "");
  const auto files = cp::list_files(root / "a");
  EXPECT_EQ(files, cp::list_files(root / "b"));
  EXPECT_GT(files.size(), 40u);
  for (const auto& f : files) EXPECT_EQ(ts::read_bytes(root / "a" / f), ts::read_bytes(root / "b" / f)) << f;

  EXPECT_EQ(first_line(root / "a" / "eval.csv"), "scene,variant,abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3,count");
  EXPECT_EQ(first_line(root / "a" / "mask_pr.csv"), "scene,variant,precision,recall,f1,tp,fp,fn");
  EXPECT_EQ(first_line(root / "a" / "loss_dref.csv"), "term,scale,weight,value");
  EXPECT_EQ(first_line(root / "a" / "cloud.ply"), "ply");
  EXPECT_TRUE(std::filesystem::exists(root / "a" / "masks" / cp::frame_file("moving", 1, "png")));
}
