#include "shadowprobe/pipeline.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "shadowprobe/error.h"
#include "shadowprobe/eval.h"
#include "shadowprobe/model.h"

namespace shadowprobe {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("shadowprobe_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

PipelineConfig SmallNetflow(const fs::path& out) {
  PipelineConfig cfg = ParsePipelineConfig(R"({
    "case": "netflow", "seed": 3,
    "netflow": {"n_shadows": 12, "flows_per_shadow": 200, "n_targets": 4, "folds": 4}
  })");
  cfg.out_dir = out;
  return cfg;
}

std::size_t CountLines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

TEST(PipelineConfigTest, DefaultsAndOverrides) {
  const PipelineConfig cfg = ParsePipelineConfig(R"({"case": "speech", "seed": 7, "speech": {"top_k": 3}})");
  EXPECT_EQ(cfg.case_kind, PipelineCase::kSpeech);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.speech.top_k, 3u);
  EXPECT_EQ(cfg.speech.n_shadows, 40u);
  EXPECT_EQ(cfg.netflow.kernel.kind, KernelKind::kPolynomial);
  EXPECT_EQ(cfg.netflow.kernel.degree, 3);
}

TEST(PipelineConfigTest, UnknownFieldIsNamed) {
  try {
    ParsePipelineConfig(R"({"case": "netflow", "netflow": {"shadowz": 3}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "netflow.shadowz");
  }
}

TEST(PipelineConfigTest, InvalidValueIsNamed) {
  PipelineConfig cfg;
  cfg.case_kind = PipelineCase::kNetflow;
  cfg.netflow.balance = 1.0;
  try {
    ValidatePipelineConfig(cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "netflow.balance");
  }
  EXPECT_THROW(PipelineCaseFromString("vision"), ConfigError);
  EXPECT_THROW(ParsePipelineConfig("{not json"), ConfigError);
}

TEST(PipelineConfigTest, EchoParsesBack) {
  const PipelineConfig cfg = ParsePipelineConfig(R"({"case": "dp_bypass", "dp_bypass": {"sigma": 2.5}})");
  const Json j = Json::parse(PipelineConfigToJson(cfg));
  EXPECT_EQ(j["dp_bypass"]["sigma"], 2.5);
}

TEST(RunPipelineTest, NetflowReportCarriesConsistentMetrics) {
  const fs::path out = TempDir("netflow");
  const PipelineResult r = RunPipeline(SmallNetflow(out));
  ASSERT_TRUE(r.ok) << r.error;
  const Json j = Json::parse(ReadTextFile(out / "report.json"));
  EXPECT_EQ(j["kind"], "attack_report");
  EXPECT_EQ(j["status"], "ok");
  const Json& cv = j["results"]["cross_validation"];
  const auto counts = cv["confusion_matrix"]["counts"].get<std::vector<std::vector<std::size_t>>>();
  ASSERT_EQ(counts.size(), 2u);
  ASSERT_EQ(counts[0].size(), 2u);
  const Metrics m = ComputeMetrics(ConfusionFromCounts({"NotP", "P"}, counts));
  EXPECT_DOUBLE_EQ(cv["metrics"]["per_class"]["P"]["precision"].get<double>(), m.at("P").precision);
  EXPECT_DOUBLE_EQ(cv["metrics"]["per_class"]["NotP"]["recall"].get<double>(), m.at("NotP").recall);
  for (const char* key : {"kernel", "smo"}) EXPECT_TRUE(j["config"]["netflow"].contains(key));
  EXPECT_TRUE(j["config"].contains("aggregation"));
  EXPECT_TRUE(fs::exists(out / "meta_classifier.json"));
  fs::remove_all(out);
}

TEST(RunPipelineTest, ReportsAreByteIdenticalAcrossRunsAndJobCounts) {
  const fs::path a = TempDir("det_a"), b = TempDir("det_b");
  PipelineConfig ca = SmallNetflow(a), cb = SmallNetflow(b);
  cb.jobs = 3;
  ASSERT_TRUE(RunPipeline(ca).ok);
  ASSERT_TRUE(RunPipeline(cb).ok);
  EXPECT_EQ(ReadTextFile(a / "report.json"), ReadTextFile(b / "report.json"));
  EXPECT_EQ(ReadTextFile(a / "meta_classifier.json"), ReadTextFile(b / "meta_classifier.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(RunPipelineTest, DpBypassWritesFourScatterFiles) {
  const fs::path out = TempDir("dp");
  PipelineConfig cfg = ParsePipelineConfig(R"({
    "case": "dp_bypass", "dp_bypass": {"pool_size": 2000, "n_runs": 10, "points_per_run": 200, "folds": 5}
  })");
  cfg.out_dir = out;
  const PipelineResult r = RunPipeline(cfg);
  ASSERT_TRUE(r.ok) << r.error;
  for (const char* f : {"scatter_noiseless_P.csv", "scatter_noiseless_NotP.csv", "scatter_sulq_P.csv",
                        "scatter_sulq_NotP.csv"}) {
    ASSERT_TRUE(fs::exists(out / f)) << f;
    EXPECT_EQ(CountLines(out / f), 1u + 3u * 10u) << f;
  }
  std::ifstream in(out / "scatter_sulq_P.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x,y,arm,run");
  const Json j = Json::parse(ReadTextFile(out / "report.json"));
  EXPECT_TRUE(j["config"]["dp_bypass"].contains("sigma"));
  fs::remove_all(out);
}

TEST(RunPipelineTest, SpeechAndMlpCasesComplete) {
  const fs::path out = TempDir("speech");
  PipelineConfig cfg = ParsePipelineConfig(R"({
    "case": "speech",
    "speech": {"spec": {"n_phonemes": 6, "dim": 3, "n_shifted": 2}, "n_shadows": 8,
               "sequences_per_phoneme": 3, "n_baselines": 3, "top_k": 2}
  })");
  cfg.out_dir = out;
  const PipelineResult r = RunPipeline(cfg);
  ASSERT_TRUE(r.ok) << r.error;
  const Json j = Json::parse(ReadTextFile(out / "report.json"));
  EXPECT_EQ(j["results"]["selected_phonemes"].size(), 2u);
  EXPECT_TRUE(j["config"]["speech"].contains("var_floor"));

  PipelineConfig mlp = ParsePipelineConfig(R"({"case": "mlp_demo", "mlp_demo": {"n_seeds": 2, "epochs": 100}})");
  mlp.out_dir = out / "mlp";
  ASSERT_TRUE(RunPipeline(mlp).ok);
  EXPECT_EQ(KindOf(LoadModel(out / "mlp" / "model.json")), ModelKind::kMlp);
  fs::remove_all(out);
}

TEST(RunPipelineTest, RuntimeFailureWritesPartialReport) {
  const fs::path out = TempDir("fail");
  PipelineConfig cfg = ParsePipelineConfig(R"({
    "case": "dp_bypass", "dp_bypass": {"pool_size": 50, "n_runs": 4, "points_per_run": 20, "folds": 2}
  })");
  cfg.out_dir = out;
  // A directory squatting on an output file name makes the write fail.
  fs::create_directories(out / "scatter_sulq_P.csv");
  const PipelineResult r = RunPipeline(cfg);
  EXPECT_FALSE(r.ok);
  EXPECT_FALSE(r.error.empty());
  const Json j = Json::parse(ReadTextFile(out / "report.json"));
  EXPECT_EQ(j["status"], "failed");
  EXPECT_TRUE(j.contains("error"));
  fs::remove_all(out);
}

TEST(IdentityPatternsTest, OneHotInputsAndEncodedTargets) {
  const auto p = IdentityPatterns(4, 0.1, 0.9);
  ASSERT_EQ(p.size(), 4u);
  EXPECT_EQ(p[2].input, (Vector{0, 0, 1, 0}));
  EXPECT_EQ(p[2].target, (Vector{0.1, 0.1, 0.9, 0.1}));
}

}  // namespace
}  // namespace shadowprobe
