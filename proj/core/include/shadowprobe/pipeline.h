#ifndef SHADOWPROBE_PIPELINE_H_
#define SHADOWPROBE_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shadowprobe/attack.h"
#include "shadowprobe/datagen.h"
#include "shadowprobe/dtree.h"
#include "shadowprobe/eval.h"
#include "shadowprobe/svm.h"

namespace shadowprobe {

enum class PipelineCase { kSpeech, kNetflow, kDpBypass, kMlpDemo };
const char* ToString(PipelineCase c);
// Throws ConfigError on an unknown name.
PipelineCase PipelineCaseFromString(const std::string& name);

struct SpeechConfig {
  SpeechSpecParams spec;
  std::size_t n_shadows = 40;
  double balance = 0.5;
  std::size_t sequences_per_phoneme = 8;
  std::size_t viterbi_iters = 5;
  std::size_t baum_welch_iters = 0;
  double var_floor = kDefaultVarFloor;
  // Share of shadows (per label) used to train the meta-classifier; the rest
  // are held out.
  double train_fraction = 0.7;
  std::size_t n_baselines = 20;
  std::size_t reference_sequences_per_phoneme = 8;
  std::size_t top_k = 5;
  bool shuffle_labels = false;
  TreeParams tree;
};

struct NetflowConfig {
  FlowSpec spec;
  std::size_t n_shadows = 70;
  double balance = 0.5;
  std::size_t flows_per_shadow = 2000;
  KernelSpec kernel{KernelKind::kPolynomial, 1.0, 0.0, 3};
  SmoParams smo;
  std::size_t folds = 10;
  std::size_t n_targets = 20;
  bool shuffle_labels = false;
  TreeParams tree;
};

struct DpBypassConfig {
  FlowSpec spec;
  // Flows generated per property before subsampling.
  std::size_t pool_size = 20000;
  DpBypassParams attack;
};

struct MlpDemoConfig {
  std::size_t hidden = 3;
  double learning_rate = 0.3;
  std::size_t epochs = 5000;
  std::size_t n_seeds = 10;
  double low_target = 0.1;
  double high_target = 0.9;
};

struct PipelineConfig {
  PipelineCase case_kind = PipelineCase::kNetflow;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
  std::size_t jobs = 1;
  SpeechConfig speech;
  NetflowConfig netflow;
  DpBypassConfig dp_bypass;
  MlpDemoConfig mlp_demo;
};

// JSON config. Every key is optional and unknown keys are rejected. Errors are
// ConfigError naming the offending field (e.g. "netflow.n_shadows").
PipelineConfig ParsePipelineConfig(const std::string& text);
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path);
void ValidatePipelineConfig(const PipelineConfig& cfg);
// Every tunable, excluding the output directory and the job count.
std::string PipelineConfigToJson(const PipelineConfig& cfg);

using LogFn = std::function<void(const std::string&)>;

// ---------------------------------------------------------------- outcomes

struct SpeechOutcome {
  std::vector<std::string> shifted;
  std::vector<PhonemeScore> divergences;
  std::vector<std::string> selected;
  std::size_t recovered = 0;
  HoldoutResult unfiltered;
  HoldoutResult filtered;
  // Unfiltered row-level hold-out accuracy per phoneme.
  std::map<std::string, double> per_phoneme_accuracy;
  MetaClassifier meta;  // filtered meta-classifier trained on the train split
};

struct NetflowOutcome {
  std::vector<std::size_t> support_vectors;  // per shadow
  std::size_t converged = 0;
  std::size_t meta_rows = 0;
  CvResult cv;
  Metrics cv_metrics;
  MetaClassifier meta;  // trained on every shadow
  std::vector<PropertyVerdict> target_verdicts;
  std::vector<Property> target_truths;
  std::size_t targets_correct = 0;
  // Row-level accuracy of `meta` over the held-out targets' rows.
  double target_row_accuracy = 0.0;
};

struct DpBypassOutcome {
  DpBypassReport report;
  MetaClassifier meta_noiseless;
  MetaClassifier meta_sulq;
};

struct MlpSeedResult {
  std::uint64_t seed = 0;
  bool identity = false;
  bool distinct_codes = false;
  double initial_error = 0.0;
  double final_error = 0.0;
  std::vector<Vector> hidden;  // per input pattern
};

struct MlpDemoOutcome {
  std::vector<MlpSeedResult> seeds;
  std::size_t passing = 0;
  Mlp first_net;
};

SpeechOutcome RunSpeechCase(const PipelineConfig& cfg, const LogFn& log = {});
NetflowOutcome RunNetflowCase(const PipelineConfig& cfg, const LogFn& log = {});
DpBypassOutcome RunDpBypassCase(const PipelineConfig& cfg, const LogFn& log = {});
MlpDemoOutcome RunMlpDemoCase(const PipelineConfig& cfg, const LogFn& log = {});

std::string SpeechReport(const PipelineConfig& cfg, const SpeechOutcome& o);
std::string NetflowReport(const PipelineConfig& cfg, const NetflowOutcome& o);
std::string DpBypassReportJson(const PipelineConfig& cfg, const DpBypassOutcome& o);
std::string MlpDemoReport(const PipelineConfig& cfg, const MlpDemoOutcome& o);

// CSV with header x,y,arm,run.
std::string ScatterCsv(const std::vector<CentroidRow>& rows, const std::string& arm);

struct PipelineResult {
  bool ok = false;
  std::string error;
  std::vector<std::filesystem::path> files;
};

// Runs the configured case and writes report.json plus case artifacts into
// cfg.out_dir. On failure a partial report with the error is still written.
PipelineResult RunPipeline(const PipelineConfig& cfg, const LogFn& log = {});

// Identity patterns for an n-h-n network with the given target encoding.
std::vector<TrainingPair> IdentityPatterns(std::size_t n, double low, double high);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_PIPELINE_H_
