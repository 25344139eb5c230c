// shadowprobe: property inference attacks against trained classifiers.

#include <cstdlib>
#include <iostream>
#include <string>

#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "commands.h"
#include "shadowprobe/error.h"

namespace {

void SetUpLogging() {
  auto logger = spdlog::stderr_color_mt("shadowprobe");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("SHADOWPROBE_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

void AddCommonFlags(CLI::App* app, shadowprobe::tools::CommonFlags& f) {
  app->add_option("--config", f.config, "Pipeline config (JSON)");
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--case", f.case_name, "speech, netflow, dp_bypass or mlp_demo");
  app->add_option("--shadows", f.shadows,
                  "Shadow count (training sets per property for dp_bypass)");
  app->add_option("--top-k", f.top_k, "Phonemes kept by the divergence filter");
  app->add_option("--sigma", f.sigma, "SuLQ noise standard deviation");
  app->add_option("--jobs", f.jobs, "Worker threads for shadow training");
}

}  // namespace

int main(int argc, char** argv) {
  SetUpLogging();
  namespace tools = shadowprobe::tools;
  CLI::App app{"Property inference against trained classifiers"};
  app.require_subcommand(1);
  tools::CommonFlags flags;

  auto* run = app.add_subcommand("run", "Run a full case-study pipeline");
  AddCommonFlags(run, flags);
  auto* generate = app.add_subcommand("generate", "Write shadow datasets as CSV");
  AddCommonFlags(generate, flags);
  auto* train = app.add_subcommand("train", "Train and save shadow models");
  AddCommonFlags(train, flags);

  auto* attack = app.add_subcommand("attack", "Train a meta-classifier on saved shadows");
  AddCommonFlags(attack, flags);
  std::filesystem::path models_dir;
  std::optional<std::filesystem::path> target;
  attack->add_option("--models", models_dir, "Directory written by 'train'")->required();
  attack->add_option("--target", target, "Model to judge");

  auto* filter = app.add_subcommand("filter", "Rank phonemes by divergence");
  AddCommonFlags(filter, flags);
  std::filesystem::path reference, baselines;
  filter->add_option("--reference", reference, "Acoustic model trained with the property")
      ->required();
  filter->add_option("--baselines", baselines, "Directory of baseline acoustic models")
      ->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score a meta-classifier on saved models");
  AddCommonFlags(evaluate, flags);
  std::filesystem::path meta, eval_models;
  evaluate->add_option("--meta", meta, "Serialized meta-classifier")->required();
  evaluate->add_option("--models", eval_models, "Directory written by 'train'")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return tools::RunCommand(flags);
    if (*generate) return tools::GenerateCommand(flags);
    if (*train) return tools::TrainCommand(flags);
    if (*attack) return tools::AttackCommand(flags, models_dir, target);
    if (*filter) return tools::FilterCommand(flags, reference, baselines);
    if (*evaluate) return tools::EvaluateCommand(flags, meta, eval_models);
  } catch (const shadowprobe::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
