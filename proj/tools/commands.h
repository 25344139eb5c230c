#ifndef SHADOWPROBE_TOOLS_COMMANDS_H_
#define SHADOWPROBE_TOOLS_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "shadowprobe/pipeline.h"

namespace shadowprobe::tools {

// Flag values; set flags override the config file.
struct CommonFlags {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> case_name;
  std::optional<std::size_t> shadows;
  std::optional<std::size_t> top_k;
  std::optional<double> sigma;
  std::optional<std::size_t> jobs;
};

PipelineConfig ResolveConfig(const CommonFlags& flags);

int RunCommand(const CommonFlags& flags);
int GenerateCommand(const CommonFlags& flags);
int TrainCommand(const CommonFlags& flags);
int AttackCommand(const CommonFlags& flags, const std::filesystem::path& models,
                  const std::optional<std::filesystem::path>& target);
int FilterCommand(const CommonFlags& flags, const std::filesystem::path& reference,
                  const std::filesystem::path& baselines);
int EvaluateCommand(const CommonFlags& flags, const std::filesystem::path& meta,
                    const std::filesystem::path& models);

}  // namespace shadowprobe::tools

#endif  // SHADOWPROBE_TOOLS_COMMANDS_H_
