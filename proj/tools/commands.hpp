#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chfb/pipeline.hpp"

namespace chfb {

enum ExitCode : int { kExitOk = 0, kExitPartial = 1, kExitConfig = 2 };

/// Reads a TOML config: [section] key = value, mapped onto "section.key".
/// Throws Config for unknown keys and malformed values.
void load_config_file(PipelineConfig& cfg, const std::filesystem::path& path);

int cmd_process(const PipelineConfig& cfg);
int cmd_train(const PipelineConfig& cfg);
int cmd_eval(const PipelineConfig& cfg);
int cmd_analyze(const PipelineConfig& cfg);
int cmd_cluster(const PipelineConfig& cfg);
int cmd_synth(const PipelineConfig& cfg);
int cmd_serve(const PipelineConfig& cfg);

int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace chfb
