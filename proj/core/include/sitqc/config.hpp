#pragma once

#include <filesystem>
#include <string>

#include "sitqc/scoring.hpp"

namespace sitqc {

/// JSON config file for the CLI. Schema-versioned; unknown keys are
/// rejected so typos never silently fall back to defaults. Serialization is
/// lossless: load(save(cfg)) == cfg.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
void save_pipeline_config(const PipelineConfig& cfg, const std::filesystem::path& path);

std::string pipeline_config_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const std::string& text);

bool operator==(const SpectralEmbedConfig& a, const SpectralEmbedConfig& b);
bool operator==(const IforestParams& a, const IforestParams& b);
bool operator==(const OcsvmParams& a, const OcsvmParams& b);
bool operator==(const PipelineConfig& a, const PipelineConfig& b);

}  // namespace sitqc
