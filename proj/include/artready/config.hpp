#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "artready/refine.hpp"

namespace artready {

struct RunConfig {
  PipelineConfig pipeline;
  RewardWeights reward;
  int workers = 1;
};

/// Applies a TOML-like document ([section] headers, key = value lines, #
/// comments; values are numbers, true/false or quoted strings) on top of
/// `base`. Unknown sections or keys and malformed values raise Error(Config)
/// with the line number as location.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// The effective configuration in the same format.
std::string dump_config(const RunConfig& cfg);

/// Manifest: JSON array of {id, urdf, semantics?, guidance?, reference_scale?,
/// reference_state?, prompt_alignment?}; relative paths resolve against the
/// manifest's directory.
std::vector<AssetJob> load_manifest(const std::filesystem::path& path);

}  // namespace artready
