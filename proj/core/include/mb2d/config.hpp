#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mb2d/blur.hpp"
#include "mb2d/experiments.hpp"
#include "mb2d/training/train.hpp"

namespace mb2d {

/// Everything one CLI invocation needs. Sections: "dataset" (scene and blur),
/// "train" and "experiment".
struct RunConfig {
  DatasetSpec dataset;
  training::TrainConfig train;
  experiments::ExperimentSettings experiment;

  /// Largest blur extent in pixels for the configured scenes.
  double max_displacement() const;
  void validate() const;
};

nlohmann::json default_config_json();

/// Defaults, then the file (if any), then `key=value` overrides. Unknown keys
/// and type mismatches raise ConfigError.
RunConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides = {});
RunConfig parse_config(const nlohmann::json& doc, const std::vector<std::string>& overrides = {});

/// `dir/config.resolved.json`.
void write_resolved(const std::filesystem::path& dir, const RunConfig& config);

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

}  // namespace mb2d
