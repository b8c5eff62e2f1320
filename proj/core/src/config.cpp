#include "mb2d/config.hpp"

#include <fstream>

#include "mb2d/errors.hpp"
#include "mb2d/json_path.hpp"

namespace mb2d {

double RunConfig::max_displacement() const {
  return dataset.scene.static_scene ? 0.0 : dataset.scene.max_speed * (dataset.blur.max_exposure() - 1);
}

void RunConfig::validate() const {
  dataset.blur.validate();
  if (dataset.train_sequences < 0 || dataset.test_sequences < 0)
    throw ConfigError("dataset sequence counts must be >= 0");
  if (dataset.scene.num_frames < dataset.blur.min_sequence_length())
    throw ConfigError("dataset.scene.num_frames " + std::to_string(dataset.scene.num_frames) + " is below the " +
                      std::to_string(dataset.blur.min_sequence_length()) + " frames the blur settings need");
  train.validate(max_displacement());
}

nlohmann::json default_config_json() { return RunConfig{}; }

RunConfig parse_config(const nlohmann::json& doc, const std::vector<std::string>& overrides) {
  nlohmann::json j = default_config_json();
  merge_strict(j, doc);
  for (const auto& o : overrides) {
    const auto [key, value] = parse_assignment(o);
    set_path(j, key, value);
  }
  try {
    return j.get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  nlohmann::json doc = nlohmann::json::object();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    doc = nlohmann::json::parse(in, nullptr, false, true);
    if (doc.is_discarded()) throw ConfigError("config file " + file.string() + " is not valid JSON");
  }
  return parse_config(doc, overrides);
}

void write_resolved(const std::filesystem::path& dir, const RunConfig& config) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "config.resolved.json") << nlohmann::json(config).dump(2) << "\n";
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"dataset", c.dataset}, {"train", c.train}, {"experiment", c.experiment}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  c.dataset = j.at("dataset").get<DatasetSpec>();
  c.train = j.at("train").get<training::TrainConfig>();
  c.experiment = j.at("experiment").get<experiments::ExperimentSettings>();
}

}  // namespace mb2d
