#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mb2d/blur.hpp"
#include "mb2d/training/train.hpp"

namespace mb2d::experiments {

enum class ExperimentId { ideal_multiblur, ablation_nif_crfm, mbrnn_frames, spectral };
std::string experiment_name(ExperimentId id);
ExperimentId parse_experiment(const std::string& s);

struct ExperimentSettings {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  /// Test samples used for evaluation; 0 means all.
  int eval_samples = 0;
  /// Largest ideal input set (Set k holds B^n ... B^{n+2(k-1)}).
  int max_ideal_set = 5;

  bool operator==(const ExperimentSettings&) const = default;
};

/// One arm: dotted TrainConfig keys and their values.
struct Arm {
  std::string name;
  nlohmann::json delta = nlohmann::json::object();
};

struct ExperimentPlan {
  ExperimentId id = ExperimentId::spectral;
  DatasetSpec dataset;
  training::TrainConfig train;
  std::vector<Arm> arms;
  /// Keys the experiment is allowed to vary between arms.
  std::vector<std::string> varied_keys;
  std::vector<std::uint64_t> seeds;
  int eval_samples = 0;

  /// The template with the arm delta and seed applied.
  training::TrainConfig arm_config(const Arm& arm, std::uint64_t seed) const;
  /// Keys declared by any arm delta.
  std::vector<std::string> delta_keys() const;
  void validate() const;
};

ExperimentPlan make_plan(ExperimentId id, const DatasetSpec& dataset, const training::TrainConfig& train,
                         const ExperimentSettings& settings);

/// Throws ConfigError when an arm sets, or two arms differ in, a key outside
/// plan.varied_keys.
void check_arm_isolation(const ExperimentPlan& plan);

struct ArmRun {
  std::string arm;
  std::uint64_t seed = 0;
  std::map<std::string, double> values;
};

struct ExperimentResult {
  ExperimentId id = ExperimentId::spectral;
  std::vector<std::string> arms;
  std::vector<std::string> metrics;
  std::vector<ArmRun> runs;
  nlohmann::json notes = nlohmann::json::object();

  std::vector<double> values(const std::string& arm, const std::string& metric) const;
  double mean(const std::string& arm, const std::string& metric) const;
};

/// Each writes per-arm, per-seed subdirectories under `out` when non-empty.
ExperimentResult run_ideal_multiblur(const ExperimentPlan& plan, const Dataset& data, const std::filesystem::path& out);
ExperimentResult run_ablation_nif_crfm(const ExperimentPlan& plan, const Dataset& data,
                                       const std::filesystem::path& out);
ExperimentResult run_mbrnn_frames(const ExperimentPlan& plan, const Dataset& data, const std::filesystem::path& out);
ExperimentResult run_spectral(const ExperimentPlan& plan, const Dataset& data, const std::filesystem::path& out);

/// Synthesises the dataset, runs the plan and writes plan.json, result.json,
/// summary.csv and summary.txt under `out`.
ExperimentResult run_experiment(const ExperimentPlan& plan, const std::filesystem::path& out);

std::string summary_csv(const ExperimentResult& r);
/// Aligned plain-text table: one row per arm, means over seeds.
std::string summary_table(const ExperimentResult& r);
void write_summary(const std::filesystem::path& dir, const ExperimentResult& r);

void to_json(nlohmann::json& j, const ExperimentSettings& s);
void from_json(const nlohmann::json& j, ExperimentSettings& s);
void to_json(nlohmann::json& j, const ExperimentPlan& p);
void to_json(nlohmann::json& j, const ExperimentResult& r);

}  // namespace mb2d::experiments
