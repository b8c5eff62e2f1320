#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mb2d/blur.hpp"
#include "mb2d/models/checkpoint.hpp"
#include "mb2d/models/mbrnn.hpp"
#include "mb2d/models/msdr.hpp"
#include "mb2d/models/onestage.hpp"
#include "mb2d/training/adam.hpp"

namespace mb2d::training {

enum class Stage { mbrnn, msdr, onestage };
std::string stage_name(Stage s);
Stage parse_stage(const std::string& s);

struct TrainConfig {
  Stage stage = Stage::mbrnn;
  AdamParams adam;
  int batch_size = 4;
  std::int64_t iterations = 20000;
  int crop_size = 64;
  bool flip_h = true;
  bool flip_v = true;
  bool rot90 = true;
  std::uint64_t seed = 0;
  /// MBRNN weights stay fixed while the MSDR trains; otherwise both are
  /// optimised on the sum of their losses.
  bool freeze_mbrnn = true;
  std::int64_t checkpoint_every = 0;  // 0 disables intermediate checkpoints
  std::int64_t validate_every = 0;    // 0 validates at the last step only
  int val_samples = 8;
  models::MbrnnConfig mbrnn;
  models::MsdrConfig msdr;
  models::OneStageConfig onestage;

  /// Spatial multiple the crop must honour for the active stage.
  int spatial_multiple() const;
  /// `max_displacement` is the largest blur extent in pixels, or 0 when unknown.
  void validate(double max_displacement = 0.0) const;
};

struct ValPoint {
  std::int64_t step = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct TrainRun {
  std::vector<double> losses;
  std::vector<double> step_seconds;
  std::vector<ValPoint> validation;
  models::ModelState model;
  /// MBRNN state after training (updated when not frozen).
  std::optional<models::ModelState> mbrnn;
};

/// Trains one stage. With a non-empty `out_dir` writes metrics.csv,
/// timing.csv, config.json, model/ and checkpoints/step_N/.
/// `mbrnn` is required for MSDR configurations that consume its outputs.
TrainRun train_stage(const TrainConfig& config, const Dataset& data, const std::filesystem::path& out_dir = {},
                     const models::ModelState* mbrnn = nullptr);

/// Deterministic initial weights for a stage.
models::ModelState initial_state(const TrainConfig& config);

void to_json(nlohmann::json& j, const AdamParams& a);
void from_json(const nlohmann::json& j, AdamParams& a);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace mb2d::training
