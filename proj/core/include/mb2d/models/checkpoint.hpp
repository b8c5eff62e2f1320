#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mb2d/models/unet.hpp"

namespace mb2d::models {

enum class Role { mbrnn, msdr, onestage };

std::string role_name(Role r);
Role parse_role(const std::string& s);

/// Serializable snapshot of one trained network.
struct ModelState {
  Role role = Role::mbrnn;
  /// Role-specific config (MbrnnConfig, MsdrConfig or OneStageConfig JSON).
  nlohmann::json config;
  UNetSpec spec;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  nlohmann::json metric_history = nlohmann::json::array();
  std::vector<nn::Tensor<float>> weights;

  std::int64_t parameter_count() const;
};

ModelState capture(Role role, nlohmann::json config, const UNetSpec& spec,
                   std::span<const nn::Var<float>> params);
/// Copies weights into live parameters; shapes must match exactly.
void restore(const ModelState& state, std::span<const nn::Var<float>> params);

/// `dir/model.bin` (raw weights) and `dir/model.json` (manifest). Both files
/// are written to a temporary name first and renamed into place.
void save_checkpoint(const std::filesystem::path& dir, const ModelState& state);
ModelState load_checkpoint(const std::filesystem::path& dir);

/// Learned scalars in millions.
double count_params(const ModelState& state);

void to_json(nlohmann::json& j, const UNetSpec& s);
void from_json(const nlohmann::json& j, UNetSpec& s);

}  // namespace mb2d::models
