#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "jm/model.hpp"

namespace jm {

struct SimConfig {
  double t = 1.0;
  double M = 8.0;
  double h_max = 0.0;  // 0 selects 1e-3 t
  int jet_order = 2;
  std::uint64_t seed = 1;
  std::vector<double> x0;                // empty: origin
  std::optional<double> variance;        // overrides U_M(t)
  bool differentiate_ghosts = false;     // keep ghost amplitudes as jet variables

  double step() const { return h_max > 0.0 ? h_max : 1e-3 * t; }
};

struct ModelConfig {
  std::string preset;
  int d = 1;
  nlohmann::json params = nlohmann::json::object();
  SimConfig sim;
  std::shared_ptr<const JumpModel> model;
};

std::vector<std::string> preset_names();

// Throws ConfigError for unknown presets, unknown parameters or bad values.
std::shared_ptr<const JumpModel> make_preset(const std::string& name, int d, const nlohmann::json& params);

// Preset defaults: M, t, h_max and jet order tuned per model.
ModelConfig default_config(const std::string& preset, int d = 1);

// {d, t, M, h_max, jet_order, seed, x0, variance, differentiate_ghosts,
//  coefficients: {preset, params}} or coefficients: "<preset>".
ModelConfig load_config(const nlohmann::json& doc);
ModelConfig load_config_file(const std::string& path);
nlohmann::json to_json(const ModelConfig& cfg);

// Rebuilds cfg.model after preset, d or params changed.
void rebuild_model(ModelConfig& cfg);

}  // namespace jm
