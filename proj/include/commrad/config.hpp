#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "commrad/blockage.hpp"
#include "commrad/context.hpp"
#include "commrad/link.hpp"
#include "commrad/radar.hpp"
#include "commrad/radio.hpp"
#include "commrad/scene.hpp"
#include "commrad/tracking.hpp"

namespace commrad {

struct ExperimentConfig {
  Scene scene;
  std::string scene_generator;  // built-in generator that produced `scene`, empty for explicit scenes
  RadarConfig radar;
  RadioConfig radio;
  TrackerConfig tracker = TrackerConfig::for_radar(RadarConfig{});
  ContextConfig context;
  BlockageConfig blockage;
  double blocker_length = 0.5;  // m, blocker size assumed by the predictor
  double min_blocker_speed = 0.2;  // m/s, slower object tracks are ignored
  int min_blocker_hits = 3;        // radar updates before an object track is trusted
  std::vector<Strategy> strategies = all_strategies();
  double recal_period = 0.5;  // s
  double timestep = 0.01;     // s
  std::string output_dir = "out";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  int n_steps() const;
  int steps_per_frame() const;
  int steps_per_recal() const;

  /// Same experiment with a different seed; generated scenes are rebuilt.
  ExperimentConfig with_seed(std::uint64_t seed) const;
};

/// JSON text of a config. Generated scenes are written as {generator, seed}.
std::string serialize_config(const ExperimentConfig& cfg);

/// Parse JSON text. Missing fields take defaults; unknown fields, wrong types
/// and invalid values raise ConfigError with the field path.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace commrad
