#pragma once

#include <filesystem>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "commrad/scene.hpp"

namespace commrad {

struct RadarConfig {
  double carrier_freq = 24e9;
  double bandwidth = 200e6;
  int samples_per_chirp = 1000;
  double chirp_slope = 2e12;  // Hz/s
  double ramp_time = 100e-6;
  double chirp_duration = 200e-6;
  int chirps_per_frame = 200;
  double frame_period = 200e-3;
  int n_tx = 2;
  int n_rx = 8;
  double noise_floor_dbm = -100.0;      // per raw sample
  double reference_power_dbm = -64.0;   // echo of a 1 m^2 scatterer at 1 m, per raw sample
  Point2 mount_offset{0.15, 0.0};
  double velocity_resolution = 0.75;    // carried as a constant, m/s
  int map_range_bins = 40;              // range bins kept in the range-angle map
  double angle_step_deg = 0.5;
  double fov_deg = 60.0;

  friend bool operator==(const RadarConfig&, const RadarConfig&) = default;

  int virtual_antennas() const { return n_tx * n_rx; }
  double wavelength() const { return kSpeedOfLight / carrier_freq; }
  void validate() const;
};

struct ResolutionParams {
  double range_res = 0.0;
  double max_range = 0.0;
  double angle_res_deg = 0.0;
  double velocity_res = 0.0;
};

ResolutionParams resolution_params(const RadarConfig& cfg);

/// One effective radar observation: beat samples per virtual antenna.
struct RadarFrame {
  double timestamp = 0.0;
  Eigen::MatrixXcd raw;  // [virtual antennas x samples_per_chirp]
};

/// Range-angle image in the radar frame. `response` keeps the complex
/// beamformed image so static returns can be cancelled coherently.
struct RangeAngleMap {
  double timestamp = 0.0;
  Eigen::MatrixXd power_db;     // [range bins x angle bins]
  Eigen::MatrixXcd response;    // same shape, sqrt(mW) units
  std::vector<double> range_axis;  // m
  std::vector<double> angle_axis;  // deg
  Point2 origin;                   // radar position in the base-station frame
  double noise_floor_db = 0.0;     // expected per-cell noise power

  int range_bins() const { return static_cast<int>(range_axis.size()); }
  int angle_bins() const { return static_cast<int>(angle_axis.size()); }
  /// Base-station-frame position of a (fractional) cell.
  Point2 cell_position(double range, double angle_deg) const { return polar_to_point(origin, range, angle_deg); }
};

inline constexpr double kMapFloorDb = -300.0;

RadarFrame synthesize_frame(const SceneSnapshot& snapshot, const RadarConfig& cfg, std::mt19937_64& rng);

RangeAngleMap range_angle_map(const RadarFrame& frame, const RadarConfig& cfg);

/// Rebuild power_db from `response` (after the complex image was edited).
void refresh_power(RangeAngleMap& map);

/// Local maximum of a map with sub-cell refinement.
struct MapPeak {
  int range_bin = 0;
  int angle_bin = 0;
  double range = 0.0;
  double angle_deg = 0.0;
  double power_db = 0.0;
  Point2 position;  // base-station frame
};

/// Quadratic (in dB) interpolation around a cell.
MapPeak refine_peak(const RangeAngleMap& map, int range_bin, int angle_bin);

/// All 8-neighbour local maxima above `threshold_db`, strongest first.
std::vector<MapPeak> find_peaks(const RangeAngleMap& map, double threshold_db);

// Frame dump: little-endian header {uint32 n_ant, uint32 n_range, float64 timestamp}
// followed by n_ant*n_range complex64 (float32 re, float32 im), antenna-major.
void write_frame_dump(const std::filesystem::path& path, const RadarFrame& frame);
RadarFrame read_frame_dump(const std::filesystem::path& path);

}  // namespace commrad
