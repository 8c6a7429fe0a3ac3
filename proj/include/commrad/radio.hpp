#pragma once

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "commrad/scene.hpp"

namespace commrad {

struct RadioConfig {
  double carrier_freq = 28e9;
  int n_antennas = 8;
  int codebook_size = 121;
  double fov_deg = 60.0;
  double symbol_duration = 12.5e-6;
  int n_subcarriers = 64;
  double subcarrier_spacing = 480e3;
  double comm_bandwidth = 400e6;
  double tx_power_dbm = 5.0;
  double noise_power_dbm = -81.0;  // over comm_bandwidth
  double feedback_duration = 0.9e-3;  // per recalibration

  friend bool operator==(const RadioConfig&, const RadioConfig&) = default;

  void validate() const;
  double wavelength() const { return kSpeedOfLight / carrier_freq; }
  /// Steering direction of codebook entry b; uniform in angle across the field of view.
  double codebook_angle(int beam) const;
  /// Nearest codebook entry to an angle (clamped to the field of view).
  int nearest_beam(double angle_deg) const;
  /// Noise power of one subcarrier CSI sample, scaled from the link noise.
  double subcarrier_noise_dbm() const;
};

/// Complex response of codebook beam b to a plane wave from phi:
/// a(phi_b)^H a(phi) / sqrt(N). Magnitude is sqrt(N) when aligned.
std::complex<double> beam_response(const RadioConfig& cfg, int beam, double phi_deg);
std::complex<double> steered_response(int n_antennas, double steer_deg, double phi_deg);

/// Array-factor magnitude |a(phi_beam)^H a(phi)| / sqrt(N).
double beam_gain(const RadioConfig& cfg, int beam, double phi_deg);
double steered_gain(int n_antennas, double steer_deg, double phi_deg);

inline constexpr double kRssFloorDbm = -300.0;

struct UserScan {
  int user_id = 0;
  std::vector<double> rss_dbm;  // [codebook_size]
  Eigen::MatrixXcd csi;         // [codebook_size x n_subcarriers], sqrt(mW)
};

struct BeamScanReport {
  double timestamp = 0.0;
  std::vector<UserScan> users;

  const UserScan& user(int user_id) const;
};

struct ScanOptions {
  bool noiseless = false;
};

/// One sweep of the codebook; every user in the snapshot reports CSI and RSS.
BeamScanReport run_beam_scan(const SceneSnapshot& snapshot, const RadioConfig& cfg, std::mt19937_64& rng,
                             ScanOptions opts = {});

/// CSI of one user from an explicit path list (used by run_beam_scan).
UserScan synthesize_user_scan(int user_id, const std::vector<Path>& paths, const RadioConfig& cfg,
                              std::mt19937_64* rng);

double scan_duration(const RadioConfig& cfg);

}  // namespace commrad
