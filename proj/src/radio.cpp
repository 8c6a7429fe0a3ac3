#include "commrad/radio.hpp"

#include <algorithm>
#include <string>

namespace commrad {

void RadioConfig::validate() const {
  if (!(carrier_freq > 0)) throw ConfigError("radio.carrier_freq: must be > 0");
  if (n_antennas < 1) throw ConfigError("radio.n_antennas: must be >= 1");
  if (codebook_size < 2) throw ConfigError("radio.codebook_size: must be >= 2");
  if (!(fov_deg > 0 && fov_deg < 90)) throw ConfigError("radio.fov_deg: must lie in (0, 90)");
  if (!(symbol_duration > 0)) throw ConfigError("radio.symbol_duration: must be > 0");
  if (n_subcarriers < 8) throw ConfigError("radio.n_subcarriers: must be >= 8");
  if (!(subcarrier_spacing > 0)) throw ConfigError("radio.subcarrier_spacing: must be > 0");
  if (!(comm_bandwidth > 0)) throw ConfigError("radio.comm_bandwidth: must be > 0");
  if (!(feedback_duration >= 0)) throw ConfigError("radio.feedback_duration: must be >= 0");
}

double RadioConfig::codebook_angle(int beam) const {
  if (beam < 0 || beam >= codebook_size) throw OutOfRangeError("beam index " + std::to_string(beam));
  return -fov_deg + 2.0 * fov_deg * beam / (codebook_size - 1);
}

int RadioConfig::nearest_beam(double angle_deg) const {
  const double step = 2.0 * fov_deg / (codebook_size - 1);
  const long b = std::lround((std::clamp(angle_deg, -fov_deg, fov_deg) + fov_deg) / step);
  return static_cast<int>(std::clamp<long>(b, 0, codebook_size - 1));
}

double RadioConfig::subcarrier_noise_dbm() const {
  return noise_power_dbm - linear_to_db(comm_bandwidth / subcarrier_spacing);
}

std::complex<double> steered_response(int n_antennas, double steer_deg, double phi_deg) {
  const double ds = std::sin(deg2rad(steer_deg)) - std::sin(deg2rad(phi_deg));
  std::complex<double> acc = 0.0;
  for (int n = 0; n < n_antennas; ++n) acc += std::polar(1.0, kPi * n * ds);
  return acc / std::sqrt(static_cast<double>(n_antennas));
}

std::complex<double> beam_response(const RadioConfig& cfg, int beam, double phi_deg) {
  return steered_response(cfg.n_antennas, cfg.codebook_angle(beam), phi_deg);
}

double steered_gain(int n_antennas, double steer_deg, double phi_deg) {
  return std::abs(steered_response(n_antennas, steer_deg, phi_deg));
}

double beam_gain(const RadioConfig& cfg, int beam, double phi_deg) {
  return std::abs(beam_response(cfg, beam, phi_deg));
}

const UserScan& BeamScanReport::user(int user_id) const {
  for (const auto& u : users) {
    if (u.user_id == user_id) return u;
  }
  throw NotFoundError("beam scan report has no user " + std::to_string(user_id));
}

UserScan synthesize_user_scan(int user_id, const std::vector<Path>& paths, const RadioConfig& cfg,
                              std::mt19937_64* rng) {
  const int nb = cfg.codebook_size;
  const int nk = cfg.n_subcarriers;
  const double amp_tx = std::sqrt(db_to_linear(cfg.tx_power_dbm));

  UserScan scan;
  scan.user_id = user_id;
  scan.csi = Eigen::MatrixXcd::Zero(nb, nk);
  for (const auto& p : paths) {
    const std::complex<double> g = amp_tx * p.effective_gain();
    // Carrier phase already lives in the path gain; only the subcarrier
    // offset rotates across k.
    const std::complex<double> step = std::polar(1.0, -2.0 * kPi * cfg.subcarrier_spacing * p.tof);
    for (int b = 0; b < nb; ++b) {
      std::complex<double> v = g * beam_response(cfg, b, p.departure_angle_deg);
      for (int k = 0; k < nk; ++k) {
        scan.csi(b, k) += v;
        v *= step;
      }
    }
  }
  if (rng) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(db_to_linear(cfg.subcarrier_noise_dbm()) / 2.0));
    for (int b = 0; b < nb; ++b) {
      for (int k = 0; k < nk; ++k) {
        const double re = gauss(*rng);
        const double im = gauss(*rng);
        scan.csi(b, k) += std::complex<double>(re, im);
      }
    }
  }
  scan.rss_dbm.resize(nb);
  for (int b = 0; b < nb; ++b) {
    const double p = scan.csi.row(b).squaredNorm() / nk;
    scan.rss_dbm[b] = p > 0 ? linear_to_db(p) : kRssFloorDbm;
  }
  return scan;
}

BeamScanReport run_beam_scan(const SceneSnapshot& snap, const RadioConfig& cfg, std::mt19937_64& rng,
                             ScanOptions opts) {
  BeamScanReport report;
  report.timestamp = snap.t;
  for (const auto& u : snap.users) {
    const auto paths = compute_paths(snap, u.user_id, cfg.carrier_freq);
    report.users.push_back(synthesize_user_scan(u.user_id, paths, cfg, opts.noiseless ? nullptr : &rng));
  }
  return report;
}

double scan_duration(const RadioConfig& cfg) { return cfg.codebook_size * cfg.symbol_duration; }

}  // namespace commrad
