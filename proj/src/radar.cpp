#include "commrad/radar.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iostream>

#include <unsupported/Eigen/FFT>

namespace commrad {

void RadarConfig::validate() const {
  if (!(bandwidth > 0)) throw ConfigError("radar.bandwidth: must be > 0");
  if (!(carrier_freq > 0)) throw ConfigError("radar.carrier_freq: must be > 0");
  if (samples_per_chirp < 8) throw ConfigError("radar.samples_per_chirp: must be >= 8");
  if (n_tx < 1 || n_rx < 1) throw ConfigError("radar.n_tx/n_rx: must be >= 1");
  if (chirps_per_frame < 1) throw ConfigError("radar.chirps_per_frame: must be >= 1");
  if (!(frame_period >= chirps_per_frame * chirp_duration))
    throw ConfigError("radar.frame_period: must cover chirps_per_frame * chirp_duration");
  if (map_range_bins < 3 || map_range_bins > samples_per_chirp)
    throw ConfigError("radar.map_range_bins: must lie in [3, samples_per_chirp]");
  if (!(angle_step_deg > 0)) throw ConfigError("radar.angle_step_deg: must be > 0");
  if (!(fov_deg > 0 && fov_deg < 90)) throw ConfigError("radar.fov_deg: must lie in (0, 90)");
}

ResolutionParams resolution_params(const RadarConfig& cfg) {
  ResolutionParams p;
  p.range_res = kSpeedOfLight / (2.0 * cfg.bandwidth);
  p.max_range = p.range_res * cfg.samples_per_chirp;
  p.angle_res_deg = rad2deg(2.0 / cfg.virtual_antennas());
  p.velocity_res = cfg.velocity_resolution;
  return p;
}

namespace {

struct Scatterer {
  Point2 pos;
  double rcs;
};

void add_tone(Eigen::MatrixXcd& raw, double bin, double angle_deg, std::complex<double> amp) {
  const int n_ant = static_cast<int>(raw.rows());
  const int n = static_cast<int>(raw.cols());
  const double s = std::sin(deg2rad(angle_deg));
  const std::complex<double> ant_step = std::polar(1.0, -kPi * s);
  const std::complex<double> sample_step = std::polar(1.0, 2.0 * kPi * bin / n);
  std::complex<double> ant_phase = amp;
  for (int m = 0; m < n_ant; ++m) {
    // Re-anchor the recurrence every 64 samples to bound drift.
    for (int base = 0; base < n; base += 64) {
      std::complex<double> v = ant_phase * std::polar(1.0, 2.0 * kPi * bin * base / n);
      const int end = std::min(n, base + 64);
      for (int k = base; k < end; ++k) {
        raw(m, k) += v;
        v *= sample_step;
      }
    }
    ant_phase *= ant_step;
  }
}

std::vector<double> hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  return w;
}

}  // namespace

RadarFrame synthesize_frame(const SceneSnapshot& snap, const RadarConfig& cfg, std::mt19937_64& rng) {
  const int n_ant = cfg.virtual_antennas();
  const int n = cfg.samples_per_chirp;
  const auto res = resolution_params(cfg);
  const Point2 origin = snap.base_station + cfg.mount_offset;
  const double lambda = cfg.wavelength();
  const double p_ref = db_to_linear(cfg.reference_power_dbm);

  std::vector<Scatterer> scatterers;
  for (const auto& u : snap.users) scatterers.push_back({u.pos, u.rcs});
  for (const auto& b : snap.blockers) scatterers.push_back({b.pos, b.rcs});
  for (const auto& c : snap.static_clutter) scatterers.push_back({c.pos, c.rcs});

  RadarFrame frame;
  frame.timestamp = snap.t;
  frame.raw = Eigen::MatrixXcd::Zero(n_ant, n);
  for (const auto& sc : scatterers) {
    const double r = distance(origin, sc.pos);
    if (!(r > 0) || r >= res.max_range) {
      std::clog << "radar: dropping scatterer at range " << r << " m (beyond max range)\n";
      continue;
    }
    const double amp = std::sqrt(p_ref * sc.rcs) / (r * r);
    const double phase = -4.0 * kPi * std::fmod(r / lambda, 1.0);
    add_tone(frame.raw, r / res.range_res, bearing_deg(origin, sc.pos), std::polar(amp, phase));
  }

  const double sigma = std::sqrt(db_to_linear(cfg.noise_floor_dbm) / 2.0);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (int m = 0; m < n_ant; ++m) {
    for (int k = 0; k < n; ++k) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      frame.raw(m, k) += std::complex<double>(re, im);
    }
  }
  return frame;
}

void refresh_power(RangeAngleMap& map) {
  map.power_db.resize(map.response.rows(), map.response.cols());
  for (Eigen::Index i = 0; i < map.response.rows(); ++i) {
    for (Eigen::Index j = 0; j < map.response.cols(); ++j) {
      const double p = std::norm(map.response(i, j));
      map.power_db(i, j) = p > 0 ? std::max(kMapFloorDb, linear_to_db(p)) : kMapFloorDb;
    }
  }
}

RangeAngleMap range_angle_map(const RadarFrame& frame, const RadarConfig& cfg) {
  const int n_ant = cfg.virtual_antennas();
  const int n = cfg.samples_per_chirp;
  if (frame.raw.rows() != n_ant || frame.raw.cols() != n)
    throw ConfigError("range_angle_map: frame dimensions do not match radar config");
  const auto res = resolution_params(cfg);
  const int n_range = cfg.map_range_bins;

  RangeAngleMap map;
  map.timestamp = frame.timestamp;
  map.origin = cfg.mount_offset;
  map.noise_floor_db = cfg.noise_floor_dbm;
  for (int k = 0; k < n_range; ++k) map.range_axis.push_back(k * res.range_res);
  const int n_angle = static_cast<int>(std::lround(2.0 * cfg.fov_deg / cfg.angle_step_deg)) + 1;
  for (int a = 0; a < n_angle; ++a) map.angle_axis.push_back(-cfg.fov_deg + a * cfg.angle_step_deg);

  // Range processing: windowed DFT along fast time, normalised so white noise
  // keeps its per-sample power.
  const auto w = hann(n);
  double w2 = 0.0;
  for (double v : w) w2 += v * v;
  const double range_norm = 1.0 / std::sqrt(w2);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(n), out(n);
  Eigen::MatrixXcd range_profile(n_ant, n_range);
  for (int m = 0; m < n_ant; ++m) {
    for (int k = 0; k < n; ++k) in[k] = frame.raw(m, k) * w[k];
    fft.fwd(out, in);
    for (int k = 0; k < n_range; ++k) range_profile(m, k) = out[k] * range_norm;
  }

  // Angle processing: DFT across the virtual array evaluated on the angle grid.
  Eigen::MatrixXcd steer(n_ant, n_angle);
  const double ant_norm = 1.0 / std::sqrt(static_cast<double>(n_ant));
  for (int a = 0; a < n_angle; ++a) {
    const double s = std::sin(deg2rad(map.angle_axis[a]));
    for (int m = 0; m < n_ant; ++m) steer(m, a) = std::polar(ant_norm, kPi * m * s);
  }
  map.response = range_profile.transpose() * steer;
  refresh_power(map);
  return map;
}

MapPeak refine_peak(const RangeAngleMap& map, int rb, int ab) {
  const auto offset = [](double lo, double mid, double hi) {
    const double den = lo - 2.0 * mid + hi;
    if (!(den < 0)) return 0.0;
    return std::clamp(0.5 * (lo - hi) / den, -0.5, 0.5);
  };
  const auto& P = map.power_db;
  double dr = 0.0, da = 0.0;
  if (rb > 0 && rb + 1 < P.rows()) dr = offset(P(rb - 1, ab), P(rb, ab), P(rb + 1, ab));
  if (ab > 0 && ab + 1 < P.cols()) da = offset(P(rb, ab - 1), P(rb, ab), P(rb, ab + 1));
  const double range_step = map.range_axis.size() > 1 ? map.range_axis[1] - map.range_axis[0] : 0.0;
  const double angle_step = map.angle_axis.size() > 1 ? map.angle_axis[1] - map.angle_axis[0] : 0.0;
  MapPeak p;
  p.range_bin = rb;
  p.angle_bin = ab;
  p.range = map.range_axis[rb] + dr * range_step;
  p.angle_deg = map.angle_axis[ab] + da * angle_step;
  p.power_db = P(rb, ab);
  p.position = map.cell_position(p.range, p.angle_deg);
  return p;
}

std::vector<MapPeak> find_peaks(const RangeAngleMap& map, double threshold_db) {
  const auto& P = map.power_db;
  std::vector<MapPeak> peaks;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      const double v = P(i, j);
      if (v < threshold_db) continue;
      bool is_max = true;
      for (int di = -1; di <= 1 && is_max; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const Eigen::Index ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= P.rows() || jj >= P.cols()) continue;
          // Ties go to the first cell in scan order.
          const bool earlier = di < 0 || (di == 0 && dj < 0);
          if (P(ii, jj) > v || (earlier && P(ii, jj) == v)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back(refine_peak(map, static_cast<int>(i), static_cast<int>(j)));
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const MapPeak& a, const MapPeak& b) { return a.power_db > b.power_db; });
  return peaks;
}

void write_frame_dump(const std::filesystem::path& path, const RadarFrame& frame) {
  static_assert(sizeof(float) == 4 && sizeof(double) == 8);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const auto put = [&out](const auto& v) {
    unsigned char bytes[sizeof(v)];
    std::memcpy(bytes, &v, sizeof(v));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(v));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(v));
  };
  put(static_cast<std::uint32_t>(frame.raw.rows()));
  put(static_cast<std::uint32_t>(frame.raw.cols()));
  put(frame.timestamp);
  for (Eigen::Index m = 0; m < frame.raw.rows(); ++m) {
    for (Eigen::Index k = 0; k < frame.raw.cols(); ++k) {
      put(static_cast<float>(frame.raw(m, k).real()));
      put(static_cast<float>(frame.raw(m, k).imag()));
    }
  }
}

RadarFrame read_frame_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const auto get = [&in](auto& v) {
    unsigned char bytes[sizeof(v)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(v))) throw Error("truncated frame dump");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(v));
    std::memcpy(&v, bytes, sizeof(v));
  };
  std::uint32_t n_ant = 0, n_range = 0;
  RadarFrame frame;
  get(n_ant);
  get(n_range);
  get(frame.timestamp);
  frame.raw.resize(n_ant, n_range);
  for (std::uint32_t m = 0; m < n_ant; ++m) {
    for (std::uint32_t k = 0; k < n_range; ++k) {
      float re = 0, im = 0;
      get(re);
      get(im);
      frame.raw(m, k) = {re, im};
    }
  }
  return frame;
}

}  // namespace commrad
