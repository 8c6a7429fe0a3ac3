#include "commrad/context.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include <boost/math/tools/minima.hpp>

namespace commrad {

double fold_orientation(double deg) {
  double v = std::fmod(deg, 180.0);
  if (v <= -90.0) v += 180.0;
  if (v > 90.0) v -= 180.0;
  return v;
}

double coarse_distance_from_rss(double rss_dbm, const RadioConfig& radio, double calibration_db) {
  const double aligned_gain_db = linear_to_db(radio.n_antennas);
  const double loss_db = radio.tx_power_dbm + aligned_gain_db - (rss_dbm + calibration_db);
  return radio.wavelength() / (4.0 * kPi) * std::pow(10.0, loss_db / 20.0);
}

UserContext acquire_user_context(const BeamScanReport& report, int user_id, const RangeAngleMap& radar_map,
                                 const RadioConfig& radio, double range_res, const ContextConfig& cfg) {
  const UserScan& scan = report.user(user_id);
  const auto best = std::max_element(scan.rss_dbm.begin(), scan.rss_dbm.end()) - scan.rss_dbm.begin();

  UserContext ctx;
  ctx.user_id = user_id;
  ctx.timestamp = report.timestamp;
  ctx.angle_deg = radio.codebook_angle(static_cast<int>(best));
  ctx.coarse_distance = coarse_distance_from_rss(scan.rss_dbm[best], radio, cfg.friis_calibration_db);
  ctx.distance = ctx.coarse_distance;

  const double gate = radar_gate(ctx.coarse_distance, range_res);
  const Point2 guess = polar_to_point({}, ctx.coarse_distance, ctx.angle_deg);
  double best_err = std::numeric_limits<double>::infinity();
  for (const auto& pk : find_peaks(radar_map, radar_map.noise_floor_db + cfg.radar_margin_db)) {
    const double r = pk.position.norm();
    if (std::abs(r - ctx.coarse_distance) > gate) continue;
    if (std::abs(bearing_deg({}, pk.position) - ctx.angle_deg) > cfg.radar_angle_gate_deg) continue;
    const double err = distance(pk.position, guess);
    if (err < best_err) {
      best_err = err;
      ctx.distance = r;
      ctx.radar_refined = true;
    }
  }
  return ctx;
}

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

VectorXcd element_steering(int n, double phi_deg) {
  VectorXcd a(n);
  const double s = std::sin(deg2rad(phi_deg));
  for (int i = 0; i < n; ++i) a(i) = std::polar(1.0, -kPi * i * s);
  return a;
}

// Codebook as a linear map from element space: beam b responds with row b.
MatrixXcd codebook_matrix(const RadioConfig& radio) {
  const int nb = radio.codebook_size, n = radio.n_antennas;
  MatrixXcd f(nb, n);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (int b = 0; b < nb; ++b) {
    const double s = std::sin(deg2rad(radio.codebook_angle(b)));
    for (int i = 0; i < n; ++i) f(b, i) = std::polar(norm, kPi * i * s);
  }
  return f;
}

// Signal subspace of a Hermitian covariance. Eigenvalues must clear the mean
// of the trailing (noise) eigenvalues by threshold_db and a numerical floor.
MatrixXcd signal_subspace(const MatrixXcd& cov, int max_dim, double threshold_db) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(cov);
  const Eigen::VectorXd ev = es.eigenvalues();  // ascending
  const int n = static_cast<int>(ev.size());
  const int n_noise = std::max(1, n - max_dim);
  const double lead = std::max(ev(n - 1), 0.0);
  double noise = 0.0;
  for (int i = 0; i < n_noise; ++i) noise += std::max(ev(i), 0.0);
  noise /= n_noise;
  const double floor = std::max(noise * db_to_linear(threshold_db), lead * 1e-10);
  int d = 0;
  while (d < max_dim && d < n - 1 && ev(n - 1 - d) >= floor && ev(n - 1 - d) > 0) ++d;
  if (d == 0) throw EstimationError("estimate_paths: no signal eigenvalue above threshold");
  return es.eigenvectors().rightCols(d);
}

// MUSIC pseudospectrum ||v||^2 / ||En^H v||^2 computed through the signal subspace.
double pseudospectrum(const MatrixXcd& es, const VectorXcd& v) {
  const double total = v.squaredNorm();
  const double in_signal = (es.adjoint() * v).squaredNorm();
  const double residual = std::max(total - in_signal, total * 1e-15);
  return total / residual;
}

template <class F>
double refine_max(F f, double lo, double hi) {
  const auto r = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, lo, hi, 40);
  return r.first;
}

struct Peak {
  int index;
  double value;
};

std::vector<Peak> spectrum_peaks(const std::vector<double>& p, double threshold) {
  std::vector<Peak> out;
  const int n = static_cast<int>(p.size());
  for (int i = 0; i < n; ++i) {
    const double left = i > 0 ? p[i - 1] : -1.0;
    const double right = i + 1 < n ? p[i + 1] : -1.0;
    if (p[i] > left && p[i] >= right && p[i] >= threshold) out.push_back({i, p[i]});
  }
  std::stable_sort(out.begin(), out.end(), [](const Peak& a, const Peak& b) { return a.value > b.value; });
  return out;
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<long>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

// Delay of a single-path frequency response via smoothed MUSIC on a delay grid.
double estimate_delay(const VectorXcd& x, const RadioConfig& radio, const ContextConfig& cfg) {
  const int k = static_cast<int>(x.size());
  const int m = std::clamp(cfg.smoothing_length, 2, k - 1);
  const int n_sub = k - m + 1;
  MatrixXcd cov = MatrixXcd::Zero(m, m);
  for (int s = 0; s < n_sub; ++s) {
    const VectorXcd seg = x.segment(s, m);
    cov.noalias() += seg * seg.adjoint();
  }
  cov /= n_sub;
  const MatrixXcd es = signal_subspace(cov, 1, cfg.eig_threshold_db);

  const double period = 1.0 / radio.subcarrier_spacing;
  const int n_grid = static_cast<int>(std::floor(period / cfg.delay_grid_s));
  const auto steer = [&](double tau) {
    VectorXcd e(m);
    const std::complex<double> step = std::polar(1.0, -2.0 * kPi * radio.subcarrier_spacing * tau);
    std::complex<double> v = 1.0;
    for (int i = 0; i < m; ++i) {
      e(i) = v;
      v *= step;
    }
    return e;
  };
  int best = 0;
  double best_val = -1.0;
  for (int g = 0; g < n_grid; ++g) {
    const double val = pseudospectrum(es, steer(g * cfg.delay_grid_s));
    if (val > best_val) {
      best_val = val;
      best = g;
    }
  }
  // Refine in grid-cell units; Brent's tolerance is relative and too coarse in seconds.
  const double cell = refine_max([&](double u) { return pseudospectrum(es, steer(u * cfg.delay_grid_s)); }, best - 1.0,
                                 best + 1.0);
  double tau = cell * cfg.delay_grid_s;
  tau = std::fmod(tau, period);
  if (tau < 0) tau += period;
  return tau;
}

}  // namespace

std::vector<PathEstimate> estimate_paths(const UserScan& scan, const RadioConfig& radio, const ContextConfig& cfg) {
  const MatrixXcd& csi = scan.csi;
  if (csi.cols() < 2) throw EstimationError("estimate_paths: need at least 2 subcarriers");
  if (csi.rows() != radio.codebook_size) throw EstimationError("estimate_paths: CSI rows do not match codebook");
  const int n = radio.n_antennas;
  const int k = static_cast<int>(csi.cols());

  // Project the beamspace onto the codebook's column space; the orthonormal
  // basis keeps noise white, so MUSIC there equals MUSIC on the full beamspace.
  const MatrixXcd f = codebook_matrix(radio);
  Eigen::HouseholderQR<MatrixXcd> qr(f);
  const MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(f.rows(), n);
  const MatrixXcd r = q.adjoint() * f;
  const MatrixXcd y = q.adjoint() * csi;
  const MatrixXcd cov = y * y.adjoint() / static_cast<double>(k);
  const MatrixXcd es = signal_subspace(cov, std::min(cfg.max_paths, n - 1), cfg.eig_threshold_db);
  const int d = static_cast<int>(es.cols());

  const auto spectrum_at = [&](double phi) { return pseudospectrum(es, r * element_steering(n, phi)); };
  const int n_grid = static_cast<int>(std::lround(2.0 * radio.fov_deg / cfg.angle_grid_deg)) + 1;
  std::vector<double> grid(n_grid), spec(n_grid);
  for (int i = 0; i < n_grid; ++i) {
    grid[i] = -radio.fov_deg + i * cfg.angle_grid_deg;
    spec[i] = spectrum_at(grid[i]);
  }
  auto peaks = spectrum_peaks(spec, median(spec) * db_to_linear(cfg.peak_threshold_db));
  if (peaks.empty()) throw EstimationError("estimate_paths: no pseudospectrum peak above threshold");
  if (static_cast<int>(peaks.size()) > d) peaks.resize(d);

  std::vector<double> angles;
  for (const auto& pk : peaks) {
    const double lo = std::max(-radio.fov_deg, grid[pk.index] - cfg.angle_grid_deg);
    const double hi = std::min(radio.fov_deg, grid[pk.index] + cfg.angle_grid_deg);
    angles.push_back(refine_max(spectrum_at, lo, hi));
  }

  // Least-squares split of the CSI into per-path frequency responses.
  const int np = static_cast<int>(angles.size());
  MatrixXcd a(n, np);
  for (int i = 0; i < np; ++i) a.col(i) = r * element_steering(n, angles[i]);
  const MatrixXcd x = a.completeOrthogonalDecomposition().solve(y);

  std::vector<PathEstimate> out(np);
  std::vector<double> tau(np);
  for (int i = 0; i < np; ++i) {
    out[i].angle_deg = angles[i];
    out[i].strength = x.row(i).squaredNorm() / k;
    tau[i] = estimate_delay(x.row(i).transpose(), radio, cfg);
  }

  // Delays are circular with period 1/spacing; measure from the reference
  // that gives the tightest spread.
  const double period = 1.0 / radio.subcarrier_spacing;
  const auto wrap = [period](double v) {
    v = std::fmod(v, period);
    return v < 0 ? v + period : v;
  };
  int ref = 0;
  double best_spread = std::numeric_limits<double>::infinity();
  for (int c = 0; c < np; ++c) {
    double spread = 0.0;
    for (int i = 0; i < np; ++i) spread = std::max(spread, wrap(tau[i] - tau[c]));
    if (spread < best_spread) {
      best_spread = spread;
      ref = c;
    }
  }
  for (int i = 0; i < np; ++i) {
    out[i].rel_tof = wrap(tau[i] - tau[ref]);
  }

  // Direct path: earliest arrival; delays within one grid cell of it are a
  // tie that goes to the stronger path.
  const double earliest = std::min_element(out.begin(), out.end(), [](const auto& u, const auto& v) {
                            return u.rel_tof < v.rel_tof;
                          })->rel_tof;
  int direct = -1;
  for (int i = 0; i < np; ++i) {
    if (out[i].rel_tof - earliest < cfg.delay_grid_s && (direct < 0 || out[i].strength > out[direct].strength))
      direct = i;
  }
  out[direct].is_direct = true;
  std::stable_sort(out.begin(), out.end(), [](const auto& u, const auto& v) { return u.rel_tof < v.rel_tof; });
  return out;
}

std::vector<PathEstimate> estimate_paths(const BeamScanReport& report, int user_id, const RadioConfig& radio,
                                         const ContextConfig& cfg) {
  return estimate_paths(report.user(user_id), radio, cfg);
}

ReflectionObservation estimate_reflector_point(Point2 bs, const UserContext& user, const PathEstimate& refl) {
  if (refl.is_direct) throw GeometryError("estimate_reflector_point: path is the direct path");
  const Point2 u_pos = user.position(bs);
  const Point2 d = u_pos - bs;
  const double focal = d.norm();
  const double total = user.distance + kSpeedOfLight * refl.rel_tof;
  if (!(total > focal + 1e-9)) throw GeometryError("estimate_reflector_point: path length does not exceed focal distance");

  // Ray bs + t*u meets |p - bs| + |p - user| = total at
  // t = (total^2 - |d|^2) / (2 (total - u.d)).
  const Point2 u = bearing_direction(refl.angle_deg);
  const double den = 2.0 * (total - u.dot(d));
  if (!(den > 0)) throw GeometryError("estimate_reflector_point: ray misses ellipse");
  const double t = (total * total - focal * focal) / den;
  if (!(t > 0)) throw GeometryError("estimate_reflector_point: ray misses ellipse");
  const Point2 p = bs + u * t;

  // Ellipse normal bisects the focal directions; the tangent is perpendicular.
  const Point2 to_user = u_pos - p;
  const Point2 normal = (bs - p) / t + to_user / to_user.norm();
  const Point2 tangent = normal.perp();
  ReflectionObservation obs;
  obs.point = p;
  obs.orientation_deg = fold_orientation(rad2deg(std::atan2(tangent.y, tangent.x)));
  obs.strength = refl.strength;
  obs.timestamp = user.timestamp;
  return obs;
}

namespace {

struct Cluster {
  std::vector<int> members;
  Point2 centroid;
  Point2 dir;
  double orientation = 0.0;
};

double orientation_gap(double a, double b) {
  const double d = std::abs(fold_orientation(a - b));
  return std::min(d, 180.0 - d);
}

void fit(Cluster& c, const std::vector<ReflectionObservation>& obs) {
  Point2 sum;
  for (int i : c.members) sum = sum + obs[i].point;
  c.centroid = sum / static_cast<double>(c.members.size());
  double sxx = 0, sxy = 0, syy = 0, c2 = 0, s2 = 0;
  for (int i : c.members) {
    const Point2 q = obs[i].point - c.centroid;
    sxx += q.x * q.x;
    sxy += q.x * q.y;
    syy += q.y * q.y;
    c2 += std::cos(2.0 * deg2rad(obs[i].orientation_deg));
    s2 += std::sin(2.0 * deg2rad(obs[i].orientation_deg));
  }
  const double n = static_cast<double>(c.members.size());
  Eigen::Matrix2d scatter;
  scatter << sxx / n, sxy / n, sxy / n, syy / n;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(scatter);
  // Points spread over less than about 0.35 m do not pin a direction; fall
  // back on the mean observed slope.
  if (es.eigenvalues()(1) > 0.01) {
    const Eigen::Vector2d v = es.eigenvectors().col(1);
    c.orientation = fold_orientation(rad2deg(std::atan2(v.y(), v.x())));
  } else {
    c.orientation = fold_orientation(rad2deg(0.5 * std::atan2(s2, c2)));
  }
  c.dir = slope_unit(c.orientation);
}

}  // namespace

std::vector<ReflectorEstimate> accumulate_reflector(const std::vector<ReflectionObservation>& history,
                                                    const ContextConfig& cfg) {
  std::vector<Cluster> clusters;
  for (int i = 0; i < static_cast<int>(history.size()); ++i) {
    const auto& o = history[i];
    Cluster* home = nullptr;
    for (auto& c : clusters) {
      if (orientation_gap(o.orientation_deg, c.orientation) > cfg.cluster_angle_deg) continue;
      if (distance_to_line(o.point, c.centroid, c.centroid + c.dir) > cfg.cluster_distance) continue;
      home = &c;
      break;
    }
    if (!home) {
      clusters.emplace_back();
      home = &clusters.back();
    }
    home->members.push_back(i);
    fit(*home, history);
  }

  std::vector<ReflectorEstimate> out;
  for (const auto& c : clusters) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, strength = 0.0;
    for (int i : c.members) {
      const double s = project_onto(history[i].point, c.centroid, c.dir);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
      strength += history[i].strength;
    }
    ReflectorEstimate e;
    e.point = c.centroid;
    e.orientation_deg = c.orientation;
    e.endpoint_a = c.centroid + c.dir * lo;
    e.endpoint_b = c.centroid + c.dir * hi;
    e.n_observations = static_cast<int>(c.members.size());
    e.low_confidence = e.n_observations == 1 || hi - lo < 1e-9;
    e.mean_strength = strength / e.n_observations;
    out.push_back(e);
  }
  return out;
}

void ReflectorMap::add(const ReflectionObservation& obs) {
  history_.push_back(obs);
  estimates_ = accumulate_reflector(history_, cfg_);
}

void ReflectorMap::clear() {
  history_.clear();
  estimates_.clear();
}

void write_reflectors_csv(std::ostream& out, const std::vector<ReflectorEstimate>& estimates) {
  out << "x1,y1,x2,y2,phi,n_obs\n";
  char buf[160];
  for (const auto& e : estimates) {
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f,%.3f,%d\n", e.endpoint_a.x, e.endpoint_a.y, e.endpoint_b.x,
                  e.endpoint_b.y, e.orientation_deg, e.n_observations);
    out << buf;
  }
}

}  // namespace commrad
