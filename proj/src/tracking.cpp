#include "commrad/tracking.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace commrad {

TrackerConfig TrackerConfig::for_radar(const RadarConfig& radar) {
  TrackerConfig cfg;
  const auto res = resolution_params(radar);
  cfg.range_sigma = res.range_res;
  cfg.angle_res_deg = res.angle_res_deg;
  return cfg;
}

Track make_track(int user_id, Point2 pos, double t, const TrackerConfig& cfg) {
  Track tr;
  tr.user_id = user_id;
  tr.state << pos.x, pos.y, 0.0, 0.0;
  const double ps = cfg.context_sigma * cfg.context_sigma;
  tr.covariance = Eigen::Vector4d(ps, ps, 1.0, 1.0).asDiagonal();
  tr.bbox_center = pos;
  tr.bbox_half_extent = cfg.bbox_half_extent;
  tr.last_update = t;
  return tr;
}

void kalman_predict(Track& track, double t, double sigma_accel) {
  const double dt = t - track.last_update;
  if (dt <= 0) return;
  Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
  f(0, 2) = f(1, 3) = dt;
  const double q = sigma_accel * sigma_accel;
  const double a = dt * dt * dt * dt / 4.0, b = dt * dt * dt / 2.0, c = dt * dt;
  Eigen::Matrix4d qm = Eigen::Matrix4d::Zero();
  qm(0, 0) = qm(1, 1) = a * q;
  qm(0, 2) = qm(2, 0) = qm(1, 3) = qm(3, 1) = b * q;
  qm(2, 2) = qm(3, 3) = c * q;
  track.state = f * track.state;
  track.covariance = f * track.covariance * f.transpose() + qm;
  track.covariance = 0.5 * (track.covariance + track.covariance.transpose()).eval();
  track.last_update = t;
}

void kalman_update(Track& track, Point2 z, const Eigen::Matrix2d& r) {
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 0) = h(1, 1) = 1.0;
  const Eigen::Vector2d innov(z.x - track.state(0), z.y - track.state(1));
  const Eigen::Matrix2d s = h * track.covariance * h.transpose() + r;
  const Eigen::Matrix<double, 4, 2> k = track.covariance * h.transpose() * s.inverse();
  track.state += k * innov;
  // Joseph form keeps the covariance symmetric positive semi-definite.
  const Eigen::Matrix4d ikh = Eigen::Matrix4d::Identity() - k * h;
  track.covariance = ikh * track.covariance * ikh.transpose() + k * r * k.transpose();
  track.covariance = 0.5 * (track.covariance + track.covariance.transpose()).eval();
}

Eigen::Matrix2d radar_measurement_cov(Point2 pos, Point2 radar_origin, const TrackerConfig& cfg) {
  const double d = std::max(distance(pos, radar_origin), 0.1);
  const Point2 radial = bearing_direction(bearing_deg(radar_origin, pos));
  const double st = d * std::sin(deg2rad(cfg.angle_res_deg));
  Eigen::Matrix2d rot;
  rot << radial.x, -radial.y, radial.y, radial.x;
  const Eigen::Vector2d var(cfg.range_sigma * cfg.range_sigma, st * st);
  return rot * var.asDiagonal() * rot.transpose();
}

RangeAngleMap remove_clutter(const RangeAngleMap& map, ClutterProfile& profile, const TrackerConfig& cfg) {
  if (profile.n_frames_averaged > 0 &&
      (profile.avg_map.rows() != map.response.rows() || profile.avg_map.cols() != map.response.cols()))
    throw DomainError("remove_clutter: profile dimensions do not match the map");
  RangeAngleMap out = map;
  if (profile.n_frames_averaged > 0) {
    out.response = map.response - profile.avg_map;
    // Only returns that add energy over the background are kept; a cell that
    // lost energy holds the fading image of something that has moved on.
    const Eigen::ArrayXXd gained = map.response.array().abs2() - profile.avg_map.array().abs2();
    out.response = (gained > 0.0).select(out.response, std::complex<double>(0.0));
    refresh_power(out);
  }
  if (profile.n_frames_averaged == 0) {
    profile.avg_map = map.response;
  } else if (profile.n_frames_averaged < cfg.clutter_window) {
    const double w = 1.0 / (profile.n_frames_averaged + 1);
    profile.avg_map = (1.0 - w) * profile.avg_map + w * map.response;
  } else {
    profile.avg_map = (1.0 - cfg.clutter_alpha) * profile.avg_map + cfg.clutter_alpha * map.response;
  }
  ++profile.n_frames_averaged;
  return out;
}

namespace {

struct CellWindow {
  int r0, r1, a0, a1;
};

// Range/angle index window covering a square box around `centre`.
CellWindow box_window(const RangeAngleMap& map, Point2 centre, double half) {
  const Point2 corners[4] = {centre + Point2{-half, -half}, centre + Point2{half, -half}, centre + Point2{half, half},
                             centre + Point2{-half, half}};
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  double amin = 180.0, amax = -180.0;
  for (const auto& c : corners) {
    const double r = distance(map.origin, c);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
    const double a = bearing_deg(map.origin, c);
    amin = std::min(amin, a);
    amax = std::max(amax, a);
  }
  const Point2 rel = centre - map.origin;
  const bool contains_origin = std::abs(rel.x) <= half && std::abs(rel.y) <= half;
  if (contains_origin || rel.y - half <= 0.0) {
    // Box reaches behind the array: bearings wrap, search the full fan.
    rmin = 0.0;
    amin = -180.0;
    amax = 180.0;
  }
  const double rstep = map.range_axis[1] - map.range_axis[0];
  const double astep = map.angle_axis[1] - map.angle_axis[0];
  CellWindow w;
  w.r0 = std::max(0, static_cast<int>(std::floor(rmin / rstep)));
  w.r1 = std::min(map.range_bins() - 1, static_cast<int>(std::ceil(rmax / rstep)));
  w.a0 = std::max(0, static_cast<int>(std::floor((amin - map.angle_axis.front()) / astep)));
  w.a1 = std::min(map.angle_bins() - 1, static_cast<int>(std::ceil((amax - map.angle_axis.front()) / astep)));
  return w;
}

std::optional<MapPeak> strongest_in_box(const RangeAngleMap& map, Point2 centre, double half, double threshold) {
  const auto w = box_window(map, centre, half);
  int br = -1, ba = -1;
  double best = threshold;
  for (int r = w.r0; r <= w.r1; ++r) {
    for (int a = w.a0; a <= w.a1; ++a) {
      const double p = map.power_db(r, a);
      if (p < best) continue;
      const Point2 pos = map.cell_position(map.range_axis[r], map.angle_axis[a]);
      if (std::abs(pos.x - centre.x) > half || std::abs(pos.y - centre.y) > half) continue;
      best = p;
      br = r;
      ba = a;
    }
  }
  if (br < 0) return std::nullopt;
  return refine_peak(map, br, ba);
}

}  // namespace

std::vector<Track> track_step(const std::vector<Track>& tracks, const RangeAngleMap& map, double t,
                              const TrackerConfig& cfg) {
  const double threshold = map.noise_floor_db + cfg.detection_margin_db;
  std::vector<Track> out = tracks;
  for (auto& tr : out) {
    kalman_predict(tr, t, cfg.sigma_accel);
    const auto pk = strongest_in_box(map, tr.bbox_center, tr.bbox_half_extent, threshold);
    if (pk) {
      kalman_update(tr, pk->position, radar_measurement_cov(pk->position, map.origin, cfg));
      tr.bbox_center = tr.position();
      tr.misses = 0;
    } else {
      tr.bbox_center = tr.position();
      ++tr.misses;
    }
  }
  return out;
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows()), cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  if (rows > cols) {
    const auto by_col = solve_assignment(cost.transpose());
    std::vector<int> out(rows, -1);
    for (int c = 0; c < cols; ++c) {
      if (by_col[c] >= 0) out[by_col[c]] = c;
    }
    return out;
  }
  // Shortest augmenting path with potentials (rows <= cols), 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<int> p(cols + 1, 0), way(cols + 1, 0);
  for (int i = 1; i <= rows; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(cols + 1, inf);
    std::vector<char> used(cols + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> out(rows, -1);
  for (int j = 1; j <= cols; ++j) {
    if (p[j] > 0) out[p[j] - 1] = j - 1;
  }
  return out;
}

std::vector<Track> recalibrate(const std::vector<Track>& tracks, const std::vector<UserContext>& contexts, double t,
                               const TrackerConfig& cfg) {
  // Deterministic order: lower user ids first on both sides.
  std::vector<Track> trs = tracks;
  std::stable_sort(trs.begin(), trs.end(), [](const Track& a, const Track& b) { return a.user_id < b.user_id; });
  std::vector<UserContext> ctx = contexts;
  std::stable_sort(ctx.begin(), ctx.end(), [](const auto& a, const auto& b) { return a.user_id < b.user_id; });
  for (auto& tr : trs) kalman_predict(tr, t, cfg.sigma_accel);

  Eigen::MatrixXd cost(trs.size(), ctx.size());
  for (std::size_t i = 0; i < trs.size(); ++i) {
    for (std::size_t j = 0; j < ctx.size(); ++j) cost(i, j) = distance(trs[i].position(), ctx[j].position());
  }
  const auto match = solve_assignment(cost);

  std::vector<Track> out;
  std::vector<char> ctx_used(ctx.size(), 0);
  std::vector<Track> unmatched;
  const double ps = cfg.context_sigma * cfg.context_sigma;
  for (std::size_t i = 0; i < trs.size(); ++i) {
    Track tr = trs[i];
    if (match[i] < 0) {
      unmatched.push_back(tr);
      continue;
    }
    const auto& c = ctx[match[i]];
    ctx_used[match[i]] = 1;
    const Point2 pos = c.position();
    tr.user_id = c.user_id;
    tr.state(0) = pos.x;
    tr.state(1) = pos.y;
    tr.covariance.block<2, 2>(0, 0) = Eigen::Matrix2d::Identity() * ps;
    tr.covariance.block<2, 2>(0, 2).setZero();
    tr.covariance.block<2, 2>(2, 0).setZero();
    tr.bbox_center = pos;
    tr.bbox_half_extent = cfg.bbox_half_extent;
    tr.misses = 0;
    tr.last_update = t;
    out.push_back(tr);
  }
  for (std::size_t j = 0; j < ctx.size(); ++j) {
    if (!ctx_used[j]) out.push_back(make_track(ctx[j].user_id, ctx[j].position(), t, cfg));
  }
  int orphan = -1;
  for (auto& tr : unmatched) {
    if (tr.misses > cfg.max_misses) continue;
    const bool taken = std::any_of(out.begin(), out.end(), [&](const Track& o) { return o.user_id == tr.user_id; });
    if (taken) tr.user_id = orphan--;
    out.push_back(tr);
  }
  return out;
}

std::vector<MapPeak> detect_objects(const RangeAngleMap& map, const TrackerConfig& cfg) {
  const auto peaks = find_peaks(map, map.noise_floor_db + cfg.detection_margin_db);
  std::vector<MapPeak> kept;
  for (const auto& p : peaks) {
    if (peaks.front().power_db - p.power_db > cfg.object_dynamic_range_db) break;
    // Peaks arrive strongest first; drop sidelobes of an already kept return
    // on the same range row or the same angle column.
    const bool sidelobe = std::any_of(kept.begin(), kept.end(), [&](const MapPeak& k) {
      if (distance(k.position, p.position) < cfg.object_merge_radius) return true;
      if (k.power_db - p.power_db < cfg.sidelobe_rejection_db) return false;
      return std::abs(k.range_bin - p.range_bin) <= 1 || std::abs(k.angle_bin - p.angle_bin) <= 2;
    });
    if (!sidelobe) kept.push_back(p);
  }
  return kept;
}

void ObjectTracker::step(const RangeAngleMap& map, const std::vector<Track>& user_tracks, double t) {
  std::vector<MapPeak> dets;
  for (const auto& p : detect_objects(map, cfg_)) {
    const bool user = std::any_of(user_tracks.begin(), user_tracks.end(), [&](const Track& u) {
      return distance(u.position(), p.position) < cfg_.object_user_exclusion;
    });
    if (!user) dets.push_back(p);
  }
  for (auto& tr : tracks_) kalman_predict(tr, t, cfg_.sigma_accel);

  const double big = 1e6;
  Eigen::MatrixXd cost(tracks_.size(), dets.size());
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    for (std::size_t j = 0; j < dets.size(); ++j) {
      const double d = distance(tracks_[i].position(), dets[j].position);
      cost(i, j) = d <= cfg_.object_gate ? d : big;
    }
  }
  const auto match = solve_assignment(cost);
  std::vector<char> det_used(dets.size(), 0);
  std::vector<Track> next;
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    Track tr = tracks_[i];
    if (match[i] >= 0 && cost(i, match[i]) < big) {
      const auto& d = dets[match[i]];
      det_used[match[i]] = 1;
      kalman_update(tr, d.position, radar_measurement_cov(d.position, map.origin, cfg_));
      tr.misses = 0;
      ++tr.hits;
    } else {
      ++tr.misses;
    }
    tr.bbox_center = tr.position();
    if (tr.misses <= cfg_.max_misses) next.push_back(tr);
  }
  for (std::size_t j = 0; j < dets.size(); ++j) {
    if (det_used[j]) continue;
    Track tr = make_track(next_id_++, dets[j].position, t, cfg_);
    tr.covariance.block<2, 2>(0, 0) = radar_measurement_cov(dets[j].position, map.origin, cfg_);
    next.push_back(tr);
  }
  tracks_ = std::move(next);
}

Point2 virtual_bs(const ReflectorEstimate& reflector) {
  const double phi = deg2rad(reflector.orientation_deg);
  const double xr = reflector.point.x, yr = reflector.point.y;
  if (std::abs(std::cos(phi)) < 1e-12) return {2.0 * xr, 0.0};
  const double m = std::tan(phi);
  const double k = 2.0 * (yr - m * xr) / (1.0 + m * m);
  return {-m * k, k};
}

std::optional<double> reflected_path_angle(Point2 user, const ReflectorEstimate& reflector) {
  constexpr double kMargin = 0.1;
  const Point2 dir = reflector.direction();
  const Point2 a = reflector.point;
  const Point2 b = a + dir;
  // The user must be on the base-station side of the reflector.
  const double side_bs = dir.cross(Point2{} - a);
  const double side_user = dir.cross(user - a);
  if (side_bs * side_user <= 0) return std::nullopt;
  const Point2 vbs = virtual_bs(reflector);
  const auto hit = intersect_lines(vbs, user, a, b);
  if (!hit || hit->s < 0.0 || hit->s > 1.0) return std::nullopt;
  const double s = project_onto(hit->point, reflector.endpoint_a, dir);
  const double len = project_onto(reflector.endpoint_b, reflector.endpoint_a, dir);
  if (s < -kMargin || s > len + kMargin) return std::nullopt;
  return bearing_deg({}, hit->point);
}

}  // namespace commrad
