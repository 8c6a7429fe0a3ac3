#include "commrad/scene.hpp"

#include <string>

namespace commrad {

namespace {

std::string field(const std::string& prefix, std::size_t i, const char* rest) {
  return prefix + "[" + std::to_string(i) + "]" + rest;
}

void validate_waypoints(const std::vector<Waypoint>& wps, const std::string& where, double max_speed) {
  if (wps.empty()) throw ConfigError(where + ".waypoints: at least one waypoint required");
  for (std::size_t i = 0; i < wps.size(); ++i) {
    if (!wps[i].pos.finite() || !std::isfinite(wps[i].t))
      throw ConfigError(field(where + ".waypoints", i, ": non-finite value"));
    if (i == 0) continue;
    const double dt = wps[i].t - wps[i - 1].t;
    if (!(dt > 0)) throw ConfigError(field(where + ".waypoints", i, ".t: times must be strictly increasing"));
    if (max_speed > 0 && distance(wps[i].pos, wps[i - 1].pos) / dt > max_speed + 1e-9)
      throw ConfigError(field(where + ".waypoints", i, ": implied speed exceeds max_speed"));
  }
}

}  // namespace

void Scene::validate() const {
  if (!(duration > 0)) throw ConfigError("scene.duration: must be > 0");
  if (users.empty()) throw ConfigError("scene.users: at least one user required");
  for (std::size_t i = 0; i < users.size(); ++i) {
    const auto where = field("scene.users", i, "");
    validate_waypoints(users[i].waypoints, where, max_speed);
    if (!(users[i].rcs > 0)) throw ConfigError(where + ".rcs: must be > 0");
    for (std::size_t j = 0; j < i; ++j) {
      if (users[j].user_id == users[i].user_id) throw ConfigError(where + ".user_id: duplicate user id");
    }
  }
  for (std::size_t i = 0; i < reflectors.size(); ++i) {
    const auto& r = reflectors[i];
    const auto where = field("scene.reflectors", i, "");
    if (r.p1 == r.p2) throw ConfigError(where + ": endpoints must differ");
    if (!(r.reflection_coeff > 0 && r.reflection_coeff <= 1))
      throw ConfigError(where + ".reflection_coeff: must lie in (0, 1]");
  }
  for (std::size_t i = 0; i < blockers.size(); ++i) {
    const auto& b = blockers[i];
    const auto where = field("scene.blockers", i, "");
    validate_waypoints(b.waypoints, where, 0.0);
    if (!(b.length_lB > 0)) throw ConfigError(where + ".length_lB: must be > 0");
    if (!(b.attenuation_db >= 0)) throw ConfigError(where + ".attenuation_db: must be >= 0");
    if (!(b.rcs > 0)) throw ConfigError(where + ".rcs: must be > 0");
  }
  for (std::size_t i = 0; i < static_clutter.size(); ++i) {
    if (!(static_clutter[i].rcs > 0)) throw ConfigError(field("scene.static_clutter", i, ".rcs: must be > 0"));
  }
}

Kinematics interpolate_waypoints(const std::vector<Waypoint>& wps, double t) {
  if (wps.size() == 1 || t <= wps.front().t) return {wps.front().pos, {}};
  if (t >= wps.back().t) {
    // Hold the final position.
    return {wps.back().pos, {}};
  }
  std::size_t i = 1;
  while (wps[i].t <= t) ++i;
  const Waypoint& a = wps[i - 1];
  const Waypoint& b = wps[i];
  const double span = b.t - a.t;
  const double f = (t - a.t) / span;
  const Point2 vel = (b.pos - a.pos) / span;
  // Exact at waypoint times.
  const Point2 pos = f == 0.0 ? a.pos : a.pos + (b.pos - a.pos) * f;
  return {pos, vel};
}

Quad blocker_occupancy(const BlockerState& b) {
  const double speed = b.vel.norm();
  const Point2 along = speed > 0 ? b.vel / speed : Point2{1.0, 0.0};
  const Point2 across = along.perp();
  const Point2 ha = along * (kBlockerDepth / 2.0);
  const Point2 hc = across * (b.length_lB / 2.0);
  return {b.pos - ha - hc, b.pos + ha - hc, b.pos + ha + hc, b.pos - ha + hc};
}

const UserState& SceneSnapshot::user(int user_id) const {
  for (const auto& u : users) {
    if (u.user_id == user_id) return u;
  }
  throw NotFoundError("unknown user_id " + std::to_string(user_id));
}

SceneSnapshot sample_scene(const Scene& scene, double t) {
  if (!(t >= 0.0 && t <= scene.duration))
    throw OutOfRangeError("sample_scene: t=" + std::to_string(t) + " outside [0, duration]");
  SceneSnapshot snap;
  snap.t = t;
  snap.reflectors = scene.reflectors;
  snap.static_clutter = scene.static_clutter;
  snap.users.reserve(scene.users.size());
  for (const auto& u : scene.users) {
    const auto k = interpolate_waypoints(u.waypoints, t);
    snap.users.push_back({u.user_id, k.pos, k.vel, u.rcs});
  }
  for (std::size_t i = 0; i < scene.blockers.size(); ++i) {
    const auto& b = scene.blockers[i];
    const auto k = interpolate_waypoints(b.waypoints, t);
    snap.blockers.push_back({static_cast<int>(i), k.pos, k.vel, b.length_lB, b.attenuation_db, b.rcs});
  }
  return snap;
}

double friis_rss(double distance, double wavelength, double tx_power_dbm, double tx_gain_dbi, double rx_gain_dbi) {
  if (!(distance > 0)) throw DomainError("friis_rss: distance must be > 0");
  if (!(wavelength > 0)) throw DomainError("friis_rss: wavelength must be > 0");
  return tx_power_dbm + tx_gain_dbi + rx_gain_dbi - 20.0 * std::log10(4.0 * kPi * distance / wavelength);
}

std::optional<Point2> specular_point(Point2 source, Point2 receiver, Point2 p1, Point2 p2) {
  const Point2 image = mirror_across_line(source, p1, p2);
  const auto hit = intersect_lines(image, receiver, p1, p2);
  if (!hit) return std::nullopt;
  // The image-to-receiver segment must cross the reflector line (same side
  // requirement) and land strictly inside the reflector extent.
  if (!(hit->s > 0.0 && hit->s < 1.0)) return std::nullopt;
  if (!(hit->u > 0.0 && hit->u < 1.0)) return std::nullopt;
  return hit->point;
}

namespace {

double leg_loss_db(const SceneSnapshot& snap, Point2 a, Point2 b, bool& blocked) {
  double loss = 0.0;
  for (const auto& bl : snap.blockers) {
    if (segment_intersects_quad(a, b, blocker_occupancy(bl))) {
      blocked = true;
      loss += bl.attenuation_db;
    }
  }
  return loss;
}

std::complex<double> path_gain(double length, double wavelength, double extra_amplitude) {
  const double amp = std::sqrt(db_to_linear(friis_rss(length, wavelength, 0.0, 0.0, 0.0))) * extra_amplitude;
  const double phase = -2.0 * kPi * std::fmod(length / wavelength, 1.0);
  return std::polar(amp, phase);
}

}  // namespace

std::vector<Path> compute_paths(const SceneSnapshot& snap, int user_id, double carrier_freq_hz) {
  const UserState& user = snap.user(user_id);
  const double wavelength = kSpeedOfLight / carrier_freq_hz;
  const Point2 bs = snap.base_station;
  std::vector<Path> paths;

  Path direct;
  direct.kind = PathKind::direct;
  direct.departure_angle_deg = bearing_deg(bs, user.pos);
  direct.length = distance(bs, user.pos);
  if (!(direct.length > 0)) throw GeometryError("compute_paths: user coincides with base station");
  direct.tof = direct.length / kSpeedOfLight;
  direct.gain = path_gain(direct.length, wavelength, 1.0);
  direct.blockage_loss_db = leg_loss_db(snap, bs, user.pos, direct.blocked);
  direct.specular_point = user.pos;
  paths.push_back(direct);

  for (std::size_t i = 0; i < snap.reflectors.size(); ++i) {
    const auto& r = snap.reflectors[i];
    const auto sp = specular_point(bs, user.pos, r.p1, r.p2);
    if (!sp) continue;
    Path p;
    p.kind = PathKind::reflected;
    p.reflector_index = static_cast<int>(i);
    p.specular_point = *sp;
    p.departure_angle_deg = bearing_deg(bs, *sp);
    p.length = distance(bs, *sp) + distance(*sp, user.pos);
    p.tof = p.length / kSpeedOfLight;
    p.gain = path_gain(p.length, wavelength, r.reflection_coeff);
    p.blockage_loss_db = leg_loss_db(snap, bs, *sp, p.blocked) + leg_loss_db(snap, *sp, user.pos, p.blocked);
    paths.push_back(p);
  }
  return paths;
}

}  // namespace commrad
