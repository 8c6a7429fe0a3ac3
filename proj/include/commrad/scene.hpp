#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "commrad/common.hpp"
#include "commrad/geometry.hpp"

namespace commrad {

struct Waypoint {
  double t = 0.0;
  Point2 pos;
  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

struct UserSpec {
  int user_id = 0;
  std::vector<Waypoint> waypoints;
  double rcs = 1.0;  // m^2
  friend bool operator==(const UserSpec&, const UserSpec&) = default;
};

/// Planar surface reflector, modeled as a segment.
struct ReflectorSpec {
  Point2 p1;
  Point2 p2;
  double reflection_coeff = 0.5;  // linear amplitude factor in (0, 1]
  friend bool operator==(const ReflectorSpec&, const ReflectorSpec&) = default;
};

struct BlockerSpec {
  std::vector<Waypoint> waypoints;
  double length_lB = 0.5;        // extent across the direction of motion, m
  double attenuation_db = 30.0;  // applied to any intersected path
  double rcs = 1.0;
  friend bool operator==(const BlockerSpec&, const BlockerSpec&) = default;
};

struct ClutterPoint {
  Point2 pos;
  double rcs = 1.0;
  friend bool operator==(const ClutterPoint&, const ClutterPoint&) = default;
};

struct Scene {
  std::vector<UserSpec> users;
  std::vector<ReflectorSpec> reflectors;
  std::vector<BlockerSpec> blockers;
  std::vector<ClutterPoint> static_clutter;
  double duration = 10.0;
  std::uint64_t seed = 1;
  double max_speed = 2.0;  // m/s, bound on user waypoint speeds

  friend bool operator==(const Scene&, const Scene&) = default;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct UserState {
  int user_id = 0;
  Point2 pos;
  Point2 vel;
  double rcs = 1.0;
};

struct BlockerState {
  int blocker_id = 0;
  Point2 pos;
  Point2 vel;
  double length_lB = 0.5;
  double attenuation_db = 30.0;
  double rcs = 1.0;
};

/// Occupancy depth of a blocker along its direction of motion.
inline constexpr double kBlockerDepth = 0.3;

/// Rectangle occupied by a blocker: length_lB across its velocity, kBlockerDepth along it.
Quad blocker_occupancy(const BlockerState& b);

struct SceneSnapshot {
  double t = 0.0;
  Point2 base_station;  // always the origin
  std::vector<UserState> users;
  std::vector<ReflectorSpec> reflectors;
  std::vector<BlockerState> blockers;
  std::vector<ClutterPoint> static_clutter;

  const UserState& user(int user_id) const;
};

enum class PathKind { direct, reflected };

struct Path {
  PathKind kind = PathKind::direct;
  int reflector_index = -1;
  double departure_angle_deg = 0.0;
  double length = 0.0;
  std::complex<double> gain;  // unblocked complex amplitude, carrier phase included
  double tof = 0.0;
  bool blocked = false;
  double blockage_loss_db = 0.0;  // summed attenuation of intersecting blockers
  Point2 specular_point;          // meaningful for reflected paths

  /// Gain after blockage attenuation.
  std::complex<double> effective_gain() const {
    return blocked ? gain * std::pow(10.0, -blockage_loss_db / 20.0) : gain;
  }
};

/// Piecewise-linear position (and segment velocity) at time t.
struct Kinematics {
  Point2 pos;
  Point2 vel;
};
Kinematics interpolate_waypoints(const std::vector<Waypoint>& waypoints, double t);

SceneSnapshot sample_scene(const Scene& scene, double t);

/// Direct path plus one specular path per reflector that can serve the user.
std::vector<Path> compute_paths(const SceneSnapshot& snapshot, int user_id, double carrier_freq_hz);

double friis_rss(double distance, double wavelength, double tx_power_dbm, double tx_gain_dbi, double rx_gain_dbi);

/// Specular point for a source/receiver pair on a segment reflector, if it
/// falls strictly between the segment endpoints.
std::optional<Point2> specular_point(Point2 source, Point2 receiver, Point2 p1, Point2 p2);

}  // namespace commrad
