#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "commrad/context.hpp"
#include "commrad/radar.hpp"

namespace commrad {

struct TrackerConfig {
  double sigma_accel = 0.5;          // m/s^2, white-acceleration process noise
  double range_sigma = 0.75;         // radial measurement sigma, m (radar range resolution)
  double angle_res_deg = 7.16;       // tangential sigma = distance * sin(angle_res)
  double bbox_half_extent = 1.5;     // m
  double detection_margin_db = 13.0;  // above the map noise floor
  int max_misses = 5;
  double clutter_alpha = 0.05;       // EMA factor once the window is full
  int clutter_window = 20;           // frames of plain averaging before the EMA
  double object_gate = 1.5;          // m, association gate for non-user objects
  double object_user_exclusion = 1.0;  // m, detections this close to a user track belong to it
  double sidelobe_rejection_db = 12.0;
  double object_merge_radius = 1.0;  // m, weaker peaks this close to a kept one belong to the same object
  double object_dynamic_range_db = 30.0;  // peaks further below the strongest one are leakage
  double context_sigma = 0.3;        // m, position sigma after a radio recalibration

  friend bool operator==(const TrackerConfig&, const TrackerConfig&) = default;

  /// Measurement model matched to a radar configuration.
  static TrackerConfig for_radar(const RadarConfig& radar);
};

struct Track {
  int user_id = 0;
  Eigen::Vector4d state = Eigen::Vector4d::Zero();  // x, y, vx, vy
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();
  Point2 bbox_center;
  double bbox_half_extent = 1.5;
  double last_update = 0.0;
  int misses = 0;
  int hits = 1;  // radar updates received, counting the detection that created the track

  Point2 position() const { return {state(0), state(1)}; }
  Point2 velocity() const { return {state(2), state(3)}; }
};

/// Fresh track at a position with zero velocity.
Track make_track(int user_id, Point2 pos, double t, const TrackerConfig& cfg);

/// Constant-velocity prediction to time t.
void kalman_predict(Track& track, double t, double sigma_accel);

/// Position update with a Cartesian measurement and covariance.
void kalman_update(Track& track, Point2 z, const Eigen::Matrix2d& r);

/// Measurement covariance of a radar detection at (range, bearing).
Eigen::Matrix2d radar_measurement_cov(Point2 pos, Point2 radar_origin, const TrackerConfig& cfg);

/// Running average of the complex range-angle image of static returns.
struct ClutterProfile {
  Eigen::MatrixXcd avg_map;
  int n_frames_averaged = 0;
};

/// Subtracts the profile from the complex image (power floored) and zeroes
/// cells whose power did not rise above the profile's, then folds
/// the map into the profile: plain mean for the first clutter_window frames,
/// EMA with clutter_alpha afterwards. An empty profile passes the map through.
RangeAngleMap remove_clutter(const RangeAngleMap& map, ClutterProfile& profile, const TrackerConfig& cfg = {});

/// One bounding-box tracking step per track on a decluttered map.
std::vector<Track> track_step(const std::vector<Track>& tracks, const RangeAngleMap& decluttered, double t,
                              const TrackerConfig& cfg = {});

/// Re-anchor track identities on radio contexts by optimal assignment.
std::vector<Track> recalibrate(const std::vector<Track>& tracks, const std::vector<UserContext>& contexts, double t,
                               const TrackerConfig& cfg = {});

/// Minimum-cost one-to-one assignment for a rectangular cost matrix.
/// Returns, per row, the assigned column or -1.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// Tracks non-user radar objects (blockers) between frames.
class ObjectTracker {
 public:
  explicit ObjectTracker(TrackerConfig cfg = {}) : cfg_(cfg) {}

  /// Detect, discard user and sidelobe returns, associate, update.
  void step(const RangeAngleMap& decluttered, const std::vector<Track>& user_tracks, double t);
  const std::vector<Track>& tracks() const { return tracks_; }

 private:
  TrackerConfig cfg_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
};

/// Peaks of a decluttered map above noise + margin, with angle/range sidelobes
/// of stronger returns and weaker peaks within object_merge_radius of a
/// stronger kept peak removed. Peaks more than object_dynamic_range_db below
/// the strongest are dropped as leakage.
std::vector<MapPeak> detect_objects(const RangeAngleMap& decluttered, const TrackerConfig& cfg);

/// Mirror image of the base station (origin) across the reflector line.
Point2 virtual_bs(const ReflectorEstimate& reflector);

/// Departure angle of the reflected path toward `user`, or absent when the
/// specular point falls outside the reflector extent (0.1 m margin).
std::optional<double> reflected_path_angle(Point2 user, const ReflectorEstimate& reflector);
inline std::optional<double> reflected_path_angle(const Track& track, const ReflectorEstimate& reflector) {
  return reflected_path_angle(track.position(), reflector);
}

}  // namespace commrad
