#pragma once

#include <algorithm>
#include <iosfwd>
#include <vector>

#include "commrad/radar.hpp"
#include "commrad/radio.hpp"

namespace commrad {

/// Slope angle folded into (-90, 90].
double fold_orientation(double deg);

/// Unit vector with the given slope angle (counter-clockwise from +x).
inline Point2 slope_unit(double slope_deg) {
  const double r = deg2rad(slope_deg);
  return {std::cos(r), std::sin(r)};
}

struct ContextConfig {
  double friis_calibration_db = 0.0;  // added to measured RSS before Friis inversion
  double radar_angle_gate_deg = 8.0;  // radar peaks must sit this close to the beam direction
  double radar_margin_db = 13.0;      // radar peaks must clear the map noise floor by this much
  double angle_grid_deg = 0.5;
  double delay_grid_s = 1e-9;
  int max_paths = 3;
  double eig_threshold_db = 10.0;
  double peak_threshold_db = 6.0;
  int smoothing_length = 32;
  double cluster_angle_deg = 10.0;
  double cluster_distance = 0.5;

  friend bool operator==(const ContextConfig&, const ContextConfig&) = default;
};

struct UserContext {
  int user_id = 0;
  double angle_deg = 0.0;
  double distance = 0.0;
  double coarse_distance = 0.0;
  bool radar_refined = false;
  double timestamp = 0.0;

  Point2 position(Point2 bs = {}) const { return polar_to_point(bs, distance, angle_deg); }
};

/// Friis inversion for the direct path seen through an aligned beam.
double coarse_distance_from_rss(double rss_dbm, const RadioConfig& radio, double calibration_db = 0.0);

/// Best beam angle, Friis distance, then the nearest radar return within the gate.
UserContext acquire_user_context(const BeamScanReport& report, int user_id, const RangeAngleMap& radar_map,
                                 const RadioConfig& radio, double range_res, const ContextConfig& cfg = {});

/// Range gate around a coarse distance.
inline double radar_gate(double coarse_distance, double range_res) {
  return std::max(2.0 * range_res, 0.25 * coarse_distance);
}

struct PathEstimate {
  double angle_deg = 0.0;
  double rel_tof = 0.0;
  bool is_direct = false;
  double strength = 0.0;  // path power before beamforming gain, mW
};

/// Beamspace MUSIC over angle, then per-path MUSIC over delay. Sorted by rel_tof.
std::vector<PathEstimate> estimate_paths(const UserScan& scan, const RadioConfig& radio, const ContextConfig& cfg = {});
std::vector<PathEstimate> estimate_paths(const BeamScanReport& report, int user_id, const RadioConfig& radio,
                                         const ContextConfig& cfg = {});

struct ReflectionObservation {
  Point2 point;
  double orientation_deg = 0.0;  // slope angle of the reflector line, (-90, 90]
  double strength = 0.0;         // reflected path power at observation time, mW
  double timestamp = 0.0;
};

/// Point on the reflector and its slope from the ellipse with foci {bs, user}.
ReflectionObservation estimate_reflector_point(Point2 bs, const UserContext& user, const PathEstimate& reflected);

struct ReflectorEstimate {
  Point2 point;
  double orientation_deg = 0.0;
  Point2 endpoint_a;  // smaller projection along the line direction
  Point2 endpoint_b;
  int n_observations = 0;
  bool low_confidence = false;
  double mean_strength = 0.0;

  /// Unit vector along the line, pointing from endpoint_a toward endpoint_b.
  Point2 direction() const { return slope_unit(orientation_deg); }
};

/// Greedy clustering of observations into line reflectors.
std::vector<ReflectorEstimate> accumulate_reflector(const std::vector<ReflectionObservation>& history,
                                                    const ContextConfig& cfg = {});

/// Append-only reflector history with a cached clustering.
class ReflectorMap {
 public:
  explicit ReflectorMap(ContextConfig cfg = {}) : cfg_(cfg) {}

  void add(const ReflectionObservation& obs);
  void clear();
  const std::vector<ReflectionObservation>& history() const { return history_; }
  const std::vector<ReflectorEstimate>& estimates() const { return estimates_; }

 private:
  ContextConfig cfg_;
  std::vector<ReflectionObservation> history_;
  std::vector<ReflectorEstimate> estimates_;
};

/// Rows {x1,y1,x2,y2,phi,n_obs} with a header line.
void write_reflectors_csv(std::ostream& out, const std::vector<ReflectorEstimate>& estimates);

}  // namespace commrad
