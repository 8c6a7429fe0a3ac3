#pragma once

#include <optional>
#include <span>
#include <vector>

#include "commrad/beam_decision.hpp"
#include "commrad/geometry.hpp"
#include "commrad/tracking.hpp"

namespace commrad {

struct BlockageConfig {
  double region_width = 0.4;  // m
  double horizon = 5.0;       // s, prediction look-ahead
  double lead = 0.1;          // s, switch this early and revert this late

  friend bool operator==(const BlockageConfig&, const BlockageConfig&) = default;
};

/// Rectangle around a link segment.
struct BlockageRegion {
  Quad corners;  // start-left, end-left, end-right, start-right
  Point2 start, end;
  double width = 0.0;

  double length() const { return distance(start, end); }
  double area() const { return length() * width; }
};

BlockageRegion blockage_region(Point2 bs, Point2 user, double width = 0.4);

struct BlockageEvent {
  int user_id = 0;
  PathLabel path;
  double t_arrival = 0.0;
  double duration = 0.0;
  int blocker_id = 0;

  double t_end() const { return t_arrival + duration; }
  /// True when `t` falls inside the event widened by `lead` on both sides.
  bool covers(double t, double lead) const { return t >= t_arrival - lead && t <= t_end() + lead; }
};

/// Constant-velocity arrival of a blocker in a region. The blocker occupies a
/// segment of length l_B centred on its position along its direction of
/// motion; the event lasts l_B / speed. A stationary blocker already touching
/// the region gives an event lasting the whole horizon.
std::optional<BlockageEvent> predict_blockage(const Track& blocker, const BlockageRegion& region, double length_lB,
                                              double now, const BlockageConfig& cfg = {});

/// A beam the controller may use, with its estimated received strength.
struct CandidatePath {
  PathLabel label;
  double angle_deg = 0.0;
  double strength = 0.0;  // linear, comparable across candidates
};

/// Serve the strongest candidate unless an event covering `now` blocks it, in
/// which case switch to the strongest unblocked one. With every candidate
/// blocked the strongest beam is held and the outage flag is set.
BeamDecision mitigate(std::span<const BlockageEvent> events, std::span<const CandidatePath> paths, double now,
                      double lead = 0.1);
inline BeamDecision mitigate(const BlockageEvent& event, std::span<const CandidatePath> paths, double now,
                             double lead = 0.1) {
  return mitigate(std::span<const BlockageEvent>(&event, 1), paths, now, lead);
}

/// True when some event for `label` covers `now`.
bool path_blocked(std::span<const BlockageEvent> events, PathLabel label, double now, double lead);

}  // namespace commrad
