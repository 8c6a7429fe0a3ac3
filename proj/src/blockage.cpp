#include "commrad/blockage.hpp"

#include <algorithm>
#include <cmath>

namespace commrad {

BlockageRegion blockage_region(Point2 bs, Point2 user, double width) {
  if (!(width > 0)) throw DomainError("blockage_region: width must be > 0");
  const double len = distance(bs, user);
  if (len < 1e-12) throw GeometryError("blockage_region: base station and user coincide");
  const Point2 side = ((user - bs) / len).perp() * (width / 2.0);
  BlockageRegion r;
  r.corners = {bs + side, user + side, user - side, bs - side};
  r.start = bs;
  r.end = user;
  r.width = width;
  return r;
}

namespace {

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double len2 = d.dot(d);
  const double s = len2 > 0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return distance(p, a + d * s);
}

bool disc_touches_quad(Point2 c, double radius, const Quad& q) {
  if (quad_contains(q, c)) return true;
  for (std::size_t i = 0; i < 4; ++i) {
    if (point_segment_distance(c, q[i], q[(i + 1) % 4]) <= radius) return true;
  }
  return false;
}

}  // namespace

std::optional<BlockageEvent> predict_blockage(const Track& blocker, const BlockageRegion& region, double length_lB,
                                              double now, const BlockageConfig& cfg) {
  if (!(length_lB > 0)) throw DomainError("predict_blockage: blocker length must be > 0");
  const Point2 vel = blocker.velocity();
  const Point2 centre = blocker.position() + vel * (now - blocker.last_update);
  const double speed = vel.norm();
  BlockageEvent ev;
  ev.blocker_id = blocker.user_id;
  if (speed < 1e-9) {
    if (!disc_touches_quad(centre, length_lB / 2.0, region.corners)) return std::nullopt;
    ev.t_arrival = now;
    ev.duration = cfg.horizon;
    return ev;
  }
  // Footprint at now + tau spans [speed*tau - lB/2, speed*tau + lB/2] along
  // the motion line; the region spans [a, b] on the same line.
  const auto span = clip_line_to_quad(centre, vel / speed, region.corners);
  if (!span) return std::nullopt;
  const auto [a, b] = *span;
  if (b + length_lB / 2.0 < 0.0) return std::nullopt;  // already passed
  const double tau = std::max(0.0, (a - length_lB / 2.0) / speed);
  if (tau > cfg.horizon) return std::nullopt;
  ev.t_arrival = now + tau;
  ev.duration = length_lB / speed;
  return ev;
}

bool path_blocked(std::span<const BlockageEvent> events, PathLabel label, double now, double lead) {
  return std::any_of(events.begin(), events.end(),
                     [&](const BlockageEvent& e) { return e.path == label && e.covers(now, lead); });
}

BeamDecision mitigate(std::span<const BlockageEvent> events, std::span<const CandidatePath> paths, double now,
                      double lead) {
  if (paths.empty()) {
    BeamDecision d;
    d.outage = true;
    return d;
  }
  const auto stronger = [](const CandidatePath& a, const CandidatePath& b) { return a.strength < b.strength; };
  const CandidatePath& best = *std::max_element(paths.begin(), paths.end(), stronger);
  if (!path_blocked(events, best.label, now, lead)) return BeamDecision::single(best.angle_deg, best.label);
  const CandidatePath* alt = nullptr;
  for (const auto& p : paths) {
    if (path_blocked(events, p.label, now, lead)) continue;
    if (!alt || p.strength > alt->strength) alt = &p;
  }
  if (alt) return BeamDecision::single(alt->angle_deg, alt->label);
  auto held = BeamDecision::single(best.angle_deg, best.label);
  held.outage = true;
  return held;
}

}  // namespace commrad
