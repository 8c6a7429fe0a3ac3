#include "commrad/geometry.hpp"

#include <algorithm>
#include <limits>

namespace commrad {

Point2 mirror_across_line(Point2 p, Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double len2 = d.dot(d);
  if (len2 == 0.0) throw GeometryError("mirror_across_line: degenerate line");
  const double s = (p - a).dot(d) / len2;
  const Point2 foot = a + d * s;
  return foot * 2.0 - p;
}

std::optional<LineHit> intersect_lines(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const Point2 r = p2 - p1;
  const Point2 s = q2 - q1;
  const double denom = r.cross(s);
  if (std::abs(denom) < 1e-15 * std::max(1.0, r.norm() * s.norm())) return std::nullopt;
  const Point2 qp = q1 - p1;
  LineHit hit;
  hit.s = qp.cross(s) / denom;
  hit.u = qp.cross(r) / denom;
  hit.point = p1 + r * hit.s;
  return hit;
}

namespace {

int orientation(Point2 a, Point2 b, Point2 c) {
  const double v = (b - a).cross(c - a);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool on_segment(Point2 a, Point2 b, Point2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

bool quad_contains(const Quad& q, Point2 p) {
  // Works for either winding; p is inside when it sits on the same side of every edge.
  int sign = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double c = (q[(i + 1) % 4] - q[i]).cross(p - q[i]);
    if (c == 0.0) continue;
    const int s = c > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return true;
}

bool segment_intersects_quad(Point2 a, Point2 b, const Quad& q) {
  if (quad_contains(q, a) || quad_contains(q, b)) return true;
  for (std::size_t i = 0; i < 4; ++i) {
    if (segments_intersect(a, b, q[i], q[(i + 1) % 4])) return true;
  }
  return false;
}

std::optional<std::pair<double, double>> clip_line_to_quad(Point2 origin, Point2 dir, const Quad& q) {
  // Cyrus-Beck against each edge half-plane.
  double t_in = -std::numeric_limits<double>::infinity();
  double t_out = std::numeric_limits<double>::infinity();
  // Determine winding so the inward side is known.
  double area2 = 0.0;
  for (std::size_t i = 0; i < 4; ++i) area2 += q[i].cross(q[(i + 1) % 4]);
  const double wind = area2 > 0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 e = q[(i + 1) % 4] - q[i];
    // inside: wind * e.cross(p - q[i]) >= 0
    const double num = wind * e.cross(origin - q[i]);
    const double den = wind * e.cross(dir);
    if (den == 0.0) {
      if (num < 0) return std::nullopt;
      continue;
    }
    const double t = -num / den;
    if (den > 0) t_in = std::max(t_in, t);
    else t_out = std::min(t_out, t);
    if (t_in > t_out) return std::nullopt;
  }
  return std::make_pair(t_in, t_out);
}

double distance_to_line(Point2 p, Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double len = d.norm();
  if (len == 0.0) return distance(p, a);
  return std::abs(d.cross(p - a)) / len;
}

}  // namespace commrad
