#pragma once

#include <array>
#include <optional>
#include <span>

#include "commrad/common.hpp"

namespace commrad {

/// Mirror image of `p` across the infinite line through `a` and `b`.
Point2 mirror_across_line(Point2 p, Point2 a, Point2 b);

/// Intersection of the infinite lines (p1,p2) and (q1,q2). Returns the
/// parameters (s along p, u along q) with point = p1 + s*(p2-p1); absent when
/// the lines are parallel.
struct LineHit {
  double s = 0.0;
  double u = 0.0;
  Point2 point;
};
std::optional<LineHit> intersect_lines(Point2 p1, Point2 p2, Point2 q1, Point2 q2);

bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2);

/// Oriented rectangle as four corners in traversal order.
using Quad = std::array<Point2, 4>;

bool quad_contains(const Quad& q, Point2 p);
bool segment_intersects_quad(Point2 a, Point2 b, const Quad& q);

/// Parameter interval [t_in, t_out] over which the line origin + t*dir lies in
/// the convex quad, or absent when the line misses it.
std::optional<std::pair<double, double>> clip_line_to_quad(Point2 origin, Point2 dir, const Quad& q);

/// Projection parameter of p onto the line through a with unit direction u.
inline double project_onto(Point2 p, Point2 a, Point2 u) { return (p - a).dot(u); }

/// Distance from p to the infinite line through a and b.
double distance_to_line(Point2 p, Point2 a, Point2 b);

}  // namespace commrad
