#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace commrad {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = std::numbers::pi;

// Error taxonomy. Everything derives from Error so callers can catch once.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutOfRangeError : Error {
  using Error::Error;
};
struct NotFoundError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct GeometryError : Error {
  using Error::Error;
};
struct EstimationError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// 2-D point / vector in meters, base station frame.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
  Point2 operator+(Point2 o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  Point2 operator/(double s) const { return {x / s, y / s}; }
  Point2 operator-() const { return {-x, -y}; }
  double dot(Point2 o) const { return x * o.x + y * o.y; }
  double cross(Point2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  Point2 perp() const { return {-y, x}; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(Point2 a, Point2 b) { return (a - b).norm(); }

/// Bearing from `from` to `to`: 0 deg along +y (boresight), positive clockwise (toward +x).
inline double bearing_deg(Point2 from, Point2 to) {
  const Point2 d = to - from;
  return rad2deg(std::atan2(d.x, d.y));
}

/// Unit vector for a bearing in the boresight convention.
inline Point2 bearing_direction(double deg) {
  const double r = deg2rad(deg);
  return {std::sin(r), std::cos(r)};
}

/// Point at `range` along `bearing` from `origin`.
inline Point2 polar_to_point(Point2 origin, double range, double bearing) {
  return origin + bearing_direction(bearing) * range;
}

/// Independent, reproducible random stream for (seed, purpose, index).
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace commrad
