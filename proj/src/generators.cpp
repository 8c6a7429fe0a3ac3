#include "commrad/generators.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace commrad {

namespace {

UserSpec user(int id, std::vector<Waypoint> wps) {
  UserSpec u;
  u.user_id = id;
  u.waypoints = std::move(wps);
  return u;
}

ReflectorSpec wall(Point2 a, Point2 b, double coeff) {
  ReflectorSpec r;
  r.p1 = a;
  r.p2 = b;
  r.reflection_coeff = coeff;
  return r;
}

void add_wall(Scene& s, const ReflectorSpec& w) {
  s.reflectors.push_back(w);
  add_wall_clutter(s, w);
}

}  // namespace

void add_wall_clutter(Scene& scene, const ReflectorSpec& w, double spacing, double rcs) {
  const double len = distance(w.p1, w.p2);
  const int n = std::max(1, static_cast<int>(std::floor(len / spacing)));
  for (int i = 0; i <= n; ++i) scene.static_clutter.push_back({w.p1 + (w.p2 - w.p1) * (static_cast<double>(i) / n), rcs});
}

Scene crossing_2users(std::uint64_t seed) {
  Scene s;
  s.seed = seed;
  s.duration = 12.0;
  for (int side : {-1, 1}) {
    s.users.push_back(user(side < 0 ? 1 : 2, {{0.0, {side * -3.0, 4.0}},
                                              {5.0, {0.0, 6.0}},
                                              {7.0, {0.0, 6.0}},
                                              {12.0, {side * 3.0, 8.0}}}));
  }
  return s;
}

Scene crossing_4users(std::uint64_t seed) {
  Scene s;
  s.seed = seed;
  s.duration = 12.0;
  const Point2 corners[4] = {{-4, 4}, {4, 4}, {-4, 10}, {4, 10}};
  for (int k = 0; k < 4; ++k) {
    const Point2 from = corners[k], to = corners[3 - k];
    const double start = 0.5 * k;
    s.users.push_back(user(k + 1, {{0.0, from}, {start + 0.01, from}, {start + 10.01, to}}));
  }
  add_wall(s, wall({-5, 13}, {5, 13}, 0.5));
  return s;
}

Scene reflector_walk(std::uint64_t seed) {
  Scene s;
  s.seed = seed;
  s.duration = 10.0;
  s.users.push_back(user(1, {{0.0, {-5, 6}}, {10.0, {5, 6}}}));
  add_wall(s, wall({-15.0 / 7.0, 10}, {10.0 / 7.0, 10}, 0.6));
  return s;
}

Scene blocker_crossing(std::uint64_t seed) {
  Scene s;
  s.seed = seed;
  s.duration = 6.0;
  s.users.push_back(user(1, {{0.0, {-1, 8}}}));
  add_wall(s, wall({4, 2}, {4, 12}, 0.7));
  BlockerSpec b;
  b.waypoints = {{0.0, {1.5, 2}}, {10.0, {-8.5, 2}}};
  b.length_lB = 0.6;
  s.blockers.push_back(b);
  return s;
}

Scene mixed_suite(std::uint64_t seed) {
  Scene s;
  s.seed = seed;
  s.duration = 12.0;
  auto rng = make_stream(seed, 100, 0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
  const auto area_point = [&] { return Point2{uni(-4.0, 4.0), uni(3.5, 10.0)}; };

  const int n_users = 2 + static_cast<int>(u01(rng) * 3);
  int id = 1;
  // A crossing pair meeting at a random point, optionally pausing together.
  {
    const Point2 meet = {uni(-1.5, 1.5), uni(5.0, 8.0)};
    const double half = uni(2.5, 3.5), tilt = uni(-0.4, 0.4);
    const double t_meet = uni(3.0, 5.0), dwell = u01(rng) < 0.5 ? uni(1.0, 2.0) : 0.0;
    const double speed = half / t_meet;
    const double t_end = std::min(s.duration, t_meet + dwell + half / speed);
    for (int side : {-1, 1}) {
      const Point2 dir = Point2{static_cast<double>(side), tilt} / std::hypot(1.0, tilt);
      const Point2 dir_out = Point2{static_cast<double>(side), -tilt} / std::hypot(1.0, tilt);
      std::vector<Waypoint> w = {{0.0, meet - dir * half}, {t_meet, meet}};
      if (dwell > 0) w.push_back({t_meet + dwell, meet});
      const double travel = t_end - (t_meet + dwell);
      w.push_back({t_end, meet + dir_out * (travel * speed)});
      s.users.push_back(user(id++, std::move(w)));
    }
  }
  // Remaining users wander between random points with an optional stop.
  while (id <= n_users) {
    std::vector<Waypoint> w = {{0.0, area_point()}};
    double t = 0.0;
    while (t < s.duration) {
      const Point2 next = area_point();
      const double speed = uni(0.5, 1.2);
      const double leg = distance(w.back().pos, next) / speed;
      if (leg < 0.1) continue;
      t += leg;
      w.push_back({t, next});
      if (u01(rng) < 0.4) {
        t += uni(0.5, 2.0);
        w.push_back({t, next});
      }
    }
    s.users.push_back(user(id++, std::move(w)));
  }

  const int n_walls = static_cast<int>(u01(rng) * 3);
  std::vector<int> sides = {0, 1, 2};
  std::shuffle(sides.begin(), sides.end(), rng);
  for (int k = 0; k < n_walls; ++k) {
    const double coeff = uni(0.4, 0.8);
    switch (sides[k]) {
      case 0: add_wall(s, wall({-uni(5.5, 7.0), 1.5}, {-uni(5.5, 7.0), 13.0}, coeff)); break;
      case 1: add_wall(s, wall({uni(5.5, 7.0), 1.5}, {uni(5.5, 7.0), 13.0}, coeff)); break;
      default: {
        const double y = uni(12.0, 14.0);
        add_wall(s, wall({-6.0, y}, {6.0, y}, coeff));
      }
    }
  }

  const int n_blockers = static_cast<int>(u01(rng) * 3);
  for (int k = 0; k < n_blockers; ++k) {
    BlockerSpec b;
    const double y = uni(1.5, 3.0), speed = uni(0.7, 1.5), start = uni(0.5, 8.0);
    const double dir = u01(rng) < 0.5 ? 1.0 : -1.0;
    const Point2 from = {-6.0 * dir, y}, to = {6.0 * dir, y};
    b.waypoints = {{0.0, from}, {start, from}, {start + 12.0 / speed, to}};
    b.length_lB = uni(0.4, 0.7);
    s.blockers.push_back(b);
  }
  return s;
}

const std::vector<std::string>& generator_names() {
  static const std::vector<std::string> names = {"crossing_2users", "crossing_4users", "reflector_walk",
                                                 "blocker_crossing", "mixed_suite"};
  return names;
}

Scene generate_scene(std::string_view name, std::uint64_t seed) {
  if (name == "crossing_2users") return crossing_2users(seed);
  if (name == "crossing_4users") return crossing_4users(seed);
  if (name == "reflector_walk") return reflector_walk(seed);
  if (name == "blocker_crossing") return blocker_crossing(seed);
  if (name == "mixed_suite") return mixed_suite(seed);
  throw ConfigError("unknown scene generator '" + std::string(name) + "'");
}

}  // namespace commrad
