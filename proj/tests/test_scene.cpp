#include <doctest.h>

#include <random>

#include "commrad/scene.hpp"

using namespace commrad;

namespace {

Scene one_user(std::vector<Waypoint> wps) {
  Scene s;
  s.users.push_back({1, std::move(wps), 1.0});
  return s;
}

SceneSnapshot static_snapshot(Point2 user, std::vector<ReflectorSpec> refl = {}, std::vector<BlockerState> blk = {}) {
  SceneSnapshot snap;
  snap.users.push_back({1, user, {}, 1.0});
  snap.reflectors = std::move(refl);
  snap.blockers = std::move(blk);
  return snap;
}

// Independent image-source oracle: reflect through the mirror and walk the
// straight line to the receiver.
double image_length(Point2 src, Point2 rx, double wall_y) {
  const Point2 img{src.x, 2 * wall_y - src.y};
  return distance(img, rx);
}

}  // namespace

TEST_CASE("sample_scene interpolates waypoints") {
  const auto s = one_user({{0.0, {0, 5}}, {10.0, {10, 5}}});
  CHECK(sample_scene(s, 0.0).users[0].pos == Point2{0, 5});
  CHECK(sample_scene(s, 5.0).users[0].pos.x == doctest::Approx(5.0));
  const auto p = sample_scene(s, 2.5).users[0].pos;
  // Oracle: a + (b - a) * f, f = 0.25.
  CHECK(p.x == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(p.y == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(sample_scene(s, 2.5).users[0].vel.x == doctest::Approx(1.0));
}

TEST_CASE("sample_scene range and waypoint exactness") {
  const auto s = one_user({{0.0, {0, 5}}, {3.0, {1.7, 6.1}}, {10.0, {-2.3, 4.9}}});
  CHECK_THROWS_AS(sample_scene(s, -0.01), OutOfRangeError);
  CHECK_THROWS_AS(sample_scene(s, 10.01), OutOfRangeError);
  CHECK(sample_scene(s, 3.0).users[0].pos == Point2{1.7, 6.1});
  CHECK(sample_scene(s, 10.0).users[0].pos == Point2{-2.3, 4.9});
  // Continuity across a waypoint.
  const auto a = sample_scene(s, 3.0 - 1e-9).users[0].pos;
  const auto b = sample_scene(s, 3.0 + 1e-9).users[0].pos;
  CHECK(distance(a, b) < 1e-8);
}

TEST_CASE("scene validation names the field") {
  auto s = one_user({{0.0, {0, 5}}, {0.0, {1, 5}}});
  try {
    s.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("scene.users[0].waypoints[1].t") != std::string::npos);
  }
  s = one_user({{0.0, {0, 5}}, {1.0, {5, 5}}});
  CHECK_THROWS_AS(s.validate(), ConfigError);  // 5 m/s exceeds the 2 m/s bound
  s = one_user({{0.0, {0, 5}}});
  s.reflectors.push_back({{1, 1}, {1, 1}, 0.5});
  CHECK_THROWS_AS(s.validate(), ConfigError);
  Scene empty;
  CHECK_THROWS_AS(empty.validate(), ConfigError);
}

TEST_CASE("compute_paths: boresight direct path") {
  const auto paths = compute_paths(static_snapshot({0, 5}), 1, 28e9);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].kind == PathKind::direct);
  CHECK(paths[0].departure_angle_deg == doctest::Approx(0.0));
  CHECK(paths[0].length == doctest::Approx(5.0));
  CHECK(paths[0].tof == doctest::Approx(5.0 / kSpeedOfLight));
  CHECK_THROWS_AS(compute_paths(static_snapshot({0, 5}), 7, 28e9), NotFoundError);
}

TEST_CASE("compute_paths: wall y=3 reflection") {
  const auto paths = compute_paths(static_snapshot({4, 2}, {{{-5, 3}, {5, 3}, 0.5}}), 1, 28e9);
  REQUIRE(paths.size() == 2);
  const auto& r = paths[1];
  CHECK(r.kind == PathKind::reflected);
  CHECK(r.reflector_index == 0);
  CHECK(r.departure_angle_deg == doctest::Approx(45.0));
  CHECK(r.length == doctest::Approx(4.0 * std::sqrt(2.0)));
  CHECK(r.specular_point.x == doctest::Approx(3.0));
  CHECK(r.specular_point.y == doctest::Approx(3.0));
  // Reflection coefficient scales the amplitude relative to free space at that length.
  const double lambda = kSpeedOfLight / 28e9;
  const double fs = std::sqrt(db_to_linear(friis_rss(r.length, lambda, 0, 0, 0)));
  CHECK(std::abs(r.gain) == doctest::Approx(0.5 * fs));

  const auto short_wall = compute_paths(static_snapshot({4, 2}, {{{-5, 3}, {2, 3}, 0.5}}), 1, 28e9);
  CHECK(short_wall.size() == 1);
}

TEST_CASE("compute_paths: blockers") {
  BlockerState b;
  b.pos = {0.1, 2.5};
  b.vel = {1.0, 0.0};
  b.length_lB = 0.5;
  auto paths = compute_paths(static_snapshot({0, 5}, {}, {b}), 1, 28e9);
  CHECK(paths[0].blocked);
  CHECK(paths[0].blockage_loss_db == doctest::Approx(30.0));
  CHECK(std::abs(paths[0].effective_gain()) == doctest::Approx(std::abs(paths[0].gain) * std::pow(10.0, -1.5)));
  // Occupancy extends l_B/2 = 0.25 across motion (along y here) and 0.15 along it.
  b.pos = {0.2, 2.5};
  CHECK_FALSE(compute_paths(static_snapshot({0, 5}, {}, {b}), 1, 28e9)[0].blocked);
  b.pos = {0.0, 5.2};
  CHECK(compute_paths(static_snapshot({0, 5}, {}, {b}), 1, 28e9)[0].blocked);
}

TEST_CASE("friis_rss") {
  const double lambda = kSpeedOfLight / 28e9;
  // Numeric evaluation with c = 299792458 m/s: -81.391 dBm.
  CHECK(friis_rss(10.0, lambda, 0, 0, 0) == doctest::Approx(-20.0 * std::log10(4.0 * kPi * 10.0 / lambda)).epsilon(1e-12));
  CHECK(friis_rss(10.0, lambda, 0, 0, 0) == doctest::Approx(-81.391).epsilon(1e-5));
  CHECK(friis_rss(1.0, lambda, 0, 0, 0) - friis_rss(2.0, lambda, 0, 0, 0) == doctest::Approx(6.0206).epsilon(1e-5));
  CHECK(friis_rss(lambda / (4 * kPi), lambda, 3, 2, 1) == doctest::Approx(6.0));
  CHECK(friis_rss(1.0, lambda, 0, 0, 0) - friis_rss(10.0, lambda, 0, 0, 0) == doctest::Approx(20.0));
  CHECK_THROWS_AS(friis_rss(0.0, lambda, 0, 0, 0), DomainError);
  CHECK_THROWS_AS(friis_rss(-1.0, lambda, 0, 0, 0), DomainError);
  CHECK_THROWS_AS(friis_rss(1.0, 0.0, 0, 0, 0), DomainError);
}

TEST_CASE("property: mirror involution and image-source identity") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-8, 8);
  int reflected = 0;
  for (int i = 0; i < 500; ++i) {
    const double wall_y = 1.0 + std::abs(u(rng));
    const Point2 user{u(rng), std::uniform_real_distribution<double>(0.5, wall_y - 0.1)(rng)};
    const Point2 a{-20, wall_y}, b{20, wall_y};
    const Point2 bs{};
    const Point2 twice = mirror_across_line(mirror_across_line(bs, a, b), a, b);
    CHECK(distance(twice, bs) < 1e-9);
    const auto paths = compute_paths(static_snapshot(user, {{a, b, 0.7}}), 1, 28e9);
    if (paths.size() == 2) {
      ++reflected;
      CHECK(std::abs(paths[1].length - image_length(bs, user, wall_y)) < 1e-9);
      CHECK(paths[1].length >= paths[0].length);
      CHECK(paths[1].tof == doctest::Approx(paths[1].length / kSpeedOfLight));
    }
  }
  CHECK(reflected > 400);
}

TEST_CASE("compute_paths is bit-reproducible") {
  const auto snap = static_snapshot({1.3, 4.4}, {{{-5, 7}, {5, 7.5}, 0.6}});
  const auto a = compute_paths(snap, 1, 28e9);
  const auto b = compute_paths(snap, 1, 28e9);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].gain == b[i].gain);
    CHECK(a[i].length == b[i].length);
  }
}
