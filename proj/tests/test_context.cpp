#include <doctest.h>

#include <sstream>

#include "commrad/context.hpp"
#include "oracles.hpp"

using namespace commrad;

namespace {

Path make_path(double angle, double length, double amp, double phase = 0.0) {
  Path p;
  p.departure_angle_deg = angle;
  p.length = length;
  p.tof = length / kSpeedOfLight;
  p.gain = std::polar(amp, phase);
  return p;
}

UserContext context_at(Point2 user, double t = 0.0) {
  UserContext c;
  c.user_id = 1;
  c.angle_deg = bearing_deg({}, user);
  c.distance = user.norm();
  c.timestamp = t;
  return c;
}

PathEstimate reflected(double angle, double excess_length) {
  PathEstimate p;
  p.angle_deg = angle;
  p.rel_tof = excess_length / kSpeedOfLight;
  return p;
}

const PathEstimate& direct_of(const std::vector<PathEstimate>& v) {
  for (const auto& p : v) {
    if (p.is_direct) return p;
  }
  throw std::logic_error("no direct path");
}

}  // namespace

TEST_CASE("coarse distance inverts Friis through the aligned beam") {
  RadioConfig radio;
  const double lambda = radio.wavelength();
  const double ref = friis_rss(1.0, lambda, radio.tx_power_dbm, linear_to_db(radio.n_antennas), 0.0);
  CHECK(coarse_distance_from_rss(ref, radio) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(coarse_distance_from_rss(ref - 20.0 * std::log10(2.0), radio) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(coarse_distance_from_rss(ref - 6.02, radio) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(coarse_distance_from_rss(ref - 3.0, radio, 3.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("acquire_user_context: single user on boresight") {
  RadioConfig radio;
  RadarConfig radar;
  SceneSnapshot snap;
  snap.users.push_back({1, {0, 5}, {}, 1.0});
  auto rng = make_stream(1, 0, 0);
  const auto report = run_beam_scan(snap, radio, rng);
  const auto map = range_angle_map(synthesize_frame(snap, radar, rng), radar);
  const double rr = resolution_params(radar).range_res;
  const auto ctx = acquire_user_context(report, 1, map, radio, rr);
  CHECK(std::abs(ctx.angle_deg) <= 0.5);
  CHECK(ctx.radar_refined);
  CHECK(std::abs(ctx.distance - 5.0) <= rr);
  CHECK(ctx.position().y == doctest::Approx(ctx.distance).epsilon(1e-3));
  CHECK_THROWS_AS(acquire_user_context(report, 2, map, radio, rr), NotFoundError);
}

TEST_CASE("acquire_user_context: radar refinement respects the gate") {
  RadioConfig radio;
  RadarConfig radar;
  const double rr = resolution_params(radar).range_res;
  SceneSnapshot radar_view;
  radar_view.users.push_back({1, {0, 5}, {}, 1.0});
  auto rng = make_stream(2, 0, 0);
  const auto map = range_angle_map(synthesize_frame(radar_view, radar, rng), radar);

  const auto report_with_coarse = [&](double coarse) {
    BeamScanReport r;
    UserScan s;
    s.user_id = 1;
    s.rss_dbm.assign(radio.codebook_size, -120.0);
    s.rss_dbm[radio.nearest_beam(0.0)] =
        friis_rss(coarse, radio.wavelength(), radio.tx_power_dbm, linear_to_db(radio.n_antennas), 0.0);
    r.users.push_back(s);
    return r;
  };
  // Coarse 3.6 m: gate max(1.5, 0.9) = 1.5 m covers the 5.0 m return.
  auto ctx = acquire_user_context(report_with_coarse(3.6), 1, map, radio, rr);
  CHECK(ctx.coarse_distance == doctest::Approx(3.6));
  CHECK(ctx.radar_refined);
  CHECK(std::abs(ctx.distance - 5.0) <= 0.1);
  // Coarse 3.2 m: gate 1.5 m ends at 4.7 m, the return stays outside.
  ctx = acquire_user_context(report_with_coarse(3.2), 1, map, radio, rr);
  CHECK_FALSE(ctx.radar_refined);
  CHECK(ctx.distance == doctest::Approx(3.2));
  CHECK(radar_gate(3.2, rr) == doctest::Approx(1.5).epsilon(1e-3));
  CHECK(radar_gate(10.0, rr) == doctest::Approx(2.5));
}

TEST_CASE("property: radar refinement never leaves the gate") {
  RadioConfig radio;
  RadarConfig radar;
  const double rr = resolution_params(radar).range_res;
  std::mt19937_64 pick(8);
  std::uniform_real_distribution<double> xs(-6, 6), ys(2, 20);
  for (int i = 0; i < 30; ++i) {
    SceneSnapshot snap;
    snap.users.push_back({1, {xs(pick), ys(pick)}, {}, 1.0});
    snap.static_clutter.push_back({{xs(pick), ys(pick)}, 3.0});
    snap.reflectors.push_back({{-10, 22}, {10, 22}, 0.8});
    auto rng = make_stream(3, 0, static_cast<std::uint64_t>(i));
    const auto report = run_beam_scan(snap, radio, rng);
    const auto map = range_angle_map(synthesize_frame(snap, radar, rng), radar);
    const auto ctx = acquire_user_context(report, 1, map, radio, rr);
    CHECK(std::abs(ctx.distance - ctx.coarse_distance) <= radar_gate(ctx.coarse_distance, rr) + 1e-12);
  }
}

TEST_CASE("estimate_paths: one path") {
  RadioConfig radio;
  const auto scan = synthesize_user_scan(1, {make_path(20.0, 7.0, 1e-4, 0.4)}, radio, nullptr);
  const auto est = estimate_paths(scan, radio);
  REQUIRE(est.size() == 1);
  CHECK(est[0].angle_deg == doctest::Approx(20.0).epsilon(0.05));
  CHECK(std::abs(est[0].angle_deg - 20.0) <= 1.0);
  CHECK(est[0].rel_tof == 0.0);
  CHECK(est[0].is_direct);
  CHECK(est[0].strength == doctest::Approx(db_to_linear(radio.tx_power_dbm) * 1e-8).epsilon(1e-6));
}

TEST_CASE("estimate_paths: direct and reflected with 3 m excess") {
  RadioConfig radio;
  const auto scan = synthesize_user_scan(1, {make_path(-10.0, 6.0, 1e-4, 0.2), make_path(35.0, 9.0, 4e-5, 2.5)}, radio,
                                         nullptr);
  const auto est = estimate_paths(scan, radio);
  REQUIRE(est.size() == 2);
  CHECK(est[0].is_direct);
  CHECK_FALSE(est[1].is_direct);
  CHECK(std::abs(est[0].angle_deg + 10.0) <= 0.5);
  CHECK(std::abs(est[1].angle_deg - 35.0) <= 0.5);
  CHECK(std::abs(est[1].rel_tof - 10.0e-9) <= 1e-9);
  CHECK(est[1].strength < est[0].strength);
}

TEST_CASE("estimate_paths: delay tie goes to the stronger path") {
  RadioConfig radio;
  const auto scan = synthesize_user_scan(1, {make_path(-20.0, 8.0, 3e-5, 0.0), make_path(25.0, 8.1, 9e-5, 1.0)}, radio,
                                         nullptr);
  const auto est = estimate_paths(scan, radio);
  REQUIRE(est.size() == 2);
  CHECK(std::abs(est[0].rel_tof - est[1].rel_tof) < 1e-9);
  CHECK(std::abs(direct_of(est).angle_deg - 25.0) <= 0.5);
  int n_direct = 0;
  for (const auto& p : est) n_direct += p.is_direct;
  CHECK(n_direct == 1);
}

TEST_CASE("estimate_paths: noise-only report fails") {
  RadioConfig radio;
  UserScan scan;
  scan.csi = Eigen::MatrixXcd::Zero(radio.codebook_size, radio.n_subcarriers);
  CHECK_THROWS_AS(estimate_paths(scan, radio), EstimationError);
  scan.csi = Eigen::MatrixXcd::Zero(radio.codebook_size, 1);
  CHECK_THROWS_AS(estimate_paths(scan, radio), EstimationError);
}

TEST_CASE("estimate_paths: noisy report still separates a strong reflection") {
  RadioConfig radio;
  auto rng = make_stream(4, 0, 0);
  const double lambda = radio.wavelength();
  const auto amp = [&](double len) { return std::sqrt(db_to_linear(friis_rss(len, lambda, 0, 0, 0))); };
  const auto scan = synthesize_user_scan(1, {make_path(5.0, 6.0, amp(6.0), 0.3), make_path(-30.0, 12.0, 0.7 * amp(12.0), 1.9)},
                                         radio, &rng);
  const auto est = estimate_paths(scan, radio);
  REQUIRE(est.size() >= 2);
  CHECK(std::abs(direct_of(est).angle_deg - 5.0) <= 1.0);
  bool found = false;
  for (const auto& p : est) found |= !p.is_direct && std::abs(p.angle_deg + 30.0) <= 1.0 && std::abs(p.rel_tof - 20.01e-9) < 2e-9;
  CHECK(found);
}

TEST_CASE("property: MUSIC agrees with grid maximum likelihood on noiseless pairs") {
  RadioConfig radio;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ang(-55, 55), len(3, 15), ex(0.6, 8), ph(0, 2 * kPi), ratio(0.3, 0.9);
  for (int trial = 0; trial < 6; ++trial) {
    const double a1 = ang(rng);
    double a2 = ang(rng);
    while (std::abs(a2 - a1) < 7.16) a2 = ang(rng);
    const double l1 = len(rng), l2 = l1 + ex(rng);
    const auto scan = synthesize_user_scan(1, {make_path(a1, l1, 1e-4, ph(rng)), make_path(a2, l2, ratio(rng) * 1e-4, ph(rng))},
                                           radio, nullptr);
    const auto est = estimate_paths(scan, radio);
    const auto ml = oracle::two_path_grid_ml(scan, radio);
    REQUIRE(est.size() == 2);
    for (const auto& e : est) {
      double gap = 1e9;
      for (double g : ml.angles_deg) gap = std::min(gap, std::abs(g - e.angle_deg));
      CHECK(gap <= 0.5 + 1e-9);
    }
    const double ml_rel = std::abs(ml.delays_s[1] - ml.delays_s[0]);
    CHECK(std::abs(est[1].rel_tof - ml_rel) <= 1e-9 + 1e-12);
    CHECK(std::abs(direct_of(est).angle_deg - a1) <= 0.5);
  }
}

TEST_CASE("estimate_reflector_point: symmetric foci") {
  const auto obs = estimate_reflector_point({}, context_at({2, 0}), reflected(bearing_deg({}, {1, std::sqrt(3.0)}), 2.0));
  CHECK(obs.point.x == doctest::Approx(1.0));
  CHECK(obs.point.y == doctest::Approx(std::sqrt(3.0)));
  CHECK(obs.orientation_deg == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("estimate_reflector_point: wall y=3") {
  const auto obs = estimate_reflector_point({}, context_at({4, 2}), reflected(45.0, 4 * std::sqrt(2.0) - std::sqrt(20.0)));
  CHECK(obs.point.x == doctest::Approx(3.0));
  CHECK(obs.point.y == doctest::Approx(3.0));
  CHECK(std::abs(obs.orientation_deg) < 1e-9);
}

TEST_CASE("estimate_reflector_point: degenerate inputs") {
  CHECK_THROWS_AS(estimate_reflector_point({}, context_at({2, 0}), reflected(30.0, 0.0)), GeometryError);
  PathEstimate direct = reflected(30.0, 1.0);
  direct.is_direct = true;
  CHECK_THROWS_AS(estimate_reflector_point({}, context_at({2, 0}), direct), GeometryError);
}

TEST_CASE("property: ellipse consistency and specular check") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> xs(-6, 6), ys(1, 8), ang(-60, 60), ex(0.2, 6);
  for (int i = 0; i < 300; ++i) {
    const Point2 user{xs(rng), ys(rng)};
    const auto ctx = context_at(user);
    const double excess = ex(rng);
    const auto refl = reflected(ang(rng), excess);
    const auto obs = estimate_reflector_point({}, ctx, refl);
    const double total = user.norm() + excess;
    CHECK(std::abs(obs.point.norm() + distance(obs.point, user) - total) < 1e-6);
    // Mirror the base station across the recovered line; its ray to the user
    // must pass through the recovered point.
    const Point2 line_b = obs.point + slope_unit(obs.orientation_deg);
    const Point2 image = mirror_across_line({}, obs.point, line_b);
    const auto hit = intersect_lines(image, user, obs.point, line_b);
    REQUIRE(hit);
    CHECK(std::abs(bearing_deg({}, hit->point) - refl.angle_deg) <= 0.5);
    CHECK(distance(hit->point, obs.point) < 1e-6);
  }
}

TEST_CASE("accumulate_reflector: collinear points") {
  std::vector<ReflectionObservation> h;
  for (double x : {1.0, 1.75, 2.5, 3.25, 4.0}) h.push_back({{x, 3}, 0.0, 1.0, 0.0});
  const auto est = accumulate_reflector(h);
  REQUIRE(est.size() == 1);
  CHECK(est[0].endpoint_a.x == doctest::Approx(1.0));
  CHECK(est[0].endpoint_a.y == doctest::Approx(3.0));
  CHECK(est[0].endpoint_b.x == doctest::Approx(4.0));
  CHECK(est[0].endpoint_b.y == doctest::Approx(3.0));
  CHECK(est[0].orientation_deg == doctest::Approx(0.0));
  CHECK(est[0].n_observations == 5);
  CHECK_FALSE(est[0].low_confidence);
  CHECK(distance_to_line(est[0].point, est[0].endpoint_a, est[0].endpoint_b) < 0.5);
}

TEST_CASE("accumulate_reflector: two walls and a singleton") {
  std::vector<ReflectionObservation> h;
  for (double x : {0.0, 1.0, 2.0}) h.push_back({{x, 3}, 0.5, 1.0, 0.0});
  for (double y : {2.0, 4.0, 5.0}) h.push_back({{6, y}, 89.5, 1.0, 0.0});
  h.push_back({{3.0, 3.02}, -1.0, 1.0, 0.0});
  const auto est = accumulate_reflector(h);
  REQUIRE(est.size() == 2);
  CHECK(est[0].n_observations == 4);
  CHECK(est[1].n_observations == 3);
  CHECK(std::abs(fold_orientation(est[1].orientation_deg - 90.0)) < 1.0);
  // Endpoints follow the line direction.
  for (const auto& e : est) CHECK(project_onto(e.endpoint_b, e.endpoint_a, e.direction()) >= 0);

  const auto single = accumulate_reflector({{{2, 5}, 30.0, 1.0, 0.0}});
  REQUIRE(single.size() == 1);
  CHECK(single[0].endpoint_a == single[0].endpoint_b);
  CHECK(single[0].low_confidence);
  CHECK(single[0].orientation_deg == doctest::Approx(30.0));
}

TEST_CASE("reflector map and CSV export") {
  ReflectorMap map;
  map.add({{1, 3}, 0.0, 1.0, 0.0});
  map.add({{2, 3}, 0.0, 1.0, 0.5});
  REQUIRE(map.estimates().size() == 1);
  std::ostringstream out;
  write_reflectors_csv(out, map.estimates());
  CHECK(out.str() == "x1,y1,x2,y2,phi,n_obs\n1.0000,3.0000,2.0000,3.0000,0.000,2\n");
  map.clear();
  CHECK(map.estimates().empty());
}

TEST_CASE("fold_orientation") {
  CHECK(fold_orientation(180.0) == doctest::Approx(0.0));
  CHECK(fold_orientation(-90.0) == doctest::Approx(90.0));
  CHECK(fold_orientation(135.0) == doctest::Approx(-45.0));
  CHECK(fold_orientation(-300.0) == doctest::Approx(60.0));
}
