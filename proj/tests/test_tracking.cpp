#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "commrad/tracking.hpp"

using namespace commrad;

namespace {

ReflectorEstimate wall(Point2 a, Point2 b) {
  ReflectorEstimate r;
  const Point2 d = b - a;
  r.orientation_deg = fold_orientation(rad2deg(std::atan2(d.y, d.x)));
  const Point2 u = slope_unit(r.orientation_deg);
  if (project_onto(b, a, u) < 0) std::swap(a, b);
  r.point = (a + b) / 2.0;
  r.endpoint_a = a;
  r.endpoint_b = b;
  r.n_observations = 5;
  return r;
}

// Image-source oracle independent of the closed form.
Point2 mirror_origin(const ReflectorEstimate& r) {
  return mirror_across_line({}, r.endpoint_a, r.endpoint_b == r.endpoint_a ? r.point + slope_unit(r.orientation_deg) : r.endpoint_b);
}

double min_eig(const Eigen::Matrix4d& m) { return Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(m).eigenvalues()(0); }

RangeAngleMap frame_map(const SceneSnapshot& snap, const RadarConfig& radar, std::mt19937_64& rng) {
  return range_angle_map(synthesize_frame(snap, radar, rng), radar);
}

int nearest_index(const std::vector<double>& axis, double v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(axis.size()); ++i) {
    if (std::abs(axis[i] - v) < std::abs(axis[best] - v)) best = i;
  }
  return best;
}

double cell_power(const RangeAngleMap& m, Point2 p) {
  const double r = distance(m.origin, p);
  const double a = bearing_deg(m.origin, p);
  const int rb = static_cast<int>(std::lround(r / (m.range_axis[1] - m.range_axis[0])));
  const int ab = nearest_index(m.angle_axis, a);
  double best = kMapFloorDb;
  for (int i = std::max(0, rb - 1); i <= std::min(m.range_bins() - 1, rb + 1); ++i) {
    for (int j = std::max(0, ab - 2); j <= std::min(m.angle_bins() - 1, ab + 2); ++j) best = std::max(best, m.power_db(i, j));
  }
  return best;
}

// Mean linear power over the cells around a point, in dB.
double mean_cell_power(const RangeAngleMap& m, Point2 p) {
  const int rb = static_cast<int>(std::lround(distance(m.origin, p) / (m.range_axis[1] - m.range_axis[0])));
  const int ab = nearest_index(m.angle_axis, bearing_deg(m.origin, p));
  double acc = 0;
  int n = 0;
  for (int i = std::max(0, rb - 1); i <= std::min(m.range_bins() - 1, rb + 1); ++i) {
    for (int j = std::max(0, ab - 2); j <= std::min(m.angle_bins() - 1, ab + 2); ++j) {
      acc += std::pow(10.0, m.power_db(i, j) / 10.0);
      ++n;
    }
  }
  return 10.0 * std::log10(acc / n);
}

}  // namespace

TEST_CASE("virtual_bs mirrors the origin") {
  CHECK(virtual_bs(wall({-5, 3}, {5, 3})).x == doctest::Approx(0.0));
  CHECK(virtual_bs(wall({-5, 3}, {5, 3})).y == doctest::Approx(6.0));
  const auto v = virtual_bs(wall({4, -2}, {4, 9}));
  CHECK(v.x == doctest::Approx(8.0));
  CHECK(v.y == doctest::Approx(0.0).epsilon(1e-12));
  auto diag = wall({0, 0}, {2, 2});
  diag.point = {1, 1};
  CHECK(virtual_bs(diag).norm() < 1e-12);
}

TEST_CASE("property: virtual_bs matches the image source and is an involution") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 1000; ++i) {
    const Point2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
    if (distance(a, b) < 0.5 || distance_to_line({}, a, b) < 0.2) continue;
    const auto r = wall(a, b);
    const Point2 v = virtual_bs(r);
    CHECK(distance(v, mirror_origin(r)) < 1e-9);
    // Mirror of the mirrored base station returns the origin.
    auto shifted = r;
    shifted.point = a;
    CHECK(distance(mirror_across_line(v, r.point, r.point + r.direction()), {}) < 1e-9);
    CHECK(distance(virtual_bs(shifted), v) < 1e-9);
    // Image-source length identity through the specular point.
    const Point2 user{u(rng), u(rng)};
    const auto hit = intersect_lines(v, user, a, b);
    if (hit && hit->s > 0 && hit->s < 1) {
      CHECK(std::abs(distance(v, user) - (hit->point.norm() + distance(hit->point, user))) < 1e-9);
    }
  }
}

TEST_CASE("reflected_path_angle: wall y=3") {
  const auto r = wall({-5, 3}, {5, 3});
  const auto a1 = reflected_path_angle(Point2{1, 1}, r);
  const auto a2 = reflected_path_angle(Point2{-1, 1}, r);
  REQUIRE(a1);
  REQUIRE(a2);
  CHECK(*a1 == doctest::Approx(rad2deg(std::atan2(0.6, 3.0))));
  CHECK(*a1 == doctest::Approx(11.31).epsilon(1e-3));
  CHECK(*a2 == doctest::Approx(-11.31).epsilon(1e-3));
  CHECK(*a1 - *a2 == doctest::Approx(22.62).epsilon(1e-3));
  // Symmetric user on a vertical wall's axis: bisector direction.
  const auto v = wall({3, -5}, {3, 5});
  const auto av = reflected_path_angle(Point2{0, 2}, v);
  REQUIRE(av);
  CHECK(*av == doctest::Approx(rad2deg(std::atan2(3.0, 1.0))));
  // Behind the wall: no reflection.
  CHECK_FALSE(reflected_path_angle(Point2{1, 4}, r));
}

TEST_CASE("reflected_path_angle vanishes past the endpoints and is continuous inside") {
  const auto r = wall({-1, 10}, {2, 10});
  std::optional<double> prev;
  bool seen = false, vanished_after = false;
  for (double x = -6.0; x <= 8.0; x += 0.01) {
    const auto a = reflected_path_angle(Point2{x, 5}, r);
    if (a && prev) CHECK(std::abs(*a - *prev) < 0.1);
    if (a) seen = true;
    if (seen && !a) vanished_after = true;
    prev = a;
  }
  CHECK(seen);
  CHECK(vanished_after);
  // Specular x = 2 * user_x / 3 on this geometry; extent [-1, 2] with 0.1 m margin.
  CHECK(reflected_path_angle(Point2{3.1, 5}, r));
  CHECK_FALSE(reflected_path_angle(Point2{3.2, 5}, r));
  CHECK(reflected_path_angle(Point2{-1.6, 5}, r));
  CHECK_FALSE(reflected_path_angle(Point2{-1.7, 5}, r));
}

TEST_CASE("solve_assignment matches brute force") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + trial % 4, cols = 1 + (trial / 4) % 4;
    Eigen::MatrixXd c(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) c(i, j) = u(rng);
    const auto m = solve_assignment(c);
    double got = 0;
    int assigned = 0;
    for (int i = 0; i < rows; ++i) {
      if (m[i] >= 0) {
        got += c(i, m[i]);
        ++assigned;
      }
    }
    CHECK(assigned == std::min(rows, cols));
    // Brute force over permutations of the larger side.
    const int n = std::max(rows, cols);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e18;
    do {
      double s = 0;
      for (int i = 0; i < std::min(rows, cols); ++i) s += rows <= cols ? c(i, perm[i]) : c(perm[i], i);
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("recalibrate: exact contexts keep identities") {
  TrackerConfig cfg;
  std::vector<Track> tracks = {make_track(1, {0, 5}, 0.0, cfg), make_track(2, {3, 6}, 0.0, cfg)};
  std::vector<UserContext> ctx(2);
  ctx[0].user_id = 1;
  ctx[0].angle_deg = 0.0;
  ctx[0].distance = 5.0;
  ctx[1].user_id = 2;
  ctx[1].angle_deg = bearing_deg({}, {3, 6});
  ctx[1].distance = Point2{3, 6}.norm();
  const auto out = recalibrate(tracks, ctx, 0.0, cfg);
  REQUIRE(out.size() == 2);
  CHECK(out[0].user_id == 1);
  CHECK(distance(out[0].position(), {0, 5}) < 1e-9);
  CHECK(out[1].user_id == 2);
  CHECK(distance(out[1].position(), {3, 6}) < 1e-9);
}

TEST_CASE("recalibrate: swapped labels follow the radio") {
  TrackerConfig cfg;
  std::vector<Track> tracks = {make_track(2, {0, 5}, 0.0, cfg), make_track(1, {3, 6}, 0.0, cfg)};
  std::vector<UserContext> ctx(2);
  ctx[0] = {1, 0.0, 5.1, 5.1, true, 0.5};
  ctx[1] = {2, bearing_deg({}, {3, 6}), Point2{3, 6}.norm(), 0.0, true, 0.5};
  const auto out = recalibrate(tracks, ctx, 0.5, cfg);
  for (const auto& tr : out) {
    if (tr.user_id == 1) CHECK(tr.position().y == doctest::Approx(5.1));
    if (tr.user_id == 2) CHECK(tr.position().x == doctest::Approx(3.0));
  }
}

TEST_CASE("recalibrate: three tracks, two contexts") {
  TrackerConfig cfg;
  const Point2 p[3] = {{0, 4}, {2, 6}, {-3, 8}};
  std::vector<Track> tracks;
  for (int i = 0; i < 3; ++i) tracks.push_back(make_track(i + 1, p[i], 0.0, cfg));
  std::vector<UserContext> ctx(2);
  const Point2 c0{2.2, 6.1}, c1{-2.9, 7.7};
  ctx[0] = {5, bearing_deg({}, c0), c0.norm(), 0, true, 0};
  ctx[1] = {6, bearing_deg({}, c1), c1.norm(), 0, true, 0};
  // Brute force: best pairing of 2 contexts into 3 tracks.
  double best = 1e9;
  int bi = -1, bj = -1;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const double s = distance(p[i], c0) + distance(p[j], c1);
      if (s < best) {
        best = s;
        bi = i;
        bj = j;
      }
    }
  const auto out = recalibrate(tracks, ctx, 0.0, cfg);
  REQUIRE(out.size() == 3);
  int coasting = 0;
  for (const auto& tr : out) {
    if (tr.user_id == 5) CHECK(distance(tr.position(), c0) < 1e-9);
    if (tr.user_id == 6) CHECK(distance(tr.position(), c1) < 1e-9);
    if (tr.user_id != 5 && tr.user_id != 6) {
      ++coasting;
      CHECK(tr.user_id == 1 + 3 - bi - bj);
    }
  }
  CHECK(coasting == 1);
  // A stale unmatched track is dropped.
  tracks[0].misses = cfg.max_misses + 1;
  CHECK(recalibrate(tracks, ctx, 0.0, cfg).size() == 2);
}

TEST_CASE("recalibrate spawns tracks for new contexts") {
  TrackerConfig cfg;
  std::vector<UserContext> ctx(1);
  ctx[0] = {4, 10.0, 6.0, 6.0, true, 0.0};
  const auto out = recalibrate({}, ctx, 1.0, cfg);
  REQUIRE(out.size() == 1);
  CHECK(out[0].user_id == 4);
  CHECK(out[0].bbox_half_extent == 1.5);
  CHECK(out[0].last_update == 1.0);
}

TEST_CASE("clutter removal") {
  RadarConfig radar;
  TrackerConfig cfg = TrackerConfig::for_radar(radar);
  SceneSnapshot stat;
  for (double x = -4; x <= 4; x += 1.0) stat.static_clutter.push_back({{x, 12.0}, 2.0});
  std::mt19937_64 rng(6);

  SUBCASE("empty profile is the identity") {
    ClutterProfile prof;
    const auto m = frame_map(stat, radar, rng);
    const auto out = remove_clutter(m, prof, cfg);
    CHECK(out.power_db == m.power_db);
    CHECK(prof.n_frames_averaged == 1);
    ClutterProfile wrong;
    wrong.avg_map = Eigen::MatrixXcd::Zero(3, 3);
    wrong.n_frames_averaged = 2;
    CHECK_THROWS_AS(remove_clutter(m, wrong, cfg), DomainError);
  }
  SUBCASE("static scene is suppressed to the noise floor") {
    ClutterProfile prof;
    RangeAngleMap out;
    double before = 0, residual = 0;
    int n = 0;
    for (int f = 0; f < 30; ++f) {
      const auto m = frame_map(stat, radar, rng);
      if (f == 10) before = cell_power(m, {0, 12});
      out = remove_clutter(m, prof, cfg);
      if (f < 10) continue;
      for (const auto& c : stat.static_clutter) {
        residual += std::pow(10.0, mean_cell_power(out, c.pos) / 10.0);
        ++n;
      }
    }
    CHECK(before > radar.noise_floor_dbm + 30);
    // Averaged over clutter cells and frames; single cells fluctuate like noise.
    CHECK(10.0 * std::log10(residual / n) <= radar.noise_floor_dbm + 3.0);
    CHECK(out.power_db.maxCoeff() <= radar.noise_floor_dbm + 13.0);
  }
  SUBCASE("noiseless static scene cancels exactly") {
    radar.noise_floor_dbm = -250;
    ClutterProfile prof;
    RangeAngleMap raw, out;
    for (int f = 0; f < 3; ++f) {
      raw = frame_map(stat, radar, rng);
      out = remove_clutter(raw, prof, cfg);
    }
    CHECK(out.power_db.maxCoeff() < raw.power_db.maxCoeff() - 100.0);
  }
  SUBCASE("moving user survives, wall is suppressed") {
    ClutterProfile prof;
    RangeAngleMap raw, out;
    SceneSnapshot s = stat;
    s.users.push_back({1, {-3, 6}, {1, 0}, 1.0});
    for (int f = 0; f < 15; ++f) {
      s.users[0].pos = Point2{-3.0 + 0.2 * f, 6.0};
      raw = frame_map(s, radar, rng);
      out = remove_clutter(raw, prof, cfg);
    }
    const Point2 user = s.users[0].pos;
    CHECK(std::abs(cell_power(out, user) - cell_power(raw, user)) <= 1.0);
    CHECK(cell_power(raw, {2, 12}) - cell_power(out, {2, 12}) >= 15.0);
  }
}

TEST_CASE("track_step follows a walking user") {
  RadarConfig radar;
  radar.noise_floor_dbm = -200;
  TrackerConfig cfg = TrackerConfig::for_radar(radar);
  std::mt19937_64 rng(1);
  SceneSnapshot s;
  s.users.push_back({1, {-2, 6}, {1, 0}, 1.0});
  std::vector<Track> tracks = {make_track(1, s.users[0].pos, 0.0, cfg)};
  for (int f = 1; f <= 10; ++f) {
    const double t = 0.2 * f;
    s.t = t;
    s.users[0].pos = Point2{-2.0 + t, 6.0};
    auto m = frame_map(s, radar, rng);
    m.noise_floor_db = -100;  // threshold reference for the detector
    tracks = track_step(tracks, m, t, cfg);
    CHECK(min_eig(tracks[0].covariance) >= -1e-9);
    CHECK((tracks[0].covariance - tracks[0].covariance.transpose()).norm() < 1e-12);
  }
  CHECK(tracks[0].misses == 0);
  CHECK(distance(tracks[0].position(), s.users[0].pos) <= resolution_params(radar).range_res);
  CHECK(tracks[0].velocity().x > 0.5);
}

TEST_CASE("coasting: pure prediction and growing covariance") {
  RadarConfig radar;
  TrackerConfig cfg = TrackerConfig::for_radar(radar);
  std::mt19937_64 rng(1);
  auto empty = frame_map(SceneSnapshot{}, radar, rng);
  empty.power_db.setConstant(kMapFloorDb);
  Track tr = make_track(1, {0, 5}, 0.0, cfg);
  tr.state(2) = 0.5;
  std::vector<Track> tracks = {tr};
  double prev_trace = tr.covariance.trace();
  for (int f = 1; f <= 3; ++f) {
    tracks = track_step(tracks, empty, 0.2 * f, cfg);
    CHECK(tracks[0].misses == f);
    CHECK(tracks[0].position().x == doctest::Approx(0.5 * 0.2 * f));
    CHECK(tracks[0].covariance.trace() > prev_trace);
    prev_trace = tracks[0].covariance.trace();
  }
}

TEST_CASE("symmetric crossing without recalibration loses identity") {
  RadarConfig radar;
  TrackerConfig cfg = TrackerConfig::for_radar(radar);
  std::mt19937_64 rng(12);
  // Mirror-image walks that meet at (0, 6), stand together for 2 s, then part.
  const auto walk = [](double t, double side) {
    const double tt = t < 5.0 ? t : (t < 7.0 ? 5.0 : t - 2.0);
    return Point2{side * (-3.0 + 0.6 * tt), 4.0 + 0.4 * tt};
  };
  SceneSnapshot s;
  s.users = {{1, walk(0, 1), {}, 1.0}, {2, walk(0, -1), {}, 1.0}};
  std::vector<Track> tracks = {make_track(1, walk(0, 1), 0.0, cfg), make_track(2, walk(0, -1), 0.0, cfg)};
  ClutterProfile prof;
  for (int f = 0; f <= 60; ++f) {
    const double t = 0.2 * f;
    s.users[0].pos = walk(t, 1);
    s.users[1].pos = walk(t, -1);
    const auto m = remove_clutter(frame_map(s, radar, rng), prof, cfg);
    if (f > 0) tracks = track_step(tracks, m, t, cfg);
  }
  // Both tracks report the same path, so one ends on the other user.
  bool lost = false;
  for (const auto& tr : tracks) {
    const double side = tr.user_id == 1 ? 1 : -1;
    lost |= distance(tr.position(), walk(12, -side)) < distance(tr.position(), walk(12, side));
  }
  CHECK(lost);
  CHECK(distance(tracks[0].position(), tracks[1].position()) < 0.5);
}

TEST_CASE("straight crossing is carried through by the motion model") {
  RadarConfig radar;
  TrackerConfig cfg = TrackerConfig::for_radar(radar);
  std::mt19937_64 rng(12);
  const auto pos = [](double t, double side) { return Point2{side * (-3.0 + 0.6 * t), 4.0 + 0.4 * t}; };
  SceneSnapshot s;
  s.users = {{1, pos(0, 1), {}, 1.0}, {2, pos(0, -1), {}, 1.0}};
  std::vector<Track> tracks = {make_track(1, pos(0, 1), 0.0, cfg), make_track(2, pos(0, -1), 0.0, cfg)};
  ClutterProfile prof;
  for (int f = 0; f <= 50; ++f) {
    const double t = 0.2 * f;
    s.users[0].pos = pos(t, 1);
    s.users[1].pos = pos(t, -1);
    const auto m = remove_clutter(frame_map(s, radar, rng), prof, cfg);
    if (f > 0) tracks = track_step(tracks, m, t, cfg);
  }
  CHECK(distance(tracks[0].position(), pos(10, 1)) < 0.5);
  CHECK(distance(tracks[1].position(), pos(10, -1)) < 0.5);
}

TEST_CASE("object tracker follows a blocker and ignores users") {
  RadarConfig radar;
  TrackerConfig cfg = TrackerConfig::for_radar(radar);
  std::mt19937_64 rng(3);
  SceneSnapshot s;
  s.users.push_back({1, {0.5, 6}, {}, 1.0});
  s.blockers.push_back({0, {-2, 3}, {0.5, 0}, 0.5, 30, 1.0});
  std::vector<Track> users = {make_track(1, {0.5, 6}, 0.0, cfg)};
  ObjectTracker ot(cfg);
  ClutterProfile prof;
  for (int f = 0; f <= 15; ++f) {
    const double t = 0.2 * f;
    s.blockers[0].pos = Point2{-2.0 + 0.5 * t, 3.0};
    const auto m = remove_clutter(frame_map(s, radar, rng), prof, cfg);
    if (f > 0) ot.step(m, users, t);
  }
  REQUIRE(!ot.tracks().empty());
  const auto it = std::min_element(ot.tracks().begin(), ot.tracks().end(), [&](const Track& a, const Track& b) {
    return distance(a.position(), s.blockers[0].pos) < distance(b.position(), s.blockers[0].pos);
  });
  CHECK(distance(it->position(), s.blockers[0].pos) < 0.75);
  CHECK(it->velocity().x == doctest::Approx(0.5).epsilon(0.6));
  for (const auto& tr : ot.tracks()) CHECK(distance(tr.position(), {0.5, 6}) > 0.5);
}
