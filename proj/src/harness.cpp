#include "commrad/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

namespace commrad {

std::string_view to_string(EventKind kind) {
  return kind == EventKind::recalibration ? "recalibration" : "blockage";
}

std::string_view to_string(Pipeline p) {
  switch (p) {
    case Pipeline::collaborative: return "collaborative";
    case Pipeline::non_collaborative: return "non_collaborative";
    case Pipeline::objects: return "objects";
  }
  return "objects";
}

namespace {

std::string_view to_string(PathUse p) {
  switch (p) {
    case PathUse::direct: return "direct";
    case PathUse::reflected: return "reflected";
    case PathUse::outage: return "outage";
  }
  return "outage";
}

PathUse parse_path_use(std::string_view s) {
  if (s == "direct") return PathUse::direct;
  if (s == "reflected") return PathUse::reflected;
  if (s == "outage") return PathUse::outage;
  throw ConfigError("unknown path_used '" + std::string(s) + "'");
}

// Radar-side view of the users held by one pipeline.
struct PipelineState {
  Pipeline kind = Pipeline::collaborative;
  std::vector<Track> tracks;
  ReflectorMap reflectors;
  std::map<int, double> direct_strength;  // mW, from the latest consumed scan
};

const Track* find_track(const std::vector<Track>& tracks, int user_id) {
  for (const auto& tr : tracks) {
    if (tr.user_id == user_id) return &tr;
  }
  return nullptr;
}

Point2 extrapolate(const Track& tr, double t) { return tr.position() + tr.velocity() * (t - tr.last_update); }

std::optional<Point2> reflection_point(Point2 user, const ReflectorEstimate& r) {
  if (!reflected_path_angle(user, r)) return std::nullopt;
  const auto hit = intersect_lines(virtual_bs(r), user, r.endpoint_a, r.endpoint_b);
  if (!hit) return std::nullopt;
  return hit->point;
}

struct UserView {
  std::vector<CandidatePath> candidates;
  std::vector<BlockageEvent> events;
  std::optional<double> direct_angle;
};

UserView view_for_user(const PipelineState& pipe, int user_id, double t, const std::vector<Track>& objects,
                       const ExperimentConfig& cfg) {
  UserView v;
  const Track* tr = find_track(pipe.tracks, user_id);
  if (!tr) return v;
  const Point2 bs{};
  const Point2 pos = extrapolate(*tr, t);
  if (distance(pos, bs) < 1e-6) return v;
  v.direct_angle = bearing_deg(bs, pos);
  double direct = 0.0;
  if (auto it = pipe.direct_strength.find(user_id); it != pipe.direct_strength.end()) {
    direct = it->second;
  } else {
    direct = db_to_linear(friis_rss(distance(bs, pos), cfg.radio.wavelength(), cfg.radio.tx_power_dbm, 0.0, 0.0));
  }
  v.candidates.push_back({PathLabel::direct(), *v.direct_angle, direct});

  struct Leg {
    PathLabel label;
    BlockageRegion region;
  };
  std::vector<Leg> legs = {{PathLabel::direct(), blockage_region(bs, pos, cfg.blockage.region_width)}};
  const auto& refl = pipe.reflectors.estimates();
  for (std::size_t i = 0; i < refl.size(); ++i) {
    const auto angle = reflected_path_angle(pos, refl[i]);
    const auto spec = reflection_point(pos, refl[i]);
    if (!angle || !spec) continue;
    const auto label = PathLabel::reflected(static_cast<int>(i));
    v.candidates.push_back({label, *angle, refl[i].mean_strength});
    if (distance(bs, *spec) > 1e-6) legs.push_back({label, blockage_region(bs, *spec, cfg.blockage.region_width)});
    if (distance(*spec, pos) > 1e-6) legs.push_back({label, blockage_region(*spec, pos, cfg.blockage.region_width)});
  }

  for (const auto& obj : objects) {
    if (obj.hits < cfg.min_blocker_hits || obj.velocity().norm() < cfg.min_blocker_speed) continue;
    for (const auto& leg : legs) {
      auto ev = predict_blockage(obj, leg.region, cfg.blocker_length, t, cfg.blockage);
      if (!ev) continue;
      ev->user_id = user_id;
      ev->path = leg.label;
      v.events.push_back(*ev);
    }
  }
  return v;
}

void consume_scan(PipelineState& pipe, const std::vector<UserContext>& contexts,
                  const std::map<int, std::vector<PathEstimate>>& paths, double t, const TrackerConfig& tracker) {
  const Point2 bs{};
  for (const auto& ctx : contexts) {
    auto it = paths.find(ctx.user_id);
    if (it == paths.end()) continue;
    for (const auto& p : it->second) {
      if (p.is_direct) {
        pipe.direct_strength[ctx.user_id] = p.strength;
        continue;
      }
      try {
        pipe.reflectors.add(estimate_reflector_point(bs, ctx, p));
      } catch (const GeometryError&) {
      }
    }
  }
  pipe.tracks = recalibrate(pipe.tracks, contexts, t, tracker);
}

void log_tracks(MetricsLog& log, Pipeline kind, const std::vector<Track>& tracks, const SceneSnapshot& snap,
                bool recal) {
  std::vector<Track> sorted = tracks;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Track& a, const Track& b) { return a.user_id < b.user_id; });
  for (const auto& tr : sorted) {
    TrackRow row;
    row.t = snap.t;
    row.pipeline = kind;
    row.recal = recal;
    row.user_id = tr.user_id;
    row.pos = extrapolate(tr, snap.t);
    row.misses = tr.misses;
    if (kind != Pipeline::objects) {
      for (const auto& u : snap.users) {
        if (u.user_id == tr.user_id) row.truth = u.pos;
      }
    }
    log.tracks.push_back(row);
  }
}

bool uses_scans(Strategy s) {
  return s == Strategy::commrad_single || s == Strategy::commrad_multi || s == Strategy::reactive;
}

}  // namespace

MetricsLog run_scenario(const ExperimentConfig& cfg) {
  cfg.validate();
  MetricsLog log;
  const auto res = resolution_params(cfg.radar);
  const int n_steps = cfg.n_steps(), spf = cfg.steps_per_frame(), spr = cfg.steps_per_recal();
  const double scan_overhead = overhead_fraction(cfg.recal_period, scan_duration(cfg.radio), cfg.radio.feedback_duration);
  for (Strategy s : cfg.strategies) log.overhead.push_back({s, uses_scans(s) ? scan_overhead : 0.0});

  std::vector<int> user_ids;
  for (const auto& u : cfg.scene.users) user_ids.push_back(u.user_id);
  std::sort(user_ids.begin(), user_ids.end());

  PipelineState collab{Pipeline::collaborative, {}, ReflectorMap(cfg.context), {}};
  PipelineState noncollab{Pipeline::non_collaborative, {}, ReflectorMap(cfg.context), {}};
  ClutterProfile profile;
  ObjectTracker objects(cfg.tracker);
  RangeAngleMap raw_map;
  std::map<int, double> scanned_angle;
  std::set<std::tuple<int, int, int, int>> announced;  // user, path kind, reflector, blocker

  for (int step = 0; step < n_steps; ++step) {
    const double t = step * cfg.timestep;
    const auto snap = sample_scene(cfg.scene, t);

    if (step % spf == 0) {
      auto rng = make_stream(cfg.scene.seed, 1, static_cast<std::uint64_t>(step / spf));
      raw_map = range_angle_map(synthesize_frame(snap, cfg.radar, rng), cfg.radar);
      const int profiled = profile.n_frames_averaged;
      const auto dec = remove_clutter(raw_map, profile, cfg.tracker);
      // A profile of fewer than two frames still holds the users themselves.
      if (profiled >= 2) {
        collab.tracks = track_step(collab.tracks, dec, t, cfg.tracker);
        noncollab.tracks = track_step(noncollab.tracks, dec, t, cfg.tracker);
        objects.step(dec, collab.tracks, t);
        log_tracks(log, Pipeline::collaborative, collab.tracks, snap, false);
        log_tracks(log, Pipeline::non_collaborative, noncollab.tracks, snap, false);
        log_tracks(log, Pipeline::objects, objects.tracks(), snap, false);
      }
    }

    const bool scan_now = step % spr == 0;
    if (scan_now) {
      auto rng = make_stream(cfg.scene.seed, 2, static_cast<std::uint64_t>(step / spr));
      const auto report = run_beam_scan(snap, cfg.radio, rng);
      std::vector<UserContext> contexts;
      std::map<int, std::vector<PathEstimate>> paths;
      for (int uid : user_ids) {
        const auto& scan = report.user(uid);
        const auto best = std::max_element(scan.rss_dbm.begin(), scan.rss_dbm.end());
        if (*best > kRssFloorDbm) {
          scanned_angle[uid] = cfg.radio.codebook_angle(static_cast<int>(best - scan.rss_dbm.begin()));
        } else {
          scanned_angle.erase(uid);
        }
        try {
          contexts.push_back(acquire_user_context(report, uid, raw_map, cfg.radio, res.range_res, cfg.context));
          paths[uid] = estimate_paths(scan, cfg.radio, cfg.context);
        } catch (const Error&) {
        }
      }
      consume_scan(collab, contexts, paths, t, cfg.tracker);
      log_tracks(log, Pipeline::collaborative, collab.tracks, snap, true);
      if (step == 0) {
        consume_scan(noncollab, contexts, paths, t, cfg.tracker);
        log_tracks(log, Pipeline::non_collaborative, noncollab.tracks, snap, true);
      }
      LogEvent ev;
      ev.t = t;
      ev.kind = EventKind::recalibration;
      log.events.push_back(ev);
    }

    for (int uid : user_ids) {
      const auto truth_paths = compute_paths(snap, uid, cfg.radio.carrier_freq);
      const auto channel = channel_from_paths(truth_paths, cfg.radio);
      const bool direct_blocked = std::any_of(truth_paths.begin(), truth_paths.end(), [](const Path& p) {
        return p.kind == PathKind::direct && p.blocked;
      });
      const double true_angle = bearing_deg(snap.base_station, snap.user(uid).pos);
      const auto cview = view_for_user(collab, uid, t, objects.tracks(), cfg);
      const auto nview = view_for_user(noncollab, uid, t, objects.tracks(), cfg);

      for (const auto& e : cview.events) {
        const auto key = std::make_tuple(uid, static_cast<int>(e.path.kind), e.path.reflector_index, e.blocker_id);
        if (!announced.insert(key).second) continue;
        LogEvent le;
        le.t = t;
        le.kind = EventKind::blockage;
        le.user_id = uid;
        le.path = e.path;
        le.blocker_id = e.blocker_id;
        le.t_arrival = e.t_arrival;
        le.duration = e.duration;
        log.events.push_back(le);
      }

      for (std::size_t k = 0; k < cfg.strategies.size(); ++k) {
        const Strategy s = cfg.strategies[k];
        const UserView& view = s == Strategy::non_collaborative ? nview : cview;
        ControllerInputs in;
        in.t = t;
        in.user_id = uid;
        in.truth = &channel;
        in.candidates = view.candidates;
        in.events = view.events;
        if (auto it = scanned_angle.find(uid); it != scanned_angle.end()) in.scanned_angle_deg = it->second;
        in.overhead = log.overhead[k].fraction;
        in.in_overhead = scan_now && uses_scans(s);
        in.lead = cfg.blockage.lead;
        auto out = controller_step(s, in, cfg.radio);
        out.sample.direct_blocked = direct_blocked;
        log.samples.push_back(out.sample);

        std::optional<double> estimate;
        if (s == Strategy::reactive) {
          estimate = in.scanned_angle_deg;
        } else if (s != Strategy::oracle) {
          estimate = view.direct_angle;
        }
        if (estimate) log.angle_errors.push_back({t, uid, s, std::abs(*estimate - true_angle)});
      }
    }
  }
  log.reflectors = collab.reflectors.estimates();
  return log;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw DomainError("percentile: empty input");
  if (!(p >= 0 && p <= 1)) throw DomainError("percentile: p must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

const StrategySummary& Summary::at(Strategy s) const {
  for (const auto& x : strategies) {
    if (x.strategy == s) return x;
  }
  throw NotFoundError("summary has no strategy " + std::string(to_string(s)));
}

bool Summary::has(Strategy s) const {
  return std::any_of(strategies.begin(), strategies.end(), [&](const auto& x) { return x.strategy == s; });
}

namespace {

std::array<double, 101> cdf_table(const std::vector<double>& v) {
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  std::array<double, 101> out{};
  for (int i = 0; i <= 100; ++i) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * i / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    out[i] = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  }
  return out;
}

}  // namespace

Summary summarize(const MetricsLog& log) {
  if (log.samples.empty()) throw DomainError("summarize: log has no samples");
  std::vector<Strategy> order;
  std::map<Strategy, std::vector<double>> tp, err;
  std::map<Strategy, std::size_t> outages;
  for (const auto& s : log.samples) {
    if (!tp.count(s.strategy)) order.push_back(s.strategy);
    tp[s.strategy].push_back(s.throughput_mbps);
    if (s.path_used == PathUse::outage) ++outages[s.strategy];
  }
  for (const auto& e : log.angle_errors) err[e.strategy].push_back(e.error_deg);
  std::sort(order.begin(), order.end());
  Summary out;
  for (Strategy s : order) {
    const auto& v = tp[s];
    StrategySummary ss;
    ss.strategy = s;
    ss.n_samples = v.size();
    ss.throughput_cdf = cdf_table(v);
    ss.median_throughput = ss.throughput_cdf[50];
    ss.p20_throughput = ss.throughput_cdf[20];
    ss.p90_throughput = ss.throughput_cdf[90];
    double sum = 0.0;
    for (double x : v) sum += x;
    ss.mean_throughput = sum / static_cast<double>(v.size());
    if (auto it = err.find(s); it != err.end() && !it->second.empty()) {
      ss.angle_error_cdf = cdf_table(it->second);
      ss.median_angle_error = (*ss.angle_error_cdf)[50];
      ss.p90_angle_error = (*ss.angle_error_cdf)[90];
    }
    for (const auto& o : log.overhead) {
      if (o.strategy == s) ss.overhead_fraction = o.fraction;
    }
    ss.outage_fraction = static_cast<double>(outages[s]) / static_cast<double>(v.size());
    out.strategies.push_back(ss);
  }
  return out;
}

void write_samples_csv(std::ostream& out, const std::vector<ThroughputSample>& samples) {
  out << "t,strategy,user_id,snr_db,throughput_mbps,in_overhead,path_used,reflector_index,direct_blocked\n";
  for (const auto& s : samples) {
    fmt::print(out, "{:.3f},{},{},{:.6f},{:.6f},{},{},{},{}\n", s.t, to_string(s.strategy), s.user_id, s.snr_db,
               s.throughput_mbps, s.in_overhead ? 1 : 0, to_string(s.path_used), s.reflector_index,
               s.direct_blocked ? 1 : 0);
  }
}

void write_angle_errors_csv(std::ostream& out, const std::vector<AngleErrorSample>& rows) {
  out << "t,user_id,strategy,error_deg\n";
  for (const auto& r : rows) fmt::print(out, "{:.3f},{},{},{:.6f}\n", r.t, r.user_id, to_string(r.strategy), r.error_deg);
}

void write_events_csv(std::ostream& out, const std::vector<LogEvent>& events) {
  out << "t,kind,user_id,path,reflector_index,blocker_id,t_arrival,duration\n";
  for (const auto& e : events) {
    if (e.kind == EventKind::recalibration) {
      fmt::print(out, "{:.3f},{},,,,,,\n", e.t, to_string(e.kind));
    } else {
      fmt::print(out, "{:.3f},{},{},{},{},{},{:.6f},{:.6f}\n", e.t, to_string(e.kind), e.user_id,
                 e.path.kind == PathKind::direct ? "direct" : "reflected", e.path.reflector_index, e.blocker_id,
                 e.t_arrival, e.duration);
    }
  }
}

void write_tracks_csv(std::ostream& out, const std::vector<TrackRow>& rows) {
  out << "t,pipeline,stage,user_id,x,y,misses,truth_x,truth_y\n";
  for (const auto& r : rows) {
    fmt::print(out, "{:.3f},{},{},{},{:.6f},{:.6f},{},", r.t, to_string(r.pipeline), r.recal ? "recal" : "frame",
               r.user_id, r.pos.x, r.pos.y, r.misses);
    if (r.truth) {
      fmt::print(out, "{:.6f},{:.6f}\n", r.truth->x, r.truth->y);
    } else {
      out << ",\n";
    }
  }
}

void write_overhead_csv(std::ostream& out, const std::vector<StrategyOverhead>& rows) {
  out << "strategy,overhead_fraction\n";
  for (const auto& r : rows) fmt::print(out, "{},{:.9f}\n", to_string(r.strategy), r.fraction);
}

std::string summary_json(const Summary& summary) {
  nlohmann::ordered_json root = nlohmann::ordered_json::object();
  for (const auto& s : summary.strategies) {
    nlohmann::ordered_json j;
    j["samples"] = s.n_samples;
    j["median_throughput_mbps"] = s.median_throughput;
    j["p20_throughput_mbps"] = s.p20_throughput;
    j["p90_throughput_mbps"] = s.p90_throughput;
    j["mean_throughput_mbps"] = s.mean_throughput;
    j["median_angle_error_deg"] = s.median_angle_error ? nlohmann::ordered_json(*s.median_angle_error) : nullptr;
    j["p90_angle_error_deg"] = s.p90_angle_error ? nlohmann::ordered_json(*s.p90_angle_error) : nullptr;
    j["overhead_fraction"] = s.overhead_fraction;
    j["outage_fraction"] = s.outage_fraction;
    root[std::string(to_string(s.strategy))] = j;
  }
  return root.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

template <class Fn>
void write_with(const std::filesystem::path& path, Fn&& fn) {
  std::ostringstream ss;
  fn(ss);
  write_file(path, ss.str());
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw NotFoundError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

void write_metrics(const std::filesystem::path& dir, const MetricsLog& log) {
  std::filesystem::create_directories(dir);
  write_with(dir / kSamplesCsv, [&](std::ostream& o) { write_samples_csv(o, log.samples); });
  write_with(dir / kAngleErrorsCsv, [&](std::ostream& o) { write_angle_errors_csv(o, log.angle_errors); });
  write_with(dir / kEventsCsv, [&](std::ostream& o) { write_events_csv(o, log.events); });
  write_with(dir / kTracksCsv, [&](std::ostream& o) { write_tracks_csv(o, log.tracks); });
  write_with(dir / kReflectorsCsv, [&](std::ostream& o) { write_reflectors_csv(o, log.reflectors); });
  write_with(dir / kOverheadCsv, [&](std::ostream& o) { write_overhead_csv(o, log.overhead); });
  write_file(dir / kSummaryJson, summary_json(summarize(log)));
}

MetricsLog read_metrics(const std::filesystem::path& dir) {
  MetricsLog log;
  for (const auto& r : read_csv(dir / kSamplesCsv)) {
    if (r.size() != 9) throw ConfigError(std::string(kSamplesCsv) + ": expected 9 columns");
    ThroughputSample s;
    s.t = std::stod(r[0]);
    s.strategy = parse_strategy(r[1]);
    s.user_id = std::stoi(r[2]);
    s.snr_db = std::stod(r[3]);
    s.throughput_mbps = std::stod(r[4]);
    s.in_overhead = r[5] == "1";
    s.path_used = parse_path_use(r[6]);
    s.reflector_index = std::stoi(r[7]);
    s.direct_blocked = r[8] == "1";
    log.samples.push_back(s);
  }
  for (const auto& r : read_csv(dir / kAngleErrorsCsv)) {
    if (r.size() != 4) throw ConfigError(std::string(kAngleErrorsCsv) + ": expected 4 columns");
    log.angle_errors.push_back({std::stod(r[0]), std::stoi(r[1]), parse_strategy(r[2]), std::stod(r[3])});
  }
  if (std::filesystem::exists(dir / kOverheadCsv)) {
    for (const auto& r : read_csv(dir / kOverheadCsv)) {
      if (r.size() != 2) throw ConfigError(std::string(kOverheadCsv) + ": expected 2 columns");
      log.overhead.push_back({parse_strategy(r[0]), std::stod(r[1])});
    }
  }
  return log;
}

void write_cdf_tables(const std::filesystem::path& dir, const Summary& summary) {
  std::filesystem::create_directories(dir);
  write_with(dir / "cdf_throughput.csv", [&](std::ostream& o) {
    o << "percentile";
    for (const auto& s : summary.strategies) o << ',' << to_string(s.strategy);
    o << '\n';
    for (int i = 0; i <= 100; ++i) {
      o << i;
      for (const auto& s : summary.strategies) fmt::print(o, ",{:.6f}", s.throughput_cdf[i]);
      o << '\n';
    }
  });
  write_with(dir / "cdf_angle_error.csv", [&](std::ostream& o) {
    o << "percentile";
    for (const auto& s : summary.strategies) {
      if (s.angle_error_cdf) o << ',' << to_string(s.strategy);
    }
    o << '\n';
    for (int i = 0; i <= 100; ++i) {
      o << i;
      for (const auto& s : summary.strategies) {
        if (s.angle_error_cdf) fmt::print(o, ",{:.6f}", (*s.angle_error_cdf)[i]);
      }
      o << '\n';
    }
  });
}

std::string summary_text(const Summary& summary) {
  std::string out = fmt::format("{:<18} {:>10} {:>10} {:>10} {:>10} {:>10} {:>9} {:>8}\n", "strategy", "median",
                                "p20", "p90", "err_med", "err_p90", "overhead", "outage");
  const auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.2f}", *v) : std::string("-"); };
  for (const auto& s : summary.strategies) {
    out += fmt::format("{:<18} {:>10.1f} {:>10.1f} {:>10.1f} {:>10} {:>10} {:>9.5f} {:>8.4f}\n", to_string(s.strategy),
                       s.median_throughput, s.p20_throughput, s.p90_throughput, opt(s.median_angle_error),
                       opt(s.p90_angle_error), s.overhead_fraction, s.outage_fraction);
  }
  out += "throughput in Mbps, angle error in degrees\n";
  const auto ratio = [&](Strategy a, Strategy b) {
    if (!summary.has(a) || !summary.has(b)) return;
    const auto& x = summary.at(a);
    const auto& y = summary.at(b);
    const auto r = [](double p, double q) { return q > 0 ? fmt::format("{:.2f}", p / q) : std::string("inf"); };
    out += fmt::format("{} / {}: median {}, p20 {}\n", to_string(a), to_string(b),
                       r(x.median_throughput, y.median_throughput), r(x.p20_throughput, y.p20_throughput));
  };
  for (Strategy c : {Strategy::commrad_single, Strategy::commrad_multi}) {
    ratio(c, Strategy::non_collaborative);
    ratio(c, Strategy::oracle);
  }
  return out;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& base, const std::vector<double>& recal_periods,
                                  const std::vector<std::uint64_t>& seeds, const std::filesystem::path& dir,
                                  int threads) {
  std::vector<ExperimentConfig> configs;
  std::vector<SweepPoint> points;
  for (double period : recal_periods) {
    for (std::uint64_t seed : seeds) {
      ExperimentConfig c = base.with_seed(seed);
      c.recal_period = period;
      c.validate();
      configs.push_back(std::move(c));
      points.push_back({period, seed, {}});
    }
  }
  const int n = static_cast<int>(configs.size());
  const int workers = std::max(1, std::min(n, threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency())));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            points[i].log = run_scenario(configs[i]);
            if (!dir.empty()) {
              write_metrics(dir / fmt::format("recal_{}", points[i].recal_period) / fmt::format("seed_{}", points[i].seed),
                            points[i].log);
            }
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return points;
}

MetricsLog merge_logs(const std::vector<const MetricsLog*>& logs) {
  MetricsLog out;
  for (const auto* l : logs) {
    out.samples.insert(out.samples.end(), l->samples.begin(), l->samples.end());
    out.angle_errors.insert(out.angle_errors.end(), l->angle_errors.begin(), l->angle_errors.end());
    out.events.insert(out.events.end(), l->events.begin(), l->events.end());
    out.tracks.insert(out.tracks.end(), l->tracks.begin(), l->tracks.end());
    if (out.overhead.empty()) out.overhead = l->overhead;
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "recal_period,strategy,seeds,median_throughput_mbps,p20_throughput_mbps,median_angle_error_deg,"
         "p90_angle_error_deg,overhead_fraction\n";
  std::vector<double> periods;
  for (const auto& p : points) {
    if (std::find(periods.begin(), periods.end(), p.recal_period) == periods.end()) periods.push_back(p.recal_period);
  }
  for (double period : periods) {
    std::vector<const MetricsLog*> logs;
    for (const auto& p : points) {
      if (p.recal_period == period) logs.push_back(&p.log);
    }
    const auto summary = summarize(merge_logs(logs));
    for (const auto& s : summary.strategies) {
      const auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string(); };
      fmt::print(out, "{},{},{},{:.6f},{:.6f},{},{},{:.9f}\n", period, to_string(s.strategy), logs.size(),
                 s.median_throughput, s.p20_throughput, opt(s.median_angle_error), opt(s.p90_angle_error),
                 s.overhead_fraction);
    }
  }
}

}  // namespace commrad
