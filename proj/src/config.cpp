#include "commrad/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "commrad/generators.hpp"

namespace commrad {

using nlohmann::json;

namespace {

// Field lists shared by reading and writing.
template <class V>
void visit(V& v, RadarConfig& c) {
  v("carrier_freq", c.carrier_freq);
  v("bandwidth", c.bandwidth);
  v("samples_per_chirp", c.samples_per_chirp);
  v("chirp_slope", c.chirp_slope);
  v("ramp_time", c.ramp_time);
  v("chirp_duration", c.chirp_duration);
  v("chirps_per_frame", c.chirps_per_frame);
  v("frame_period", c.frame_period);
  v("n_tx", c.n_tx);
  v("n_rx", c.n_rx);
  v("noise_floor_dbm", c.noise_floor_dbm);
  v("reference_power_dbm", c.reference_power_dbm);
  v("mount_offset", c.mount_offset);
  v("velocity_resolution", c.velocity_resolution);
  v("map_range_bins", c.map_range_bins);
  v("angle_step_deg", c.angle_step_deg);
  v("fov_deg", c.fov_deg);
}

template <class V>
void visit(V& v, RadioConfig& c) {
  v("carrier_freq", c.carrier_freq);
  v("n_antennas", c.n_antennas);
  v("codebook_size", c.codebook_size);
  v("fov_deg", c.fov_deg);
  v("symbol_duration", c.symbol_duration);
  v("n_subcarriers", c.n_subcarriers);
  v("subcarrier_spacing", c.subcarrier_spacing);
  v("comm_bandwidth", c.comm_bandwidth);
  v("tx_power_dbm", c.tx_power_dbm);
  v("noise_power_dbm", c.noise_power_dbm);
  v("feedback_duration", c.feedback_duration);
}

template <class V>
void visit(V& v, TrackerConfig& c) {
  v("sigma_accel", c.sigma_accel);
  v("range_sigma", c.range_sigma);
  v("angle_res_deg", c.angle_res_deg);
  v("bbox_half_extent", c.bbox_half_extent);
  v("detection_margin_db", c.detection_margin_db);
  v("max_misses", c.max_misses);
  v("clutter_alpha", c.clutter_alpha);
  v("clutter_window", c.clutter_window);
  v("object_gate", c.object_gate);
  v("object_user_exclusion", c.object_user_exclusion);
  v("sidelobe_rejection_db", c.sidelobe_rejection_db);
  v("object_merge_radius", c.object_merge_radius);
  v("object_dynamic_range_db", c.object_dynamic_range_db);
  v("context_sigma", c.context_sigma);
}

template <class V>
void visit(V& v, ContextConfig& c) {
  v("friis_calibration_db", c.friis_calibration_db);
  v("radar_angle_gate_deg", c.radar_angle_gate_deg);
  v("radar_margin_db", c.radar_margin_db);
  v("angle_grid_deg", c.angle_grid_deg);
  v("delay_grid_s", c.delay_grid_s);
  v("max_paths", c.max_paths);
  v("eig_threshold_db", c.eig_threshold_db);
  v("peak_threshold_db", c.peak_threshold_db);
  v("smoothing_length", c.smoothing_length);
  v("cluster_angle_deg", c.cluster_angle_deg);
  v("cluster_distance", c.cluster_distance);
}

template <class V>
void visit(V& v, BlockageConfig& c) {
  v("region_width", c.region_width);
  v("horizon", c.horizon);
  v("lead", c.lead);
}

template <class V>
void visit(V& v, Waypoint& w) {
  v("t", w.t);
  v("pos", w.pos);
}

template <class V>
void visit(V& v, UserSpec& u) {
  v("user_id", u.user_id);
  v("waypoints", u.waypoints);
  v("rcs", u.rcs);
}

template <class V>
void visit(V& v, ReflectorSpec& r) {
  v("p1", r.p1);
  v("p2", r.p2);
  v("reflection_coeff", r.reflection_coeff);
}

template <class V>
void visit(V& v, BlockerSpec& b) {
  v("waypoints", b.waypoints);
  v("length_lB", b.length_lB);
  v("attenuation_db", b.attenuation_db);
  v("rcs", b.rcs);
}

template <class V>
void visit(V& v, ClutterPoint& c) {
  v("pos", c.pos);
  v("rcs", c.rcs);
}

template <class V>
void visit(V& v, Scene& s) {
  v("users", s.users);
  v("reflectors", s.reflectors);
  v("blockers", s.blockers);
  v("static_clutter", s.static_clutter);
  v("duration", s.duration);
  v("seed", s.seed);
  v("max_speed", s.max_speed);
}

struct Writer {
  json& j;

  template <class T>
  void operator()(const char* key, const T& value) {
    j[key] = encode(value);
  }

  template <class T>
  static json encode(const T& value) {
    if constexpr (std::is_same_v<T, Point2>) {
      return json::array({value.x, value.y});
    } else if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, std::string>) {
      return value;
    } else if constexpr (requires { value.begin(); }) {
      json arr = json::array();
      for (const auto& e : value) arr.push_back(encode(e));
      return arr;
    } else {
      json obj = json::object();
      Writer w{obj};
      visit(w, const_cast<T&>(value));
      return obj;
    }
  }
};

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

struct Reader {
  const json& j;
  std::string path;

  Reader(const json& node, std::string where) : j(node), path(std::move(where)) {
    if (!j.is_object()) fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) keys.insert(it.key());
  }

  template <class T>
  void operator()(const char* key, T& out) {
    if (!j.contains(key)) return;
    keys.erase(key);
    decode(j.at(key), path + "." + key, out);
  }

  void finish() const {
    if (!keys.empty()) fail(path + "." + *keys.begin(), "unknown field");
  }

  template <class T>
  static void decode(const json& v, const std::string& where, T& out) {
    if constexpr (std::is_same_v<T, Point2>) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) fail(where, "expected [x, y]");
      out = {v[0].get<double>(), v[1].get<double>()};
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(where, "expected a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(where, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0) {
          out = v.get<T>();
        } else {
          fail(where, "expected a non-negative integer");
        }
      } else {
        out = v.get<T>();
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(where, "expected a number");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(where, "expected a string");
      out = v.get<std::string>();
    } else if constexpr (requires { out.emplace_back(); }) {
      if (!v.is_array()) fail(where, "expected an array");
      out.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        decode(v[i], where + "[" + std::to_string(i) + "]", out.emplace_back());
      }
    } else {
      Reader r(v, where);
      visit(r, out);
      r.finish();
    }
  }

 private:
  std::set<std::string> keys;
};

template <class T>
void read_section(const json& root, const char* key, T& out) {
  if (!root.contains(key)) return;
  Reader::decode(root.at(key), key, out);
}

void check_positive(double v, const char* field) {
  if (!(v > 0) || !std::isfinite(v)) throw ConfigError(std::string(field) + ": must be > 0");
}

bool is_multiple(double value, double step) {
  const double n = std::round(value / step);
  return n >= 1 && std::abs(value - n * step) <= 1e-9 * std::max(1.0, value);
}

}  // namespace

void ExperimentConfig::validate() const {
  scene.validate();
  radar.validate();
  radio.validate();
  if (strategies.empty()) throw ConfigError("strategies: at least one strategy required");
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (strategies[k] == strategies[i])
        throw ConfigError("strategies[" + std::to_string(i) + "]: duplicate strategy");
    }
  }
  check_positive(timestep, "timestep");
  if (timestep > radar.frame_period + 1e-12) throw ConfigError("timestep: must not exceed radar.frame_period");
  if (!is_multiple(radar.frame_period, timestep))
    throw ConfigError("radar.frame_period: must be a multiple of timestep");
  check_positive(recal_period, "recal_period");
  if (!is_multiple(recal_period, timestep)) throw ConfigError("recal_period: must be a multiple of timestep");
  if (!(recal_period > scan_duration(radio) + radio.feedback_duration))
    throw ConfigError("recal_period: must exceed scan plus feedback time");
  if (!is_multiple(scene.duration, timestep)) throw ConfigError("scene.duration: must be a multiple of timestep");
  check_positive(tracker.sigma_accel, "tracker.sigma_accel");
  check_positive(tracker.range_sigma, "tracker.range_sigma");
  check_positive(tracker.angle_res_deg, "tracker.angle_res_deg");
  check_positive(tracker.bbox_half_extent, "tracker.bbox_half_extent");
  if (tracker.max_misses < 0) throw ConfigError("tracker.max_misses: must be >= 0");
  if (!(tracker.clutter_alpha > 0 && tracker.clutter_alpha <= 1))
    throw ConfigError("tracker.clutter_alpha: must lie in (0, 1]");
  if (tracker.clutter_window < 1) throw ConfigError("tracker.clutter_window: must be >= 1");
  check_positive(tracker.object_gate, "tracker.object_gate");
  check_positive(tracker.context_sigma, "tracker.context_sigma");
  check_positive(context.angle_grid_deg, "context.angle_grid_deg");
  check_positive(context.delay_grid_s, "context.delay_grid_s");
  if (context.max_paths < 1) throw ConfigError("context.max_paths: must be >= 1");
  if (context.smoothing_length < 2 || context.smoothing_length > radio.n_subcarriers)
    throw ConfigError("context.smoothing_length: must lie in [2, radio.n_subcarriers]");
  check_positive(context.cluster_angle_deg, "context.cluster_angle_deg");
  check_positive(context.cluster_distance, "context.cluster_distance");
  check_positive(blockage.region_width, "blockage.region_width");
  check_positive(blockage.horizon, "blockage.horizon");
  if (!(blockage.lead >= 0)) throw ConfigError("blockage.lead: must be >= 0");
  check_positive(blocker_length, "blocker_length");
  if (!(min_blocker_speed >= 0)) throw ConfigError("min_blocker_speed: must be >= 0");
  if (min_blocker_hits < 1) throw ConfigError("min_blocker_hits: must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

int ExperimentConfig::n_steps() const { return static_cast<int>(std::lround(scene.duration / timestep)); }
int ExperimentConfig::steps_per_frame() const { return static_cast<int>(std::lround(radar.frame_period / timestep)); }
int ExperimentConfig::steps_per_recal() const { return static_cast<int>(std::lround(recal_period / timestep)); }

ExperimentConfig ExperimentConfig::with_seed(std::uint64_t seed) const {
  ExperimentConfig out = *this;
  if (!scene_generator.empty()) {
    out.scene = generate_scene(scene_generator, seed);
  } else {
    out.scene.seed = seed;
  }
  return out;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json root = json::object();
  if (cfg.scene_generator.empty()) {
    root["scene"] = Writer::encode(cfg.scene);
  } else {
    root["scene"] = {{"generator", cfg.scene_generator}, {"seed", cfg.scene.seed}};
  }
  root["radar"] = Writer::encode(cfg.radar);
  root["radio"] = Writer::encode(cfg.radio);
  root["tracker"] = Writer::encode(cfg.tracker);
  root["context"] = Writer::encode(cfg.context);
  root["blockage"] = Writer::encode(cfg.blockage);
  root["blocker_length"] = cfg.blocker_length;
  root["min_blocker_speed"] = cfg.min_blocker_speed;
  root["min_blocker_hits"] = cfg.min_blocker_hits;
  json names = json::array();
  for (Strategy s : cfg.strategies) names.push_back(std::string(to_string(s)));
  root["strategies"] = names;
  root["recal_period"] = cfg.recal_period;
  root["timestep"] = cfg.timestep;
  root["output_dir"] = cfg.output_dir;
  return root.dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::set<std::string> known = {"scene",    "radar",          "radio",          "tracker",
                                              "context",  "blockage",       "blocker_length", "min_blocker_speed", "min_blocker_hits",
                                              "strategies", "recal_period", "timestep",       "output_dir"};
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError(it.key() + ": unknown field");
  }
  ExperimentConfig cfg;
  read_section(root, "radar", cfg.radar);
  cfg.tracker = TrackerConfig::for_radar(cfg.radar);
  read_section(root, "radio", cfg.radio);
  read_section(root, "tracker", cfg.tracker);
  read_section(root, "context", cfg.context);
  read_section(root, "blockage", cfg.blockage);
  read_section(root, "blocker_length", cfg.blocker_length);
  read_section(root, "min_blocker_speed", cfg.min_blocker_speed);
  read_section(root, "min_blocker_hits", cfg.min_blocker_hits);
  read_section(root, "recal_period", cfg.recal_period);
  read_section(root, "timestep", cfg.timestep);
  read_section(root, "output_dir", cfg.output_dir);
  if (root.contains("strategies")) {
    std::vector<std::string> names;
    Reader::decode(root.at("strategies"), "strategies", names);
    cfg.strategies.clear();
    for (std::size_t i = 0; i < names.size(); ++i) {
      try {
        cfg.strategies.push_back(parse_strategy(names[i]));
      } catch (const ConfigError& e) {
        throw ConfigError("strategies[" + std::to_string(i) + "]: " + e.what());
      }
    }
  }
  if (!root.contains("scene")) throw ConfigError("scene: required");
  const json& sj = root.at("scene");
  if (sj.is_object() && sj.contains("generator")) {
    std::string name;
    std::uint64_t seed = 1;
    Reader r(sj, "scene");
    r("generator", name);
    r("seed", seed);
    r.finish();
    try {
      cfg.scene = generate_scene(name, seed);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("scene.generator: ") + e.what());
    }
    cfg.scene_generator = name;
  } else {
    Reader::decode(sj, "scene", cfg.scene);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace commrad
