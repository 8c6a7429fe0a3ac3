#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "commrad/config.hpp"

namespace commrad {

struct AngleErrorSample {
  double t = 0.0;
  int user_id = 0;
  Strategy strategy = Strategy::oracle;
  double error_deg = 0.0;
};

enum class EventKind { recalibration, blockage };

std::string_view to_string(EventKind kind);

/// Recalibration marker, or the first prediction of a blockage for one
/// (user, path, blocker) triple.
struct LogEvent {
  double t = 0.0;
  EventKind kind = EventKind::recalibration;
  int user_id = -1;
  PathLabel path;
  int blocker_id = -1;
  double t_arrival = 0.0;
  double duration = 0.0;
};

enum class Pipeline { collaborative, non_collaborative, objects };

std::string_view to_string(Pipeline p);

/// Track position after a radar step ("frame") or a recalibration ("recal").
/// Rows of the objects pipeline are non-user radar tracks (blocker candidates).
struct TrackRow {
  double t = 0.0;
  Pipeline pipeline = Pipeline::collaborative;
  bool recal = false;
  int user_id = 0;
  Point2 pos;
  int misses = 0;
  std::optional<Point2> truth;  // true position of the user the track is labelled with
};

struct StrategyOverhead {
  Strategy strategy = Strategy::oracle;
  double fraction = 0.0;
};

struct MetricsLog {
  std::vector<ThroughputSample> samples;  // sorted by t, then user, then strategy
  std::vector<AngleErrorSample> angle_errors;
  std::vector<LogEvent> events;
  std::vector<TrackRow> tracks;
  std::vector<ReflectorEstimate> reflectors;  // final collaborative estimates
  std::vector<StrategyOverhead> overhead;
};

/// Simulate a scene end to end. Radar frames at frame boundaries, beam scans
/// and recalibration at multiples of recal_period, one controller decision
/// per strategy, user and timestep. Deterministic per config.
MetricsLog run_scenario(const ExperimentConfig& config);

/// Linear interpolation between closest ranks; p in [0, 1]. Throws DomainError
/// on an empty input.
double percentile(std::vector<double> values, double p);

struct StrategySummary {
  Strategy strategy = Strategy::oracle;
  std::size_t n_samples = 0;
  double median_throughput = 0.0;
  double p20_throughput = 0.0;
  double p90_throughput = 0.0;
  double mean_throughput = 0.0;
  std::optional<double> median_angle_error;
  std::optional<double> p90_angle_error;
  double overhead_fraction = 0.0;
  double outage_fraction = 0.0;
  std::array<double, 101> throughput_cdf{};  // value at each percentile 0..100
  std::optional<std::array<double, 101>> angle_error_cdf;
};

struct Summary {
  std::vector<StrategySummary> strategies;

  const StrategySummary& at(Strategy s) const;
  bool has(Strategy s) const;
};

/// Per-strategy statistics. Throws DomainError on a log without samples.
Summary summarize(const MetricsLog& log);

/// Files written by write_metrics.
inline constexpr const char* kSamplesCsv = "samples.csv";
inline constexpr const char* kAngleErrorsCsv = "angle_errors.csv";
inline constexpr const char* kEventsCsv = "events.csv";
inline constexpr const char* kTracksCsv = "tracks.csv";
inline constexpr const char* kReflectorsCsv = "reflectors.csv";
inline constexpr const char* kOverheadCsv = "overhead.csv";
inline constexpr const char* kSummaryJson = "summary.json";

void write_samples_csv(std::ostream& out, const std::vector<ThroughputSample>& samples);
void write_angle_errors_csv(std::ostream& out, const std::vector<AngleErrorSample>& rows);
void write_events_csv(std::ostream& out, const std::vector<LogEvent>& events);
void write_tracks_csv(std::ostream& out, const std::vector<TrackRow>& rows);
void write_overhead_csv(std::ostream& out, const std::vector<StrategyOverhead>& rows);
std::string summary_json(const Summary& summary);

/// Write every CSV plus summary.json into dir (created if missing).
void write_metrics(const std::filesystem::path& dir, const MetricsLog& log);

/// Read the samples, angle errors and overhead CSVs back from a run directory.
MetricsLog read_metrics(const std::filesystem::path& dir);

/// Percentile tables for every strategy: cdf_throughput.csv, cdf_angle_error.csv.
void write_cdf_tables(const std::filesystem::path& dir, const Summary& summary);

/// Human-readable summary with commrad/baseline ratios.
std::string summary_text(const Summary& summary);

struct SweepPoint {
  double recal_period = 0.0;
  std::uint64_t seed = 0;
  MetricsLog log;
};

/// Runs every (recal_period, seed) pair in parallel on isolated state; results
/// come back in input order. Each run writes to dir/recal_<period>/seed_<seed>
/// when dir is non-empty.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& base, const std::vector<double>& recal_periods,
                                  const std::vector<std::uint64_t>& seeds, const std::filesystem::path& dir = {},
                                  int threads = 0);

/// Concatenate logs (samples of different runs are not interleaved).
MetricsLog merge_logs(const std::vector<const MetricsLog*>& logs);

/// Rows {recal_period, strategy, ...} with statistics pooled over seeds.
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);

}  // namespace commrad
