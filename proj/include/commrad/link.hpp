#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "commrad/beam_decision.hpp"
#include "commrad/blockage.hpp"
#include "commrad/radio.hpp"

namespace commrad {

struct ChannelPath {
  PathLabel label;
  double angle_deg = 0.0;
  std::complex<double> gain;  // unblocked amplitude; |gain|^2 is the path power gain
  bool blocked = false;
  double blockage_loss_db = 0.0;

  std::complex<double> effective_gain() const {
    return blocked ? gain * std::pow(10.0, -blockage_loss_db / 20.0) : gain;
  }
};

/// Downlink channel of one user.
struct ChannelState {
  std::vector<ChannelPath> paths;
  double signal_power_w = 0.0;
  double noise_power_w = 0.0;

  void validate() const;
};

/// Ground-truth channel from scene paths, with powers from the radio config.
ChannelState channel_from_paths(std::span<const Path> paths, const RadioConfig& radio);

/// Linear SNR of a beam decision. Each beam, strongest first, serves the
/// not-yet-served path it receives best (power gain times array gain); beams
/// add coherently with their amplitude and phase.
double snr(const ChannelState& channel, const BeamDecision& decision, int n_antennas);

/// Matched-filter bound: N * sum |gain|^2 * Ps / Pn.
double optimal_snr(const ChannelState& channel, int n_antennas);

/// Phase-coherent multi-beam over the given beams: amplitudes proportional to
/// sqrt(strength), phases cancelling each served path's phase in `channel`.
BeamDecision matched_multi_beam(const ChannelState& channel, std::span<const CandidatePath> beams, int n_antennas);

/// One beam per path, aimed exactly, weighted by the true path amplitudes.
BeamDecision optimal_multi_beam(const ChannelState& channel, int n_antennas);

double capacity_mbps(double snr_linear, double bandwidth_hz);

/// Share of airtime spent on scan plus feedback per recalibration period.
double overhead_fraction(double recal_period, double scan, double feedback);

enum class Strategy { oracle, commrad_single, commrad_multi, non_collaborative, reactive };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);
const std::vector<Strategy>& all_strategies();

enum class PathUse { direct, reflected, outage };

struct ThroughputSample {
  double t = 0.0;
  Strategy strategy = Strategy::oracle;
  int user_id = 0;
  double snr_db = 0.0;
  double throughput_mbps = 0.0;
  bool in_overhead = false;
  PathUse path_used = PathUse::direct;
  int reflector_index = -1;  // when path_used is reflected
  bool direct_blocked = false;  // ground truth: the direct path is obstructed at t
};

/// Everything a strategy knows about one user at time t, plus the true
/// channel the decision is scored against.
struct ControllerInputs {
  double t = 0.0;
  int user_id = 0;
  const ChannelState* truth = nullptr;
  std::vector<CandidatePath> candidates;  // direct first, then reflected
  std::vector<BlockageEvent> events;
  std::optional<double> scanned_angle_deg;  // best codebook beam of the last scan
  double overhead = 0.0;                    // airtime share charged to this strategy
  bool in_overhead = false;                 // a scan happens in this timestep
  double lead = 0.1;
};

struct ControllerOutput {
  BeamDecision decision;
  ThroughputSample sample;
};

/// Choose a beam for one user and score it.
ControllerOutput controller_step(Strategy strategy, const ControllerInputs& in, const RadioConfig& radio);

}  // namespace commrad
