#include "commrad/link.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace commrad {

void ChannelState::validate() const {
  if (!(signal_power_w > 0)) throw DomainError("ChannelState.signal_power_w must be > 0");
  if (!(noise_power_w > 0)) throw DomainError("ChannelState.noise_power_w must be > 0");
}

ChannelState channel_from_paths(std::span<const Path> paths, const RadioConfig& radio) {
  ChannelState ch;
  ch.signal_power_w = db_to_linear(radio.tx_power_dbm) * 1e-3;
  ch.noise_power_w = db_to_linear(radio.noise_power_dbm) * 1e-3;
  for (const auto& p : paths) {
    ChannelPath cp;
    cp.label = p.kind == PathKind::direct ? PathLabel::direct() : PathLabel::reflected(p.reflector_index);
    cp.angle_deg = p.departure_angle_deg;
    cp.gain = p.gain;
    cp.blocked = p.blocked;
    cp.blockage_loss_db = p.blockage_loss_db;
    ch.paths.push_back(cp);
  }
  return ch;
}

namespace {

// Coherent contributions of each beam after beam-to-path association.
struct Served {
  int path = -1;
  std::complex<double> response;  // effective gain times array response
};

// Each beam of a multi-beam serves the untaken path nearest its steering
// angle; a single beam serves the path it receives best.
std::vector<Served> associate(const ChannelState& ch, const BeamDecision& d, const std::vector<int>& order,
                              int n_antennas) {
  const auto& beams = d.beams;
  std::vector<Served> out(beams.size());
  std::vector<char> taken(ch.paths.size(), 0);
  if (d.mode == BeamMode::multi) {
    for (int b : order) {
      int nearest = -1;
      for (std::size_t l = 0; l < ch.paths.size(); ++l) {
        if (taken[l]) continue;
        if (nearest < 0 || std::abs(ch.paths[l].angle_deg - beams[b].angle_deg) <
                               std::abs(ch.paths[nearest].angle_deg - beams[b].angle_deg))
          nearest = static_cast<int>(l);
      }
      if (nearest < 0) continue;
      const auto& p = ch.paths[nearest];
      out[b] = {nearest, p.effective_gain() * steered_response(n_antennas, beams[b].angle_deg, p.angle_deg)};
      taken[nearest] = 1;
    }
  }
  for (int b : order) {
    if (out[b].path >= 0) continue;
    double best = -1.0;
    for (std::size_t l = 0; l < ch.paths.size(); ++l) {
      if (taken[l]) continue;
      const auto r = ch.paths[l].effective_gain() * steered_response(n_antennas, beams[b].angle_deg, ch.paths[l].angle_deg);
      if (std::norm(r) > best) {
        best = std::norm(r);
        out[b] = {static_cast<int>(l), r};
      }
    }
    if (out[b].path >= 0) taken[out[b].path] = 1;
  }
  return out;
}

std::vector<int> strongest_first(const std::vector<Beam>& beams) {
  std::vector<int> order(beams.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return beams[a].amplitude > beams[b].amplitude; });
  return order;
}

}  // namespace

double snr(const ChannelState& channel, const BeamDecision& decision, int n_antennas) {
  if (channel.paths.empty() || decision.beams.empty()) return 0.0;
  const auto served = associate(channel, decision, strongest_first(decision.beams), n_antennas);
  std::complex<double> y = 0.0;
  for (std::size_t b = 0; b < served.size(); ++b) {
    if (served[b].path < 0) continue;
    y += decision.beams[b].amplitude * std::polar(1.0, decision.beams[b].phase) * served[b].response;
  }
  return std::norm(y) * channel.signal_power_w / channel.noise_power_w;
}

double optimal_snr(const ChannelState& channel, int n_antennas) {
  double sum = 0.0;
  for (const auto& p : channel.paths) sum += std::norm(p.effective_gain());
  return n_antennas * sum * channel.signal_power_w / channel.noise_power_w;
}

BeamDecision matched_multi_beam(const ChannelState& channel, std::span<const CandidatePath> beams, int n_antennas) {
  BeamDecision d;
  d.mode = beams.size() > 1 ? BeamMode::multi : BeamMode::single;
  double total = 0.0;
  for (const auto& c : beams) total += std::max(c.strength, 0.0);
  for (const auto& c : beams) {
    const double amp = total > 0 ? std::sqrt(std::max(c.strength, 0.0) / total) : 1.0 / std::sqrt(beams.size());
    d.beams.push_back({c.angle_deg, amp, 0.0, c.label});
  }
  const auto served = associate(channel, d, strongest_first(d.beams), n_antennas);
  for (std::size_t b = 0; b < served.size(); ++b) {
    if (served[b].path >= 0) d.beams[b].phase = -std::arg(served[b].response);
  }
  return d;
}

BeamDecision optimal_multi_beam(const ChannelState& channel, int n_antennas) {
  std::vector<CandidatePath> c;
  for (const auto& p : channel.paths) c.push_back({p.label, p.angle_deg, std::norm(p.effective_gain())});
  if (c.empty()) {
    BeamDecision d;
    d.outage = true;
    return d;
  }
  return matched_multi_beam(channel, c, n_antennas);
}

double capacity_mbps(double snr_linear, double bandwidth_hz) {
  if (!(snr_linear >= 0)) throw DomainError("capacity_mbps: snr must be >= 0");
  return bandwidth_hz * std::log2(1.0 + snr_linear) / 1e6;
}

double overhead_fraction(double recal_period, double scan, double feedback) {
  if (!(recal_period > scan + feedback)) throw DomainError("overhead_fraction: period must exceed scan + feedback");
  return (scan + feedback) / recal_period;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::oracle: return "oracle";
    case Strategy::commrad_single: return "commrad_single";
    case Strategy::commrad_multi: return "commrad_multi";
    case Strategy::non_collaborative: return "non_collaborative";
    case Strategy::reactive: return "reactive";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : all_strategies()) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> all = {Strategy::oracle, Strategy::commrad_single, Strategy::commrad_multi,
                                            Strategy::non_collaborative, Strategy::reactive};
  return all;
}

namespace {

BeamDecision multi_with_mitigation(const ControllerInputs& in, int n_antennas) {
  std::vector<CandidatePath> open;
  for (const auto& c : in.candidates) {
    if (!path_blocked(in.events, c.label, in.t, in.lead)) open.push_back(c);
  }
  if (open.empty()) return mitigate(in.events, in.candidates, in.t, in.lead);
  std::stable_sort(open.begin(), open.end(), [](const auto& a, const auto& b) { return a.strength > b.strength; });
  if (open.size() > 2) open.resize(2);
  return matched_multi_beam(*in.truth, open, n_antennas);
}

}  // namespace

ControllerOutput controller_step(Strategy strategy, const ControllerInputs& in, const RadioConfig& radio) {
  if (!in.truth) throw DomainError("controller_step: missing channel");
  ControllerOutput out;
  auto& d = out.decision;
  switch (strategy) {
    case Strategy::oracle:
      d = optimal_multi_beam(*in.truth, radio.n_antennas);
      break;
    case Strategy::commrad_single:
    case Strategy::non_collaborative:
      d = mitigate(in.events, in.candidates, in.t, in.lead);
      break;
    case Strategy::commrad_multi:
      d = multi_with_mitigation(in, radio.n_antennas);
      break;
    case Strategy::reactive:
      if (in.scanned_angle_deg) {
        d = BeamDecision::single(*in.scanned_angle_deg, PathLabel::direct());
      } else {
        d.outage = true;
      }
      break;
  }
  const double s = snr(*in.truth, d, radio.n_antennas);
  auto& smp = out.sample;
  smp.t = in.t;
  smp.strategy = strategy;
  smp.user_id = in.user_id;
  smp.snr_db = s > 0 ? linear_to_db(s) : kRssFloorDbm;
  smp.throughput_mbps = capacity_mbps(s, radio.comm_bandwidth) * (1.0 - in.overhead);
  smp.in_overhead = in.in_overhead;
  if (d.outage || d.beams.empty()) {
    smp.path_used = PathUse::outage;
  } else {
    const PathLabel p = d.primary_path();
    smp.path_used = p.kind == PathKind::direct ? PathUse::direct : PathUse::reflected;
    smp.reflector_index = p.reflector_index;
  }
  return out;
}

}  // namespace commrad
