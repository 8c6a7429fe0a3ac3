#pragma once

#include <algorithm>
#include <vector>

#include "commrad/scene.hpp"

namespace commrad {

/// Which propagation path a beam serves.
struct PathLabel {
  PathKind kind = PathKind::direct;
  int reflector_index = -1;

  static PathLabel direct() { return {}; }
  static PathLabel reflected(int index) { return {PathKind::reflected, index}; }
  friend bool operator==(const PathLabel&, const PathLabel&) = default;
};

enum class BeamMode { single, multi };

struct Beam {
  double angle_deg = 0.0;
  double amplitude = 1.0;  // share of the transmit amplitude
  double phase = 0.0;      // radians
  PathLabel path;
};

/// Transmit beam configuration. Amplitudes satisfy sum(amplitude^2) = 1.
struct BeamDecision {
  BeamMode mode = BeamMode::single;
  std::vector<Beam> beams;
  bool outage = false;  // every known path is blocked; beam held

  static BeamDecision single(double angle_deg, PathLabel path) {
    return {BeamMode::single, {{angle_deg, 1.0, 0.0, path}}, false};
  }
  /// Path of the strongest beam, used for logging.
  PathLabel primary_path() const {
    if (beams.empty()) return {};
    return std::max_element(beams.begin(), beams.end(), [](const Beam& a, const Beam& b) {
             return a.amplitude < b.amplitude;
           })->path;
  }
};

}  // namespace commrad
