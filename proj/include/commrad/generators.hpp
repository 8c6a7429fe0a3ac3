#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "commrad/scene.hpp"

namespace commrad {

/// Names accepted by generate_scene.
const std::vector<std::string>& generator_names();

/// Built-in scenario by name; throws ConfigError for unknown names.
Scene generate_scene(std::string_view name, std::uint64_t seed);

/// Two users on mirror-image diagonals meet at (0, 6), stand together for
/// 2 s, then continue to the far side.
Scene crossing_2users(std::uint64_t seed);

/// Four users walking corner to opposite corner across one area.
Scene crossing_4users(std::uint64_t seed);

/// A user walks past a short wall whose reflected path exists only between
/// roughly 2 s and 7 s.
Scene reflector_walk(std::uint64_t seed);

/// A static user with one side-wall reflection; a person walks through the
/// direct path once.
Scene blocker_crossing(std::uint64_t seed);

/// Randomised composite of crossings, pauses, walls and blockers.
Scene mixed_suite(std::uint64_t seed);

/// Radar clutter points spaced along a reflector.
void add_wall_clutter(Scene& scene, const ReflectorSpec& wall, double spacing = 0.5, double rcs = 2.0);

}  // namespace commrad
