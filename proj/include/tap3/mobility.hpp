#pragma once

// Random waypoint mobility, advanced lazily to the query time.

#include <random>

namespace tap3 {

struct MobilityParams {
  double width = 300;
  double height = 300;
  double max_speed = 25;
  double pause_time = 0;
};

struct MobilityState {
  double x = 0;
  double y = 0;
  double waypoint_x = 0;
  double waypoint_y = 0;
  double speed = 0;        // m/s on the current leg
  double pause_until = 0;  // meaningful while not moving
  double updated = 0;      // time the position refers to
  bool moving = false;
};

/// Uniform start position with the first leg already drawn.
MobilityState random_waypoint_init(const MobilityParams& params, std::mt19937_64& rng);

/// Moves the node from `state.updated` to `now`. Legs are straight lines at a
/// speed drawn from (0, max_speed]; each arrival is followed by pause_time.
MobilityState random_waypoint_step(MobilityState state, double now,
                                   const MobilityParams& params, std::mt19937_64& rng);

}  // namespace tap3
