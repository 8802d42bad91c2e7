#include "tap3/mobility.hpp"

#include <algorithm>
#include <cmath>

namespace tap3 {

namespace {

// Below this the node is treated as stationary.
constexpr double kMinSpeed = 1e-9;

void draw_leg(MobilityState& s, const MobilityParams& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(0.0, p.width);
  std::uniform_real_distribution<double> uy(0.0, p.height);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  s.waypoint_x = ux(rng);
  s.waypoint_y = uy(rng);
  s.speed = p.max_speed * (1.0 - u(rng));
  s.moving = true;
}

}  // namespace

MobilityState random_waypoint_init(const MobilityParams& params, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(0.0, params.width);
  std::uniform_real_distribution<double> uy(0.0, params.height);
  MobilityState s;
  s.x = ux(rng);
  s.y = uy(rng);
  s.updated = 0;
  if (params.max_speed > kMinSpeed) draw_leg(s, params, rng);
  return s;
}

MobilityState random_waypoint_step(MobilityState s, double now, const MobilityParams& params,
                                   std::mt19937_64& rng) {
  if (now <= s.updated) return s;
  if (params.max_speed <= kMinSpeed) {
    s.updated = now;
    return s;
  }
  while (true) {
    if (s.moving) {
      const double dx = s.waypoint_x - s.x;
      const double dy = s.waypoint_y - s.y;
      const double remaining = std::hypot(dx, dy);
      const double arrive = s.updated + (s.speed > 0 ? remaining / s.speed : 0.0);
      if (now < arrive) {
        const double f = (now - s.updated) * s.speed / remaining;
        s.x = std::clamp(s.x + f * dx, 0.0, params.width);
        s.y = std::clamp(s.y + f * dy, 0.0, params.height);
        s.updated = now;
        return s;
      }
      s.x = s.waypoint_x;
      s.y = s.waypoint_y;
      s.updated = arrive;
      s.moving = false;
      s.pause_until = arrive + params.pause_time;
    } else {
      if (now < s.pause_until) {
        s.updated = now;
        return s;
      }
      s.updated = s.pause_until;
      draw_leg(s, params, rng);
    }
  }
}

}  // namespace tap3
