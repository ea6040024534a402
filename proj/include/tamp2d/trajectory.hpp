#ifndef TAMP2D_TRAJECTORY_HPP_
#define TAMP2D_TRAJECTORY_HPP_

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tamp2d/domain.hpp"

namespace tamp2d {

struct Waypoint {
  Vec2 pos;
  double theta = 0.0;
  double grip = -1.0;  // commanded gripper signal, piecewise constant
};

// Fixed-horizon robot configuration sequence for one ground action.
struct Trajectory {
  std::vector<Waypoint> waypoints;
  double dt = 1.0;  // duration of one step when converted to controls

  std::size_t size() const { return waypoints.size(); }
  const Waypoint& operator[](std::size_t i) const { return waypoints[i]; }
  Waypoint& operator[](std::size_t i) { return waypoints[i]; }
  const Waypoint& back() const { return waypoints.back(); }
};

// Sum of squared consecutive differences over the (x, y, theta) components.
inline double smoothing_cost(const Trajectory& tau) {
  if (tau.size() < 2) throw std::invalid_argument("trajectory too short");
  double c = 0.0;
  for (std::size_t t = 0; t + 1 < tau.size(); ++t) {
    const Vec2 dp = tau[t + 1].pos - tau[t].pos;
    const double dth = tau[t + 1].theta - tau[t].theta;
    c += dp.norm2() + dth * dth;
  }
  return c;
}

// Quadratic mismatch between the two velocity profiles; invariant to a
// constant offset of all waypoints.
inline double deviation_cost(const Trajectory& tau, const Trajectory& ref) {
  if (tau.size() != ref.size())
    throw std::invalid_argument("deviation_cost: length mismatch");
  double c = 0.0;
  for (std::size_t t = 0; t + 1 < tau.size(); ++t) {
    const Vec2 dv = (tau[t + 1].pos - tau[t].pos) - (ref[t + 1].pos - ref[t].pos);
    const double dth = (tau[t + 1].theta - tau[t].theta) -
                       (ref[t + 1].theta - ref[t].theta);
    c += dv.norm2() + dth * dth;
  }
  return c;
}

// Resample so no consecutive (x, y) displacement exceeds max_disp, keeping
// every original vertex (path preserved exactly), then append two no-op
// waypoints. Theta interpolates linearly along each original segment; the
// grip command of a subdivided segment is taken from its end vertex.
inline Trajectory retime(const Trajectory& tau, const DomainConfig& cfg) {
  const double max_disp = cfg.retime_step;
  Trajectory out;
  out.dt = cfg.retime_step / cfg.v_max;
  if (tau.waypoints.empty()) {
    out.waypoints.assign(3, Waypoint{});
    return out;
  }
  out.waypoints.push_back(tau[0]);
  for (std::size_t t = 0; t + 1 < tau.size(); ++t) {
    const Waypoint& a = tau[t];
    const Waypoint& b = tau[t + 1];
    const double len = (b.pos - a.pos).norm();
    int n = 1;
    if (len > max_disp)
      n = static_cast<int>(std::ceil(len / max_disp - 1e-12));
    for (int k = 1; k <= n; ++k) {
      const double s = static_cast<double>(k) / n;
      Waypoint w;
      w.pos = a.pos + (b.pos - a.pos) * s;
      w.theta = a.theta + (b.theta - a.theta) * s;
      w.grip = b.grip;
      out.waypoints.push_back(w);
    }
  }
  Waypoint noop = out.waypoints.back();
  out.waypoints.push_back(noop);
  out.waypoints.push_back(noop);
  return out;
}

// Finite-difference velocities; the grip channel carries the commanded
// state of the step's end vertex. Pure integration of the result from
// waypoint 0 reproduces the waypoints exactly.
inline std::vector<Control> controls_from(const Trajectory& tau) {
  if (tau.size() < 2) throw std::invalid_argument("trajectory too short");
  std::vector<Control> us;
  us.reserve(tau.size() - 1);
  for (std::size_t t = 0; t + 1 < tau.size(); ++t) {
    Control u;
    u.vx = (tau[t + 1].pos.x - tau[t].pos.x) / tau.dt;
    u.vy = (tau[t + 1].pos.y - tau[t].pos.y) / tau.dt;
    u.omega = (tau[t + 1].theta - tau[t].theta) / tau.dt;
    u.grip = tau[t + 1].grip;
    us.push_back(u);
  }
  return us;
}

// Execute the trajectory's controls through the simulator from x0.
inline WorldState execute(const WorldState& x0, const Trajectory& tau,
                          const DomainConfig& cfg) {
  WorldState x = x0;
  for (const Control& u : controls_from(tau)) x = step(x, u, cfg, tau.dt);
  return x;
}

}  // namespace tamp2d

#endif  // TAMP2D_TRAJECTORY_HPP_
