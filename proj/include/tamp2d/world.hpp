#ifndef TAMP2D_WORLD_HPP_
#define TAMP2D_WORLD_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tamp2d/config.hpp"
#include "tamp2d/geometry.hpp"

namespace tamp2d {

struct Disk {
  Vec2 pos;
  double radius = 0.0;
};

// Full 2D configuration. Values are immutable by convention: step() returns
// a fresh state, so states can be shared freely between workers.
struct WorldState {
  Vec2 robot_pos;
  double robot_theta = 0.0;
  double robot_radius = 0.4;
  double aperture = 1.0;                 // 1 = open, 0 = closed
  std::optional<int> attached;           // object id rigidly at the gripper
  std::vector<Disk> objects;
  std::vector<Disk> targets;
  std::vector<Segment> walls;
  std::int64_t time = 0;

  // The parallel-jaw gripper point coincides with the robot center.
  Vec2 gripper() const { return robot_pos; }
};

struct Control {
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;
  double grip = 0.0;  // >0 close, <0 open
};

struct LidarScan {
  std::vector<double> ranges;  // one per bearing 2*pi*i/n
};

inline WorldState make_world(const DomainConfig& cfg) {
  WorldState w;
  w.robot_radius = cfg.robot_radius;
  w.robot_pos = {cfg.workspace / 2.0, cfg.workspace / 2.0};
  const double W = cfg.workspace;
  w.walls = {{{0, 0}, {W, 0}}, {{W, 0}, {W, W}}, {{W, W}, {0, W}}, {{0, W}, {0, 0}}};
  return w;
}

inline Control clamp_control(const Control& u, const DomainConfig& cfg) {
  Control c;
  c.vx = std::clamp(u.vx, -cfg.v_max, cfg.v_max);
  c.vy = std::clamp(u.vy, -cfg.v_max, cfg.v_max);
  const double speed = std::sqrt(c.vx * c.vx + c.vy * c.vy);
  if (speed > cfg.v_max) {
    const double s = cfg.v_max / speed;
    c.vx *= s;
    c.vy *= s;
  }
  c.omega = std::clamp(u.omega, -cfg.omega_max, cfg.omega_max);
  c.grip = std::clamp(u.grip, -1.0, 1.0);
  return c;
}

// Kinematic step: integrate velocities, resolve wall penetration by
// projection, then process the grip signal (attach within grasp_tol on
// close, release on open). Attached objects track the gripper rigidly.
inline WorldState step(const WorldState& x, const Control& u_raw,
                       const DomainConfig& cfg, double dt) {
  if (!std::isfinite(u_raw.vx) || !std::isfinite(u_raw.vy) ||
      !std::isfinite(u_raw.omega) || !std::isfinite(u_raw.grip))
    throw std::invalid_argument("non-finite control");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");

  const Control u = clamp_control(u_raw, cfg);

  WorldState n = x;
  n.robot_pos += Vec2{u.vx * dt, u.vy * dt};
  n.robot_theta = wrap_angle(n.robot_theta + u.omega * dt);

  // Push out of any penetrated wall. A few passes settle corner cases.
  for (int pass = 0; pass < 4; ++pass) {
    bool moved = false;
    for (const Segment& s : n.walls) {
      const Vec2 cp = closest_point_on_segment(s, n.robot_pos);
      Vec2 d = n.robot_pos - cp;
      double dist = d.norm();
      if (dist < n.robot_radius) {
        if (dist < 1e-12) {
          // Fell exactly onto the wall; push along the segment normal.
          const Vec2 t = s.b - s.a;
          d = {-t.y, t.x};
          dist = d.norm();
        }
        n.robot_pos = cp + d * (n.robot_radius / dist);
        moved = true;
      }
    }
    if (!moved) break;
  }

  if (u.grip > 0.0) {
    n.aperture = 0.0;
    if (!n.attached) {
      int best = -1;
      double best_d = cfg.grasp_tol;
      for (std::size_t i = 0; i < n.objects.size(); ++i) {
        const double d = (n.objects[i].pos - n.gripper()).norm();
        if (d <= best_d) {
          best_d = d;
          best = static_cast<int>(i);
        }
      }
      if (best >= 0) n.attached = best;
    }
  } else if (u.grip < 0.0) {
    n.aperture = 1.0;
    n.attached.reset();
  }

  if (n.attached) n.objects[*n.attached].pos = n.gripper();

  n.time = x.time + 1;
  return n;
}

// Ray i is cast at world-frame bearing 2*pi*i/n from the robot center.
// Walls and loose objects are obstacles; the held object and the targets
// are not. Readings saturate at the configured max range.
inline LidarScan lidar(const WorldState& x, const DomainConfig& cfg) {
  LidarScan scan;
  scan.ranges.resize(cfg.lidar_rays);
  const double max_range = cfg.lidar_max_range();
  for (int i = 0; i < cfg.lidar_rays; ++i) {
    const double bearing = 2.0 * M_PI * i / cfg.lidar_rays;
    const Vec2 dir{std::cos(bearing), std::sin(bearing)};
    double best = max_range;
    for (const Segment& s : x.walls)
      best = std::min(best, ray_segment(x.robot_pos, dir, s));
    for (std::size_t j = 0; j < x.objects.size(); ++j) {
      if (x.attached && *x.attached == static_cast<int>(j)) continue;
      best = std::min(best,
                      ray_circle(x.robot_pos, dir, x.objects[j].pos,
                                 x.objects[j].radius));
    }
    scan.ranges[i] = std::min(best, max_range);
  }
  return scan;
}

// Depth of the deepest robot-wall penetration; 0 when clear.
inline double wall_penetration(const WorldState& x) {
  double depth = 0.0;
  for (const Segment& s : x.walls) {
    const double d = dist_point_segment(x.robot_pos, s);
    depth = std::max(depth, x.robot_radius - d);
  }
  return std::max(depth, 0.0);
}

}  // namespace tamp2d

#endif  // TAMP2D_WORLD_HPP_
