#ifndef TAMP2D_PROBLEMS_HPP_
#define TAMP2D_PROBLEMS_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "tamp2d/domain.hpp"
#include "tamp2d/trajectory.hpp"

namespace tamp2d {

// Seeded generator with platform-independent draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  double uniform() {  // [0, 1)
    return (next() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int n) {  // [0, n)
    return static_cast<int>(next() % static_cast<std::uint64_t>(n));
  }
  double normal() {
    // Box-Muller; fixed draw order keeps runs reproducible.
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 eng_;
};

struct PlanningProblem {
  WorldState x0;
  LogicalState phi0;
  Goal goal;
  std::vector<Trajectory> prefix;  // already-refined segments from x0
  int priority = 0;                // unsatisfied goal conjuncts (fewer first)
  std::uint64_t seq = 0;           // assigned by the queue, breaks ties
  bool from_exploration = false;   // pushed back by a monitored rollout
};

inline int unsatisfied_conjuncts(const WorldState& x, const Goal& g,
                                 const DomainConfig& cfg) {
  int n = 0;
  for (const Fluent& f : g.conjuncts)
    if (!holds(f, x, cfg)) ++n;
  return n;
}

// Fixed target layout: two centered rows of four. Kept deterministic so a
// domain size fully determines the observation semantics.
inline std::vector<Disk> default_targets(const DomainConfig& cfg) {
  std::vector<Disk> targets;
  const double W = cfg.workspace;
  const int per_row = 4;
  const int rows = (cfg.n_targets + per_row - 1) / per_row;
  for (int i = 0; i < cfg.n_targets; ++i) {
    const int r = i / per_row;
    const int c = i % per_row;
    Disk d;
    d.radius = cfg.target_radius;
    d.pos.x = W * (c + 1.0) / (per_row + 1.0);
    d.pos.y = W * (r + 1.0) / (rows + 1.0);
    targets.push_back(d);
  }
  return targets;
}

// Draw from the base problem distribution P: robot and objects placed
// uniformly in free space without overlap (objects also clear of target
// disks so no goal conjunct starts satisfied), one distinct target per
// object, empty prefix.
inline PlanningProblem sample_problem(Rng& rng, int n_obj,
                                      const DomainConfig& cfg) {
  if (n_obj < 1 || n_obj > cfg.n_objects)
    throw std::invalid_argument("sample_problem: object count out of range");

  DomainConfig sized = cfg;
  sized.n_objects = n_obj;

  WorldState w = make_world(cfg);
  w.targets = default_targets(cfg);

  const double W = cfg.workspace;
  const int budget = 10000;
  auto place = [&](double radius, double clearance_robot,
                   bool clear_targets) -> Vec2 {
    for (int i = 0; i < budget; ++i) {
      Vec2 p{rng.uniform(radius, W - radius), rng.uniform(radius, W - radius)};
      if (clearance_robot > 0.0 &&
          (p - w.robot_pos).norm() < clearance_robot)
        continue;
      bool ok = true;
      for (const Disk& o : w.objects)
        if ((p - o.pos).norm() < radius + o.radius) {
          ok = false;
          break;
        }
      if (ok && clear_targets)
        for (const Disk& t : w.targets)
          if ((p - t.pos).norm() <= radius) {
            ok = false;
            break;
          }
      if (ok) return p;
    }
    throw std::runtime_error("sample_problem: placement retry budget exceeded");
  };

  w.robot_pos = {rng.uniform(cfg.robot_radius, W - cfg.robot_radius),
                 rng.uniform(cfg.robot_radius, W - cfg.robot_radius)};
  w.robot_theta = 0.0;
  for (int i = 0; i < n_obj; ++i) {
    Disk d;
    d.radius = cfg.object_radius;
    d.pos = place(cfg.object_radius, cfg.robot_radius + cfg.object_radius, true);
    w.objects.push_back(d);
  }

  // Unique target per object.
  std::vector<int> targs;
  for (int i = 0; i < cfg.n_targets; ++i) targs.push_back(i);
  for (int i = 0; i < n_obj; ++i) {
    const int j = i + rng.uniform_int(cfg.n_targets - i);
    std::swap(targs[i], targs[j]);
  }

  PlanningProblem p;
  p.x0 = w;
  p.phi0 = abstract_state(w, sized);
  for (int i = 0; i < n_obj; ++i) p.goal.conjuncts.push_back(at(i, targs[i]));
  p.priority = unsatisfied_conjuncts(w, p.goal, cfg);
  return p;
}

// Policy observation. Field order of the flat vector (documented layout):
//   [0..3]   robot x, y, theta, gripper aperture
//   next     object positions (x, y) per object id
//   next     target positions (x, y) per target id
//   next     lidar ranges (lidar_rays entries)
//   last     goal one-hot, row-major over (object, target) pairs
struct Observation {
  std::vector<double> proprio;
  std::vector<double> entities;
  std::vector<double> lidar;
  std::vector<double> goal_enc;

  std::vector<double> flat() const {
    std::vector<double> v;
    v.reserve(proprio.size() + entities.size() + lidar.size() + goal_enc.size());
    v.insert(v.end(), proprio.begin(), proprio.end());
    v.insert(v.end(), entities.begin(), entities.end());
    v.insert(v.end(), lidar.begin(), lidar.end());
    v.insert(v.end(), goal_enc.begin(), goal_enc.end());
    return v;
  }
};

inline int observation_dim(const DomainConfig& cfg) {
  return 4 + 2 * cfg.n_objects + 2 * cfg.n_targets + cfg.lidar_rays +
         cfg.n_objects * cfg.n_targets;
}

inline Observation observe(const WorldState& x, const Goal& goal,
                           const DomainConfig& cfg) {
  Observation o;
  o.proprio = {x.robot_pos.x, x.robot_pos.y, x.robot_theta, x.aperture};
  o.entities.reserve(2 * (cfg.n_objects + cfg.n_targets));
  for (int i = 0; i < cfg.n_objects; ++i) {
    const Disk& d = x.objects.at(i);
    o.entities.push_back(d.pos.x);
    o.entities.push_back(d.pos.y);
  }
  for (int i = 0; i < cfg.n_targets; ++i) {
    const Disk& d = x.targets.at(i);
    o.entities.push_back(d.pos.x);
    o.entities.push_back(d.pos.y);
  }
  o.lidar = lidar(x, cfg).ranges;
  o.goal_enc.assign(cfg.n_objects * cfg.n_targets, 0.0);
  for (const Fluent& f : goal.conjuncts) {
    if (f.pred != Predicate::kAt)
      throw std::invalid_argument("goal conjuncts must be At fluents");
    o.goal_enc.at(f.a * cfg.n_targets + f.b) = 1.0;
  }
  return o;
}

}  // namespace tamp2d

#endif  // TAMP2D_PROBLEMS_HPP_
