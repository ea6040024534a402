#ifndef TAMP2D_VALIDITY_HPP_
#define TAMP2D_VALIDITY_HPP_

#include <vector>

#include "tamp2d/trajectory.hpp"

namespace tamp2d {

inline std::vector<Fluent> post_conditions(const GroundAction& a) {
  switch (a.schema) {
    case SchemaType::kMoveToAndGrasp:
      return {holding(a.obj)};
    case SchemaType::kTransfer:
      return {holding(a.obj), gripper_near_target(a.targ)};
    case SchemaType::kPlaceAndRetreat:
      return {at(a.obj, a.targ), hand_empty()};
  }
  return {};
}

inline std::vector<Fluent> pre_conditions(const GroundAction& a) {
  switch (a.schema) {
    case SchemaType::kMoveToAndGrasp:
      return {hand_empty()};
    case SchemaType::kTransfer:
      return {holding(a.obj)};
    case SchemaType::kPlaceAndRetreat:
      return {holding(a.obj), gripper_near_target(a.targ)};
  }
  return {};
}

// Mid-condition check for one simulated state of action a: no wall
// penetration and no overlap with loose objects other than the one the
// action manipulates, within tol.
inline bool mid_ok(const WorldState& x, const GroundAction& a, double tol) {
  if (wall_penetration(x) > tol) return false;
  for (std::size_t j = 0; j < x.objects.size(); ++j) {
    const int id = static_cast<int>(j);
    if (id == a.obj) continue;
    if (x.attached && *x.attached == id) continue;
    const double gap =
        (x.objects[j].pos - x.robot_pos).norm() - x.robot_radius - x.objects[j].radius;
    if (gap < -tol) return false;
  }
  return true;
}

// The four-part validity check: each segment's start satisfies a.pre,
// every simulated interior state satisfies a.mid within tol, each segment
// end satisfies a.post, and the final state satisfies the goal. Segments
// are executed through the simulator from x0 in order.
inline bool plan_valid(const WorldState& x0,
                       const std::vector<GroundAction>& plan,
                       const std::vector<Trajectory>& segs, const Goal& goal,
                       const DomainConfig& cfg, double tol = 1e-6) {
  if (plan.size() != segs.size())
    throw std::invalid_argument("plan_valid: plan/segment length mismatch");
  WorldState x = x0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const GroundAction& a = plan[i];
    for (const Fluent& f : pre_conditions(a))
      if (!holds(f, x, cfg)) return false;
    for (const Control& u : controls_from(segs[i])) {
      x = step(x, u, cfg, segs[i].dt);
      if (!mid_ok(x, a, tol)) return false;
    }
    for (const Fluent& f : post_conditions(a))
      if (!holds(f, x, cfg)) return false;
  }
  return goal_satisfied(x, goal, cfg);
}

}  // namespace tamp2d

#endif  // TAMP2D_VALIDITY_HPP_
