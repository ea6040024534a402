#ifndef TAMP2D_OPTIMIZER_HPP_
#define TAMP2D_OPTIMIZER_HPP_

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tamp2d/validity.hpp"

namespace tamp2d {

// One inequality residual: satisfied iff value(q) <= 0. Gradients are with
// respect to the (x, y) of the single waypoint the residual touches.
struct Constraint {
  enum class Kind { kEndReach, kEndRetreat, kCollisionWall, kCollisionDisk };
  Kind kind = Kind::kEndReach;
  int t = 0;           // waypoint index
  Vec2 center;         // disk center / reach point
  Segment wall;        // for kCollisionWall
  double threshold = 0.0;

  double value(const Vec2& p) const {
    switch (kind) {
      case Kind::kEndReach:
        return (p - center).norm() - threshold;
      case Kind::kEndRetreat:
        return threshold - (p - center).norm();
      case Kind::kCollisionDisk:
        return threshold - (p - center).norm();
      case Kind::kCollisionWall:
        return threshold - dist_point_segment(p, wall);
    }
    return 0.0;
  }

  Vec2 gradient(const Vec2& p) const {
    Vec2 d;
    switch (kind) {
      case Kind::kEndReach:
        d = p - center;
        break;
      case Kind::kEndRetreat:
      case Kind::kCollisionDisk:
        d = center - p;  // residual decreases moving away from the center
        break;
      case Kind::kCollisionWall:
        d = closest_point_on_segment(wall, p) - p;
        break;
    }
    const double n = d.norm();
    if (n < 1e-12) return {0.0, 0.0};
    return d * (1.0 / n);
  }
};

// Schema-derived constraints for refining action a from world state x.
// at_end holds the endpoint condition, per_step the collision margins.
struct ConstraintSet {
  std::vector<Constraint> all;
  Vec2 goal_point;  // reach / placement reference used for cold starts
};

inline ConstraintSet build_constraints(const WorldState& x,
                                       const GroundAction& a,
                                       const DomainConfig& cfg) {
  ConstraintSet cs;
  const int T = cfg.horizon;
  const double end_tol_grasp = 0.5 * cfg.grasp_tol;
  const double end_tol_place = 0.5 * cfg.place_tol;

  switch (a.schema) {
    case SchemaType::kMoveToAndGrasp:
      cs.goal_point = x.objects.at(a.obj).pos;
      cs.all.push_back({Constraint::Kind::kEndReach, T - 1, cs.goal_point, {},
                        end_tol_grasp});
      break;
    case SchemaType::kTransfer:
      cs.goal_point = x.targets.at(a.targ).pos;
      cs.all.push_back({Constraint::Kind::kEndReach, T - 1, cs.goal_point, {},
                        end_tol_place});
      break;
    case SchemaType::kPlaceAndRetreat: {
      // The object is released at the start waypoint; the robot backs off.
      cs.goal_point = x.gripper();
      cs.all.push_back({Constraint::Kind::kEndRetreat, T - 1, cs.goal_point,
                        {}, cfg.retreat_dist});
      break;
    }
  }

  const double wall_clear = cfg.robot_radius + cfg.d_safe;
  for (int t = 1; t < T; ++t) {
    for (const Segment& s : x.walls)
      cs.all.push_back({Constraint::Kind::kCollisionWall, t, {}, s, wall_clear});
    for (std::size_t j = 0; j < x.objects.size(); ++j) {
      const int id = static_cast<int>(j);
      if (id == a.obj) continue;
      if (x.attached && *x.attached == id) continue;
      cs.all.push_back({Constraint::Kind::kCollisionDisk, t, x.objects[j].pos,
                        {}, cfg.robot_radius + x.objects[j].radius + cfg.d_safe});
    }
  }
  return cs;
}

struct RefineResult {
  Trajectory trajectory;
  bool success = false;
  std::vector<FailureFluent> violations;
  long iterations = 0;
  double wall_time_s = 0.0;
  double final_merit = 0.0;
  bool warm_started = false;
};

namespace detail {

inline FailureReason endpoint_failure_reason(SchemaType s) {
  return s == SchemaType::kMoveToAndGrasp ? FailureReason::kGraspInfeasible
                                          : FailureReason::kUnreachable;
}

// Gripper command profile per schema phase: close at grasp completion,
// stay closed through transfer, open for place-and-retreat.
inline void apply_grip_profile(Trajectory& tau, SchemaType schema) {
  for (auto& w : tau.waypoints) {
    switch (schema) {
      case SchemaType::kMoveToAndGrasp:
        w.grip = -1.0;
        break;
      case SchemaType::kTransfer:
        w.grip = 1.0;
        break;
      case SchemaType::kPlaceAndRetreat:
        w.grip = -1.0;
        break;
    }
  }
  if (schema == SchemaType::kMoveToAndGrasp) tau.waypoints.back().grip = 1.0;
}

}  // namespace detail

// Exterior-penalty sequential convexification of the refinement problem:
// minimize smoothing + dev_weight * deviation-from-warm-start subject to
// the schema's constraint set, Gauss-Newton steps on the linearized
// residuals with a trust-region clamp. Waypoint 0 is pinned to x_start.
inline RefineResult refine(const WorldState& x_start, const GroundAction& a,
                           const std::optional<Trajectory>& warm,
                           double dev_weight, const DomainConfig& cfg) {
  const auto t_begin = std::chrono::steady_clock::now();
  const int T = cfg.horizon;
  RefineResult res;
  res.warm_started = warm.has_value();

  if (warm && static_cast<int>(warm->size()) != T)
    throw std::invalid_argument("refine: warm start length != horizon");

  const std::uint64_t scope = fingerprint(abstract_state(x_start, cfg).fluents);

  // Fail fast when the precondition manifold is violated at the start.
  for (const Fluent& f : pre_conditions(a)) {
    if (!holds(f, x_start, cfg)) {
      res.violations.push_back(
          {a, detail::endpoint_failure_reason(a.schema), scope});
      res.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
              .count();
      return res;
    }
  }

  const ConstraintSet cs = build_constraints(x_start, a, cfg);

  // Cold start: straight line toward the schema's reference point. For the
  // retreat case, project a point retreat_dist away from the release
  // position, biased toward the workspace center to stay off the walls.
  Vec2 end_point = cs.goal_point;
  if (a.schema == SchemaType::kPlaceAndRetreat) {
    const Vec2 c{cfg.workspace / 2.0, cfg.workspace / 2.0};
    Vec2 dir = c - cs.goal_point;
    const double n = dir.norm();
    dir = n > 1e-9 ? dir * (1.0 / n) : Vec2{1.0, 0.0};
    end_point = cs.goal_point + dir * (cfg.retreat_dist * 1.2);
    const double lo = cfg.robot_radius + cfg.d_safe;
    end_point.x = std::clamp(end_point.x, lo, cfg.workspace - lo);
    end_point.y = std::clamp(end_point.y, lo, cfg.workspace - lo);
  }

  const Vec2 p0 = x_start.robot_pos;
  const double th0 = x_start.robot_theta;
  Eigen::VectorXd q(3 * (T - 1));  // waypoints 1..T-1 as (x, y, theta)
  if (warm) {
    for (int t = 1; t < T; ++t) {
      q[3 * (t - 1) + 0] = warm->waypoints[t].pos.x;
      q[3 * (t - 1) + 1] = warm->waypoints[t].pos.y;
      q[3 * (t - 1) + 2] = warm->waypoints[t].theta;
    }
  } else {
    for (int t = 1; t < T; ++t) {
      const double s = static_cast<double>(t) / (T - 1);
      q[3 * (t - 1) + 0] = p0.x + s * (end_point.x - p0.x);
      q[3 * (t - 1) + 1] = p0.y + s * (end_point.y - p0.y);
      q[3 * (t - 1) + 2] = th0;
    }
  }

  auto waypoint = [&](const Eigen::VectorXd& v, int t) -> Vec2 {
    if (t == 0) return p0;
    return {v[3 * (t - 1)], v[3 * (t - 1) + 1]};
  };
  auto theta_at = [&](const Eigen::VectorXd& v, int t) -> double {
    return t == 0 ? th0 : v[3 * (t - 1) + 2];
  };

  // Velocity-profile reference for the deviation term.
  std::vector<Vec2> ref_dp(T - 1, Vec2{0, 0});
  std::vector<double> ref_dth(T - 1, 0.0);
  const double w_dev = warm ? dev_weight : 0.0;
  if (warm && w_dev > 0.0) {
    for (int t = 0; t < T - 1; ++t) {
      ref_dp[t] = warm->waypoints[t + 1].pos - warm->waypoints[t].pos;
      ref_dth[t] = warm->waypoints[t + 1].theta - warm->waypoints[t].theta;
    }
  }

  auto objective = [&](const Eigen::VectorXd& v) -> double {
    double c = 0.0;
    for (int t = 0; t < T - 1; ++t) {
      const Vec2 dp = waypoint(v, t + 1) - waypoint(v, t);
      const double dth = theta_at(v, t + 1) - theta_at(v, t);
      c += dp.norm2() + dth * dth;
      if (w_dev > 0.0) {
        const Vec2 e = dp - ref_dp[t];
        const double eth = dth - ref_dth[t];
        c += w_dev * (e.norm2() + eth * eth);
      }
    }
    return c;
  };
  auto max_violation = [&](const Eigen::VectorXd& v) -> double {
    double m = 0.0;
    for (const Constraint& c : cs.all)
      m = std::max(m, c.value(waypoint(v, c.t)));
    return m;
  };
  auto merit = [&](const Eigen::VectorXd& v, double mu) -> double {
    double m = objective(v);
    for (const Constraint& c : cs.all) {
      const double h = std::max(0.0, c.value(waypoint(v, c.t)));
      m += mu * h * h;
    }
    return m;
  };

  const int n = 3 * (T - 1);
  const double step_clamp = 0.5;
  double mu = 10.0;
  double prev_merit = merit(q, mu);
  for (int outer = 0; outer < 5; ++outer) {
    prev_merit = merit(q, mu);
    double damping = 1e-8;
    for (int inner = 0; inner < 50; ++inner) {
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
      Eigen::VectorXd g = Eigen::VectorXd::Zero(n);

      // Quadratic objective rows (exact, no linearization error).
      auto add_diff_row = [&](int t, int dim, double resid, double weight) {
        // residual = q_{t+1,dim} - q_{t,dim} - ref; columns for t, t+1.
        const int c1 = t >= 1 ? 3 * (t - 1) + dim : -1;
        const int c2 = 3 * t + dim;
        const double w2 = weight;
        if (c1 >= 0) {
          H(c1, c1) += w2;
          H(c1, c2) -= w2;
          H(c2, c1) -= w2;
          g[c1] -= w2 * resid;
        }
        H(c2, c2) += w2;
        g[c2] += w2 * resid;
      };
      for (int t = 0; t < T - 1; ++t) {
        const Vec2 dp = waypoint(q, t + 1) - waypoint(q, t);
        const double dth = theta_at(q, t + 1) - theta_at(q, t);
        add_diff_row(t, 0, dp.x, 1.0);
        add_diff_row(t, 1, dp.y, 1.0);
        add_diff_row(t, 2, dth, 1.0);
        if (w_dev > 0.0) {
          add_diff_row(t, 0, dp.x - ref_dp[t].x, w_dev);
          add_diff_row(t, 1, dp.y - ref_dp[t].y, w_dev);
          add_diff_row(t, 2, dth - ref_dth[t], w_dev);
        }
      }
      // Linearized penalty rows for active hinges.
      for (const Constraint& c : cs.all) {
        if (c.t == 0) continue;
        const Vec2 p = waypoint(q, c.t);
        const double h = c.value(p);
        if (h <= 0.0) continue;
        const Vec2 gr = c.gradient(p);
        const int cx = 3 * (c.t - 1);
        const double w2 = mu;
        H(cx, cx) += w2 * gr.x * gr.x;
        H(cx, cx + 1) += w2 * gr.x * gr.y;
        H(cx + 1, cx) += w2 * gr.y * gr.x;
        H(cx + 1, cx + 1) += w2 * gr.y * gr.y;
        g[cx] += w2 * gr.x * h;
        g[cx + 1] += w2 * gr.y * h;
      }

      bool accepted = false;
      for (int tries = 0; tries < 8 && !accepted; ++tries) {
        Eigen::MatrixXd Hd = H;
        Hd.diagonal().array() += damping;
        Eigen::VectorXd delta = Hd.ldlt().solve(-g);
        if (!delta.allFinite()) {
          damping *= 10.0;
          continue;
        }
        const double mx = delta.cwiseAbs().maxCoeff();
        if (mx > step_clamp) delta *= step_clamp / mx;
        Eigen::VectorXd cand = q + delta;
        const double m_cand = merit(cand, mu);
        if (m_cand <= prev_merit + 1e-15) {
          q = std::move(cand);
          prev_merit = m_cand;
          accepted = true;
          damping = std::max(damping * 0.25, 1e-10);
          ++res.iterations;
          if (delta.norm() < 1e-10) inner = 50;  // converged at this mu
        } else {
          damping *= 10.0;
        }
      }
      if (!accepted) break;
    }
    if (max_violation(q) <= 1e-6) break;  // already feasible, stop early
    mu *= 10.0;
  }

  if (!q.allFinite()) {
    res.violations.push_back({a, FailureReason::kUnreachable, scope});
    res.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
            .count();
    return res;
  }

  // Assemble the trajectory; dt chosen so the finite-difference controls
  // respect the velocity bounds when executed.
  Trajectory tau;
  tau.waypoints.resize(T);
  tau.waypoints[0] = {p0, th0, -1.0};
  for (int t = 1; t < T; ++t)
    tau.waypoints[t] = {waypoint(q, t), theta_at(q, t), -1.0};
  double max_dp = 0.0, max_dth = 0.0;
  for (int t = 0; t < T - 1; ++t) {
    max_dp = std::max(max_dp,
                      (tau.waypoints[t + 1].pos - tau.waypoints[t].pos).norm());
    max_dth = std::max(
        max_dth, std::abs(tau.waypoints[t + 1].theta - tau.waypoints[t].theta));
  }
  tau.dt = std::max({1.0, max_dp / cfg.v_max * (1.0 + 1e-9),
                     max_dth / cfg.omega_max * (1.0 + 1e-9)});
  detail::apply_grip_profile(tau, a.schema);
  res.trajectory = tau;
  res.final_merit = prev_merit;

  // Violation taxonomy on the residual families left unsatisfied.
  const double tol = 1e-4;
  bool any_collision = false, any_endpoint = false;
  for (const Constraint& c : cs.all) {
    if (c.value(waypoint(q, c.t)) <= tol) continue;
    if (c.kind == Constraint::Kind::kCollisionWall ||
        c.kind == Constraint::Kind::kCollisionDisk)
      any_collision = true;
    else
      any_endpoint = true;
  }
  if (any_collision)
    res.violations.push_back({a, FailureReason::kCollision, scope});
  if (any_endpoint)
    res.violations.push_back(
        {a, detail::endpoint_failure_reason(a.schema), scope});
  res.success = res.violations.empty();
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
          .count();
  return res;
}

}  // namespace tamp2d

#endif  // TAMP2D_OPTIMIZER_HPP_
