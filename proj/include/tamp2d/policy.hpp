#ifndef TAMP2D_POLICY_HPP_
#define TAMP2D_POLICY_HPP_

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "tamp2d/nn.hpp"
#include "tamp2d/optimizer.hpp"
#include "tamp2d/validity.hpp"

namespace tamp2d {

// Task-level policy: shared trunk, three factored softmax heads
// (action type, object slot, target slot).
struct TaskPolicy {
  Network net;
  int n_obj = 0;
  int n_targ = 0;
};

// Motion-level policy: hard-coded attention transform plus one control
// network shared across schemas, gated by the schema one-hot input.
struct MotionPolicy {
  Network net;
};

// Baseline: observation + goal straight to controls.
struct FlatPolicy {
  Network net;
};

inline TaskPolicy make_task_policy(const DomainConfig& cfg, Rng& rng,
                                   double l2) {
  TaskPolicy p;
  p.n_obj = cfg.n_objects;
  p.n_targ = cfg.n_targets;
  const int out = kNumSchemas + cfg.n_objects + cfg.n_targets;
  p.net = init_xavier({observation_dim(cfg), 96, 96, out},
                      {kNumSchemas, cfg.n_objects, cfg.n_targets}, rng, l2,
                      Activation::kSoftmaxHeads);
  return p;
}

constexpr int kAttentionDim = 4;

inline int motion_input_dim(const DomainConfig& cfg) {
  return kAttentionDim + cfg.lidar_rays + kNumSchemas;
}

inline MotionPolicy make_motion_policy(const DomainConfig& cfg, Rng& rng,
                                       double l2) {
  MotionPolicy p;
  p.net = init_xavier({motion_input_dim(cfg), 64, 64, 4}, {}, rng, l2,
                      Activation::kIdentity);
  return p;
}

inline FlatPolicy make_flat_policy(const DomainConfig& cfg, Rng& rng,
                                   double l2) {
  FlatPolicy p;
  p.net = init_xavier({observation_dim(cfg), 64, 64, 4}, {}, rng, l2,
                      Activation::kIdentity);
  return p;
}

// Geometric frame transform: displacement robot -> bound object for the
// grasp phase, grasped object -> bound target otherwise, plus range and
// bearing. Invariant under rigid translation of the world.
inline std::vector<double> attention(const Observation& obs,
                                     const GroundAction& a,
                                     const DomainConfig& cfg) {
  const Vec2 robot{obs.proprio.at(0), obs.proprio.at(1)};
  const Vec2 obj{obs.entities.at(2 * a.obj), obs.entities.at(2 * a.obj + 1)};
  Vec2 d;
  if (a.schema == SchemaType::kMoveToAndGrasp) {
    d = obj - robot;
  } else {
    const int base = 2 * cfg.n_objects + 2 * a.targ;
    const Vec2 targ{obs.entities.at(base), obs.entities.at(base + 1)};
    d = targ - obj;
  }
  return {d.x, d.y, d.norm(), std::atan2(d.y, d.x)};
}

// Raw logits of the three task heads for one observation.
inline Eigen::VectorXd task_logits(const TaskPolicy& p,
                                   const std::vector<double>& obs_flat) {
  Eigen::MatrixXd in(1, obs_flat.size());
  for (std::size_t i = 0; i < obs_flat.size(); ++i) in(0, i) = obs_flat[i];
  return forward_logits(p.net, in).row(0);
}

namespace detail {

inline int pick_head(const Eigen::VectorXd& logits, int off, int len,
                     double temperature, Rng* rng) {
  if (temperature <= 0.0 || rng == nullptr) {
    int best = 0;
    for (int k = 1; k < len; ++k)
      if (logits[off + k] > logits[off + best]) best = k;  // lowest-index ties
    return best;
  }
  Eigen::VectorXd z = logits.segment(off, len) / temperature;
  const double m = z.maxCoeff();
  Eigen::VectorXd p = (z.array() - m).exp();
  p /= p.sum();
  double u = rng->uniform();
  for (int k = 0; k < len; ++k) {
    u -= p[k];
    if (u <= 0.0) return k;
  }
  return len - 1;
}

}  // namespace detail

// Decode the factored heads into a ground action. temperature = 0 is the
// deterministic argmax path; temperature > 0 samples each head's softmax.
inline GroundAction act_hi(const TaskPolicy& p,
                           const std::vector<double>& obs_flat,
                           double temperature = 0.0, Rng* rng = nullptr) {
  const Eigen::VectorXd logits = task_logits(p, obs_flat);
  const int type =
      detail::pick_head(logits, 0, kNumSchemas, temperature, rng);
  const int obj =
      detail::pick_head(logits, kNumSchemas, p.n_obj, temperature, rng);
  const int targ = detail::pick_head(logits, kNumSchemas + p.n_obj, p.n_targ,
                                     temperature, rng);
  GroundAction a;
  a.schema = static_cast<SchemaType>(type);
  a.obj = obj;
  a.targ = schema_has_target(a.schema) ? targ : -1;
  return a;
}

inline std::vector<double> motion_input(const Observation& obs,
                                        const GroundAction& a,
                                        const DomainConfig& cfg) {
  std::vector<double> in = attention(obs, a, cfg);
  in.insert(in.end(), obs.lidar.begin(), obs.lidar.end());
  for (int s = 0; s < kNumSchemas; ++s)
    in.push_back(s == static_cast<int>(a.schema) ? 1.0 : 0.0);
  return in;
}

inline Control clamp_policy_output(const Eigen::VectorXd& y,
                                   const DomainConfig& cfg) {
  Control u;
  u.vx = std::clamp(y[0], -cfg.v_max, cfg.v_max);
  u.vy = std::clamp(y[1], -cfg.v_max, cfg.v_max);
  u.omega = std::clamp(y[2], -cfg.omega_max, cfg.omega_max);
  u.grip = std::clamp(y[3], -1.0, 1.0);
  return u;
}

inline Control act_lo(const MotionPolicy& p, const Observation& obs,
                      const GroundAction& a, const DomainConfig& cfg) {
  const std::vector<double> in = motion_input(obs, a, cfg);
  Eigen::MatrixXd m(1, in.size());
  for (std::size_t i = 0; i < in.size(); ++i) m(0, i) = in[i];
  return clamp_policy_output(forward(p.net, m).row(0), cfg);
}

inline Control act_flat(const FlatPolicy& p, const Observation& obs,
                        const DomainConfig& cfg) {
  const std::vector<double> in = obs.flat();
  Eigen::MatrixXd m(1, in.size());
  for (std::size_t i = 0; i < in.size(); ++i) m(0, i) = in[i];
  return clamp_policy_output(forward(p.net, m).row(0), cfg);
}

// Immutable versioned parameter set published by the trainer.
struct PolicySnapshot {
  TaskPolicy hi;
  MotionPolicy lo;
  std::optional<FlatPolicy> flat;
  std::uint64_t version = 0;
  long lo_steps = 0;  // training steps behind the motion policy
};

using SnapshotPtr = std::shared_ptr<const PolicySnapshot>;

enum class MonitorEvent : std::uint8_t {
  kStarted,
  kRejectedPre,     // proposal rejected, pre unmet
  kPrematureSwitch, // switch proposed before post held
  kDelayedSwitch,   // same action proposed after post held
  kNoValidAction,
};

struct RolloutStep {
  WorldState state;       // state the control was computed in
  Control control;
  GroundAction action;
};

struct RolloutResult {
  std::vector<RolloutStep> steps;
  std::vector<MonitorEvent> events;
  WorldState final_state;
  bool reached = false;
  int negatives = 0;
  int pushes = 0;
};

// Callbacks wired by the exploration node; either may be empty.
struct MonitorHooks {
  std::function<void(const WorldState&, const GroundAction&)> on_negative;
  // x to plan from, rollout so far, goal
  std::function<void(const WorldState&, const std::vector<RolloutStep>&,
                     const Goal&)> on_push;
};

inline bool pre_ok(const GroundAction& a, const WorldState& x,
                   const DomainConfig& cfg) {
  for (const Fluent& f : pre_conditions(a))
    if (!holds(f, x, cfg)) return false;
  return true;
}

inline bool post_ok(const GroundAction& a, const WorldState& x,
                    const DomainConfig& cfg) {
  for (const Fluent& f : post_conditions(a))
    if (!holds(f, x, cfg)) return false;
  return true;
}

// Evaluation-mode rollout: the task head is re-queried greedily every step
// and its output used directly.
inline RolloutResult rollout_eval(const PolicySnapshot& snap,
                                  const WorldState& x0, const Goal& goal,
                                  int max_steps, const DomainConfig& cfg) {
  RolloutResult r;
  WorldState x = x0;
  for (int t = 0; t < max_steps && !goal_satisfied(x, goal, cfg); ++t) {
    const Observation obs = observe(x, goal, cfg);
    const GroundAction a = act_hi(snap.hi, obs.flat());
    const Control u = act_lo(snap.lo, obs, a, cfg);
    r.steps.push_back({x, u, a});
    x = step(x, u, cfg, cfg.control_dt);
  }
  r.final_state = x;
  r.reached = goal_satisfied(x, goal, cfg);
  return r;
}

inline RolloutResult rollout_flat(const FlatPolicy& flat, const WorldState& x0,
                                  const Goal& goal, int max_steps,
                                  const DomainConfig& cfg) {
  RolloutResult r;
  WorldState x = x0;
  for (int t = 0; t < max_steps && !goal_satisfied(x, goal, cfg); ++t) {
    const Observation obs = observe(x, goal, cfg);
    const Control u = act_flat(flat, obs, cfg);
    r.steps.push_back({x, u, {}});
    x = step(x, u, cfg, cfg.control_dt);
  }
  r.final_state = x;
  r.reached = goal_satisfied(x, goal, cfg);
  return r;
}

// Monitored rollout used at training time: action transitions are gated by
// pre/post fluent checks; invalid proposals produce negative examples and
// replanning pushes, with temperature resampling on pre-violations.
inline RolloutResult rollout_monitored(const PolicySnapshot& snap,
                                       const WorldState& x0, const Goal& goal,
                                       int max_steps, double temp0,
                                       double temp_growth, int max_iter,
                                       Rng& rng, const MonitorHooks& hooks,
                                       const DomainConfig& cfg) {
  RolloutResult r;
  WorldState x = x0;
  WorldState x_prev = x0;
  double temp = temp0;

  auto negative = [&](const WorldState& s, const GroundAction& a) {
    ++r.negatives;
    if (hooks.on_negative) hooks.on_negative(s, a);
  };
  auto push = [&](const WorldState& s) {
    ++r.pushes;
    if (hooks.on_push) hooks.on_push(s, r.steps, goal);
  };

  Observation obs = observe(x, goal, cfg);
  GroundAction a = act_hi(snap.hi, obs.flat(), temp, &rng);
  // Initiating the first action is a transition like any other: gate it on
  // the precondition, otherwise a consistently invalid first proposal rolls
  // out unsupervised and never produces negatives or a replanning push. An
  // already-completed proposal (post holds) is left to the delayed-switch
  // branch below instead.
  if (!pre_ok(a, x, cfg) && !post_ok(a, x, cfg)) {
    push(x);
    int iter = 0;
    while (!pre_ok(a, x, cfg) && iter < max_iter) {
      r.events.push_back(MonitorEvent::kRejectedPre);
      negative(x, a);
      temp *= temp_growth;
      a = act_hi(snap.hi, obs.flat(), temp, &rng);
      ++iter;
    }
    if (!pre_ok(a, x, cfg)) {
      // Keep the rollout alive with a uniformly random applicable action so
      // exploration still visits states while the policy is immature.
      std::vector<GroundAction> valid;
      for (const GroundAction& g : ground_all(cfg))
        if (pre_ok(g, x, cfg)) valid.push_back(g);
      if (valid.empty()) {
        r.events.push_back(MonitorEvent::kNoValidAction);
        r.final_state = x;
        r.reached = goal_satisfied(x, goal, cfg);
        return r;
      }
      a = valid[static_cast<std::size_t>(rng.uniform() *
                                         static_cast<double>(valid.size())) %
                valid.size()];
    }
  }
  r.events.push_back(MonitorEvent::kStarted);

  for (int t = 0; t < max_steps && !goal_satisfied(x, goal, cfg); ++t) {
    obs = observe(x, goal, cfg);
    GroundAction proposed = act_hi(snap.hi, obs.flat(), temp, &rng);

    if (proposed != a && post_ok(a, x, cfg)) {
      x_prev = x;
      if (!pre_ok(proposed, x, cfg)) push(x);
      int iter = 0;
      while (!pre_ok(proposed, x, cfg) && iter < max_iter) {
        r.events.push_back(MonitorEvent::kRejectedPre);
        negative(x, proposed);
        temp *= temp_growth;
        proposed = act_hi(snap.hi, obs.flat(), temp, &rng);
        ++iter;
      }
      if (!pre_ok(proposed, x, cfg)) {
        r.events.push_back(MonitorEvent::kNoValidAction);
        break;
      }
      a = proposed;
      r.events.push_back(MonitorEvent::kStarted);
    } else if (proposed != a && !post_ok(a, x, cfg)) {
      r.events.push_back(MonitorEvent::kPrematureSwitch);
      push(x_prev);
      negative(x, proposed);
    } else if (proposed == a && post_ok(a, x, cfg)) {
      r.events.push_back(MonitorEvent::kDelayedSwitch);
      negative(x, a);
      push(x);
    }

    const Control u = act_lo(snap.lo, obs, a, cfg);
    r.steps.push_back({x, u, a});
    x = step(x, u, cfg, cfg.control_dt);
  }
  r.final_state = x;
  r.reached = goal_satisfied(x, goal, cfg);
  return r;
}

// Short motion-policy rollout providing the optimizer's warm start for one
// action: exactly `horizon` waypoints at the control step duration.
inline Trajectory rollout_lo(const PolicySnapshot& snap, const WorldState& x0,
                             const GroundAction& a, const Goal& goal,
                             const DomainConfig& cfg) {
  Trajectory tau;
  tau.dt = cfg.control_dt;
  WorldState x = x0;
  tau.waypoints.push_back({x.robot_pos, x.robot_theta, -1.0});
  for (int t = 1; t < cfg.horizon; ++t) {
    const Observation obs = observe(x, goal, cfg);
    Control u = act_lo(snap.lo, obs, a, cfg);
    u.grip = 0.0;  // the optimizer owns the grip phase
    x = step(x, u, cfg, cfg.control_dt);
    tau.waypoints.push_back({x.robot_pos, x.robot_theta, -1.0});
  }
  detail::apply_grip_profile(tau, a.schema);
  return tau;
}

}  // namespace tamp2d

#endif  // TAMP2D_POLICY_HPP_
