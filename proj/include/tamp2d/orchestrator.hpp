#ifndef TAMP2D_ORCHESTRATOR_HPP_
#define TAMP2D_ORCHESTRATOR_HPP_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tamp2d/dataset.hpp"
#include "tamp2d/metrics.hpp"
#include "tamp2d/optimizer.hpp"
#include "tamp2d/queues.hpp"
#include "tamp2d/task_planner.hpp"
#include "tamp2d/validity.hpp"

namespace tamp2d {

inline bool warm_starts_enabled(FeedbackMode m) {
  return m == FeedbackMode::kMotionOnly || m == FeedbackMode::kTamp;
}
inline bool exploration_enabled(FeedbackMode m) {
  return m == FeedbackMode::kTaskOnly || m == FeedbackMode::kTamp;
}

// Single-writer, many-reader slot for the latest immutable policy snapshot.
class SnapshotStore {
 public:
  void publish(PolicySnapshot snap) {
    auto p = std::make_shared<const PolicySnapshot>(std::move(snap));
    std::lock_guard lock(mu_);
    current_ = std::move(p);
  }
  SnapshotPtr get() const {
    std::lock_guard lock(mu_);
    return current_;
  }

 private:
  mutable std::mutex mu_;
  SnapshotPtr current_;
};

struct Counters {
  std::atomic<long> problems_sampled{0};
  std::atomic<long> problems_popped{0};
  std::atomic<long> plans_found{0};
  std::atomic<long> plans_failed{0};
  std::atomic<long> plans_refined{0};  // full plans, goal verified
  std::atomic<long> refine_cold{0};
  std::atomic<long> refine_warm{0};
  std::atomic<long> refine_cold_success{0};
  std::atomic<long> refine_warm_success{0};
  std::atomic<long> refine_cold_iters{0};
  std::atomic<long> refine_warm_iters{0};
  std::atomic<long> expansions_pushed{0};
  std::atomic<long> exploration_rollouts{0};
  std::atomic<long> exploration_pushes{0};
  std::atomic<long> exploration_negatives{0};
  std::atomic<long> exploration_reached{0};
  std::atomic<long> trainer_steps{0};
  std::atomic<long> lo_steps{0};
  // Wall-clock accumulators; reported only in concurrent mode so serial
  // runs stay bit-deterministic.
  std::atomic<long> refine_cold_us{0};
  std::atomic<long> refine_warm_us{0};
};

struct SystemState {
  RunConfig cfg;
  std::vector<GroundAction> actions;

  TaskQueue q_task;
  MotionQueue q_motion;

  Dataset<TaskRecord> d_task;
  Dataset<MotionRecord> d_motion;
  Dataset<NegativeRecord> d_neg;

  SnapshotStore snapshots;
  Counters counters;

  CsvLog log_train;
  CsvLog log_eval;
  CsvLog log_refine;

  std::atomic<bool> stop{false};
  std::mutex error_mu;
  std::vector<std::string> errors;

  explicit SystemState(const RunConfig& c)
      : cfg(c),
        actions(ground_all(c.domain)),
        q_task(static_cast<std::size_t>(c.queue_capacity)),
        q_motion(static_cast<std::size_t>(c.queue_capacity)),
        d_task(static_cast<std::size_t>(c.dataset_capacity)),
        d_motion(static_cast<std::size_t>(c.dataset_capacity)),
        d_neg(static_cast<std::size_t>(c.dataset_capacity)) {}

  void record_error(const std::string& what) {
    {
      std::lock_guard lock(error_mu);
      errors.push_back(what);
    }
    stop.store(true);
  }
};

// ---------------------------------------------------------------------------
// Task node: pop a queued problem (or sample a fresh one with probability
// p_fresh), run the symbolic planner, and hand any plan to the motion queue.

inline void task_node_iteration(SystemState& sys, Rng& rng) {
  const RunConfig& cfg = sys.cfg;
  PlanningProblem problem;
  const bool fresh = sys.q_task.empty() || rng.uniform() < cfg.p_fresh;
  if (fresh) {
    problem = sample_problem(rng, cfg.goal_objects, cfg.domain);
    ++sys.counters.problems_sampled;
  } else {
    auto popped = sys.q_task.try_pop();
    if (!popped) return;
    problem = std::move(*popped);
    ++sys.counters.problems_popped;
  }

  PlanResult res = plan(problem.phi0, problem.goal, sys.actions, cfg.domain);
  if (!res.success) {
    ++sys.counters.plans_failed;
    return;
  }
  ++sys.counters.plans_found;
  sys.q_motion.push({std::move(problem), std::move(res.plan)});
}

// ---------------------------------------------------------------------------
// Motion node: refine a symbolic plan action by action. Failed refinements
// push an expanded problem (failure fluents attached) back to the task
// queue; successful segments feed D_motion, and a fully refined plan that
// reaches the goal feeds D_task.

inline void motion_node_process(SystemState& sys, MotionWorkUnit unit,
                                Rng& rng) {
  (void)rng;
  const RunConfig& cfg = sys.cfg;
  const PlanningProblem& problem = unit.problem;
  const SourceTag tag =
      problem.from_exploration ? SourceTag::kExploration : SourceTag::kBase;
  const SnapshotPtr snap = sys.snapshots.get();
  const bool warm_ok = warm_starts_enabled(cfg.feedback) && snap &&
                       snap->lo_steps > 0 &&
                       sys.counters.plans_refined.load() >= cfg.warmup_plans;

  WorldState x = problem.x0;
  std::vector<Trajectory> segments;
  std::vector<std::vector<MotionRecord>> pending_motion;
  bool complete = true;

  for (const GroundAction& a : unit.plan.actions) {
    std::optional<Trajectory> warm;
    if (warm_ok) warm = rollout_lo(*snap, x, a, problem.goal, cfg.domain);

    auto t0 = std::chrono::steady_clock::now();
    RefineResult res = refine(x, a, warm, cfg.dev_weight, cfg.domain);
    long us = std::chrono::duration_cast<std::chrono::microseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    if (!res.success && res.warm_started) {
      // A bad warm start must not manufacture failure fluents; retry cold
      // before concluding the action is infeasible.
      ++sys.counters.refine_warm;
      sys.counters.refine_warm_iters += res.iterations;
      sys.counters.refine_warm_us += us;
      t0 = std::chrono::steady_clock::now();
      res = refine(x, a, std::nullopt, cfg.dev_weight, cfg.domain);
      us = std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::steady_clock::now() - t0)
               .count();
    }

    if (res.warm_started) {
      ++sys.counters.refine_warm;
      sys.counters.refine_warm_iters += res.iterations;
      sys.counters.refine_warm_us += us;
      if (res.success) ++sys.counters.refine_warm_success;
    } else {
      ++sys.counters.refine_cold;
      sys.counters.refine_cold_iters += res.iterations;
      sys.counters.refine_cold_us += us;
      if (res.success) ++sys.counters.refine_cold_success;
    }
    if (sys.log_refine.is_open() && !cfg.serial)
      sys.log_refine.row({CsvLog::num(res.warm_started ? 1 : 0),
                          CsvLog::num(res.success ? 1 : 0),
                          CsvLog::num(static_cast<double>(res.iterations)),
                          CsvLog::num(res.final_merit),
                          CsvLog::num(us / 1e6)});

    if (!res.success) {
      // Expand: replan from the current intermediate state with the
      // discovered failure fluents blocking the abstraction that failed.
      PlanningProblem expanded;
      expanded.x0 = x;
      expanded.phi0 = abstract_state(x, cfg.domain);
      expanded.phi0.failures = problem.phi0.failures;
      for (const FailureFluent& f : res.violations)
        expanded.phi0.failures.push_back(f);
      expanded.prefix = problem.prefix;
      expanded.prefix.insert(expanded.prefix.end(), segments.begin(),
                             segments.end());
      expanded.goal = problem.goal;
      expanded.priority = unsatisfied_conjuncts(x, problem.goal, cfg.domain);
      expanded.from_exploration = problem.from_exploration;
      sys.q_task.push(std::move(expanded));
      ++sys.counters.expansions_pushed;
      complete = false;
      break;
    }

    Trajectory retimed = retime(res.trajectory, cfg.domain);
    auto seg = std::make_shared<RefinedSegment>();
    seg->x_start = x;
    seg->action = a;
    seg->raw = res.trajectory;
    seg->retimed = retimed;

    // Execute the re-timed segment through the simulator, harvesting one
    // control-supervision record per step.
    std::vector<MotionRecord> recs;
    const std::vector<Control> controls = controls_from(retimed);
    WorldState xs = x;
    for (const Control& u : controls) {
      const Observation obs = observe(xs, problem.goal, cfg.domain);
      MotionRecord rec;
      rec.lo_input = motion_input(obs, a, cfg.domain);
      rec.flat_obs = obs.flat();
      rec.control = {u.vx, u.vy, u.omega, u.grip};
      rec.segment = seg;
      recs.push_back(std::move(rec));
      xs = step(xs, u, cfg.domain, retimed.dt);
    }

    if (!post_ok(a, xs, cfg.domain)) {
      // Execution drifted off the optimized path; treat like a refinement
      // failure so the planner can route around it.
      PlanningProblem expanded;
      expanded.x0 = x;
      expanded.phi0 = abstract_state(x, cfg.domain);
      expanded.phi0.failures = problem.phi0.failures;
      expanded.phi0.failures.push_back(
          {a, detail::endpoint_failure_reason(a.schema),
           fingerprint(abstract_state(x, cfg.domain).fluents)});
      expanded.prefix = problem.prefix;
      expanded.prefix.insert(expanded.prefix.end(), segments.begin(),
                             segments.end());
      expanded.goal = problem.goal;
      expanded.priority = unsatisfied_conjuncts(x, problem.goal, cfg.domain);
      expanded.from_exploration = problem.from_exploration;
      sys.q_task.push(std::move(expanded));
      ++sys.counters.expansions_pushed;
      complete = false;
      break;
    }

    pending_motion.push_back(std::move(recs));
    segments.push_back(std::move(retimed));
    x = xs;
  }

  for (std::size_t i = 0; i < pending_motion.size(); ++i)
    for (MotionRecord& r : pending_motion[i]) sys.d_motion.append(std::move(r), tag);

  if (!complete || !goal_satisfied(x, problem.goal, cfg.domain)) return;

  auto episode = std::make_shared<PlanEpisode>();
  episode->x0 = problem.x0;
  episode->actions = unit.plan.actions;
  episode->segments = segments;
  episode->goal = problem.goal;

  // Per-timestep supervision: pi_hi is re-queried at every control step at
  // execution time, so it must be supervised at every visited state, not
  // just segment boundaries.
  WorldState xs = problem.x0;
  for (std::size_t i = 0; i < unit.plan.actions.size(); ++i) {
    const GroundAction& a = unit.plan.actions[i];
    for (const Control& u : controls_from(segments[i])) {
      const Observation obs = observe(xs, problem.goal, cfg.domain);
      TaskRecord rec;
      rec.obs = obs.flat();
      rec.type = static_cast<int>(a.schema);
      rec.obj = a.obj;
      rec.targ = schema_has_target(a.schema) ? a.targ : -1;
      rec.episode = episode;
      sys.d_task.append(std::move(rec), tag);
      xs = step(xs, u, cfg.domain, segments[i].dt);
    }
  }
  ++sys.counters.plans_refined;
}

// ---------------------------------------------------------------------------
// Exploration node: roll the current policy out under the validity monitor,
// collecting negative examples and pushing replanning problems whenever the
// monitor intervenes.

inline void exploration_node_iteration(SystemState& sys, Rng& rng) {
  const RunConfig& cfg = sys.cfg;
  const SnapshotPtr snap = sys.snapshots.get();
  if (!snap || snap->lo_steps <= 0) return;  // nothing learned yet

  PlanningProblem problem = sample_problem(rng, cfg.goal_objects, cfg.domain);
  const int conjuncts = static_cast<int>(problem.goal.conjuncts.size());
  const int max_steps = 60 * std::max(1, conjuncts);

  MonitorHooks hooks;
  hooks.on_negative = [&](const WorldState& s, const GroundAction& a) {
    const Observation obs = observe(s, problem.goal, cfg.domain);
    NegativeRecord rec;
    rec.obs = obs.flat();
    rec.type = static_cast<int>(a.schema);
    rec.obj = a.obj;
    rec.targ = schema_has_target(a.schema) ? a.targ : -1;
    sys.d_neg.append(std::move(rec), SourceTag::kExploration);
  };
  hooks.on_push = [&](const WorldState& s, const std::vector<RolloutStep>&,
                      const Goal& goal) {
    PlanningProblem pushed;
    pushed.x0 = s;
    pushed.phi0 = abstract_state(s, cfg.domain);
    pushed.goal = goal;
    pushed.priority = unsatisfied_conjuncts(s, goal, cfg.domain);
    pushed.from_exploration = true;
    sys.q_task.push(std::move(pushed));
  };

  RolloutResult r = rollout_monitored(*snap, problem.x0, problem.goal,
                                      max_steps, cfg.temp0, cfg.temp_growth,
                                      cfg.explore_max_iter, rng, hooks,
                                      cfg.domain);
  ++sys.counters.exploration_rollouts;
  sys.counters.exploration_pushes += r.pushes;
  sys.counters.exploration_negatives += r.negatives;
  if (r.reached) ++sys.counters.exploration_reached;
}

// ---------------------------------------------------------------------------
// Trainer: owns the live networks, consumes the datasets, and publishes
// immutable snapshots for the other nodes.

class Trainer {
 public:
  Trainer(const RunConfig& cfg, Rng& rng) : cfg_(cfg) {
    hi_ = make_task_policy(cfg.domain, rng, cfg.task_l2);
    lo_ = make_motion_policy(cfg.domain, rng, cfg.motion_l2);
    if (cfg.train_flat) flat_ = make_flat_policy(cfg.domain, rng, cfg.motion_l2);
  }

  PolicySnapshot snapshot() const {
    PolicySnapshot s;
    s.hi = hi_;
    s.lo = lo_;
    s.flat = flat_;
    s.version = version_;
    s.lo_steps = lo_steps_;
    return s;
  }

  long steps() const { return steps_; }
  long lo_steps() const { return lo_steps_; }
  double last_task_loss() const { return last_task_loss_; }
  double last_motion_loss() const { return last_motion_loss_; }

  // One trainer iteration: one pi_hi step (positive or negative batch) and
  // one pi_lo step (plus the flat baseline when enabled). Publishes a fresh
  // snapshot every cfg.snapshot_every steps.
  void iteration(SystemState& sys, Rng& rng) {
    const std::size_t n_task = sys.d_task.size();
    const std::size_t n_neg = sys.d_neg.size();
    bool stepped = false;

    if (n_task > 0) {
      const auto batch = sys.d_task.sample(rng, cfg_.batch_size);
      if (!batch.empty()) {
        Batch b = task_batch(batch);
        auto r = train_step(hi_.net, b, cfg_.task_lr, Loss::kCrossEntropy);
        hi_.net = std::move(r.net);
        last_task_loss_ = r.loss;
        stepped = true;
      }
    }
    if (n_neg > 0) {
      // Negatives join at their natural arrival ratio; both stores are
      // capacity-bounded, so current sizes would overstate the share once
      // the negative store saturates.
      const double task_app = static_cast<double>(sys.d_task.total_appended());
      const double neg_app = static_cast<double>(sys.d_neg.total_appended());
      const double share = neg_app / std::max(1.0, task_app + neg_app);
      if (n_task == 0 || rng.uniform() < share) {
        const auto batch = sys.d_neg.sample(rng, cfg_.batch_size);
        if (!batch.empty()) {
          Batch b = task_batch(batch);
          auto r =
              train_step(hi_.net, b, cfg_.task_lr, Loss::kNegativeLikelihood);
          hi_.net = std::move(r.net);
          last_task_loss_ = r.loss;
          stepped = true;
        }
      }
    }

    const auto motion = sys.d_motion.sample(rng, cfg_.batch_size);
    if (!motion.empty()) {
      Batch b;
      const int n = static_cast<int>(motion.size());
      b.inputs.resize(n, static_cast<int>(motion[0].lo_input.size()));
      b.targets.resize(n, 4);
      for (int i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < motion[i].lo_input.size(); ++j)
          b.inputs(i, static_cast<int>(j)) = motion[i].lo_input[j];
        for (int j = 0; j < 4; ++j) b.targets(i, j) = motion[i].control[j];
      }
      auto r = train_step(lo_.net, b, cfg_.motion_lr, Loss::kMSE);
      lo_.net = std::move(r.net);
      last_motion_loss_ = r.loss;
      ++lo_steps_;
      stepped = true;

      if (flat_) {
        Batch fb;
        fb.inputs.resize(n, static_cast<int>(motion[0].flat_obs.size()));
        fb.targets = b.targets;
        for (int i = 0; i < n; ++i)
          for (std::size_t j = 0; j < motion[i].flat_obs.size(); ++j)
            fb.inputs(i, static_cast<int>(j)) = motion[i].flat_obs[j];
        auto fr = train_step(flat_->net, fb, cfg_.motion_lr, Loss::kMSE);
        flat_->net = std::move(fr.net);
        last_flat_loss_ = fr.loss;
      }
    }

    if (!stepped) return;
    ++steps_;
    sys.counters.trainer_steps.store(steps_);
    sys.counters.lo_steps.store(lo_steps_);

    if (sys.log_train.is_open() && steps_ % 50 == 0)
      sys.log_train.row({CsvLog::num(static_cast<double>(steps_)),
                         CsvLog::num(last_task_loss_),
                         CsvLog::num(last_motion_loss_),
                         CsvLog::num(last_flat_loss_),
                         CsvLog::num(static_cast<double>(sys.d_task.size())),
                         CsvLog::num(static_cast<double>(sys.d_motion.size())),
                         CsvLog::num(static_cast<double>(sys.d_neg.size()))});

    if (steps_ % cfg_.snapshot_every == 0) publish(sys);
  }

  void publish(SystemState& sys) {
    ++version_;
    sys.snapshots.publish(snapshot());
  }

  Batch task_batch(const std::vector<TaskRecord>& recs) const {
    return make_class_batch(recs);
  }
  Batch task_batch(const std::vector<NegativeRecord>& recs) const {
    return make_class_batch(recs);
  }

 private:
  template <class R>
  Batch make_class_batch(const std::vector<R>& recs) const {
    Batch b;
    const int n = static_cast<int>(recs.size());
    b.inputs.resize(n, static_cast<int>(recs[0].obs.size()));
    b.classes.resize(n, 3);
    for (int i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < recs[i].obs.size(); ++j)
        b.inputs(i, static_cast<int>(j)) = recs[i].obs[j];
      b.classes(i, 0) = recs[i].type;
      b.classes(i, 1) = recs[i].obj;
      b.classes(i, 2) = recs[i].targ;
    }
    return b;
  }

  RunConfig cfg_;
  TaskPolicy hi_;
  MotionPolicy lo_;
  std::optional<FlatPolicy> flat_;
  std::uint64_t version_ = 0;
  long steps_ = 0;
  long lo_steps_ = 0;
  double last_task_loss_ = 0.0;
  double last_motion_loss_ = 0.0;
  double last_flat_loss_ = 0.0;
};

// ---------------------------------------------------------------------------
// Evaluation: greedy rollouts on freshly sampled problems.

struct EvalResult {
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_progress = 0.0;  // clamped per-conjunct distance reduction
};

inline double goal_progress(const WorldState& x0, const WorldState& x1,
                            const Goal& goal, const DomainConfig& cfg) {
  if (goal.conjuncts.empty()) return 0.0;
  double total = 0.0;
  (void)cfg;
  for (const Fluent& f : goal.conjuncts) {
    const Vec2 t = x0.targets[f.b].pos;
    const double d0 = (x0.objects[f.a].pos - t).norm();
    const double d1 = (x1.objects[f.a].pos - t).norm();
    if (d0 <= 1e-9)
      total += 1.0;
    else
      total += std::clamp(1.0 - d1 / d0, 0.0, 1.0);
  }
  return total / static_cast<double>(goal.conjuncts.size());
}

inline EvalResult evaluate_snapshot(const PolicySnapshot& snap,
                                    const RunConfig& cfg, Rng& rng,
                                    int episodes, bool use_flat = false) {
  EvalResult out;
  out.episodes = episodes;
  for (int e = 0; e < episodes; ++e) {
    PlanningProblem p = sample_problem(rng, cfg.goal_objects, cfg.domain);
    // Worst-case episode length: two workspace crossings per conjunct at
    // retime_step displacement, plus slack for imperfect tracking.
    const int max_steps =
        150 * std::max(1, static_cast<int>(p.goal.conjuncts.size()));
    RolloutResult r =
        use_flat && snap.flat
            ? rollout_flat(*snap.flat, p.x0, p.goal, max_steps, cfg.domain)
            : rollout_eval(snap, p.x0, p.goal, max_steps, cfg.domain);
    if (r.reached) ++out.successes;
    out.mean_progress += goal_progress(p.x0, r.final_state, p.goal, cfg.domain);
  }
  if (episodes > 0) {
    out.success_rate = static_cast<double>(out.successes) / episodes;
    out.mean_progress /= episodes;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Snapshot checkpoints: one directory per snapshot with the networks and a
// key-value metadata sidecar.

inline void save_snapshot(const PolicySnapshot& snap, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_network(snap.hi.net, dir + "/task.bin");
  save_network(snap.lo.net, dir + "/motion.bin");
  if (snap.flat) save_network(snap.flat->net, dir + "/flat.bin");
  KeyValueFile kv;
  kv.set_num("snapshot.version", static_cast<double>(snap.version));
  kv.set_num("snapshot.lo_steps", static_cast<double>(snap.lo_steps));
  kv.set_num("snapshot.n_obj", snap.hi.n_obj);
  kv.set_num("snapshot.n_targ", snap.hi.n_targ);
  kv.set("snapshot.has_flat", snap.flat ? "true" : "false");
  std::ofstream meta(dir + "/meta.kv");
  meta << kv.serialize();
}

inline PolicySnapshot load_snapshot(const std::string& dir) {
  KeyValueFile kv = KeyValueFile::load(dir + "/meta.kv");
  PolicySnapshot snap;
  snap.hi.net = load_network(dir + "/task.bin");
  snap.hi.n_obj = kv.get_int("snapshot.n_obj", 0);
  snap.hi.n_targ = kv.get_int("snapshot.n_targ", 0);
  snap.lo.net = load_network(dir + "/motion.bin");
  if (kv.get_bool("snapshot.has_flat", false)) {
    FlatPolicy f;
    f.net = load_network(dir + "/flat.bin");
    snap.flat = std::move(f);
  }
  snap.version = static_cast<std::uint64_t>(kv.get_num("snapshot.version", 0));
  snap.lo_steps = static_cast<long>(kv.get_num("snapshot.lo_steps", 0));
  return snap;
}

// ---------------------------------------------------------------------------
// Run driver.

struct RunReport {
  RunConfig cfg;
  long iterations = 0;
  long plans_found = 0;
  long plans_failed = 0;
  long plans_refined = 0;
  long refine_cold = 0;
  long refine_warm = 0;
  long refine_cold_success = 0;
  long refine_warm_success = 0;
  double refine_cold_mean_iters = 0.0;
  double refine_warm_mean_iters = 0.0;
  double refine_cold_mean_s = 0.0;  // concurrent mode only
  double refine_warm_mean_s = 0.0;  // concurrent mode only
  long expansions_pushed = 0;
  long exploration_rollouts = 0;
  long exploration_pushes = 0;
  long exploration_negatives = 0;
  long trainer_steps = 0;
  long lo_steps = 0;
  std::size_t d_task_size = 0;
  std::size_t d_motion_size = 0;
  std::size_t d_neg_size = 0;
  EvalResult final_eval;
  std::vector<std::string> errors;

  KeyValueFile to_kv() const {
    KeyValueFile kv = cfg.to_kv();
    kv.set_num("report.iterations", iterations);
    kv.set_num("report.plans_found", plans_found);
    kv.set_num("report.plans_failed", plans_failed);
    kv.set_num("report.plans_refined", plans_refined);
    kv.set_num("report.refine_cold", refine_cold);
    kv.set_num("report.refine_warm", refine_warm);
    kv.set_num("report.refine_cold_success", refine_cold_success);
    kv.set_num("report.refine_warm_success", refine_warm_success);
    kv.set_num("report.refine_cold_mean_iters", refine_cold_mean_iters);
    kv.set_num("report.refine_warm_mean_iters", refine_warm_mean_iters);
    if (!cfg.serial) {
      kv.set_num("report.refine_cold_mean_s", refine_cold_mean_s);
      kv.set_num("report.refine_warm_mean_s", refine_warm_mean_s);
    }
    kv.set_num("report.expansions_pushed", expansions_pushed);
    kv.set_num("report.exploration_rollouts", exploration_rollouts);
    kv.set_num("report.exploration_pushes", exploration_pushes);
    kv.set_num("report.exploration_negatives", exploration_negatives);
    kv.set_num("report.trainer_steps", trainer_steps);
    kv.set_num("report.lo_steps", lo_steps);
    kv.set_num("report.d_task_size", static_cast<double>(d_task_size));
    kv.set_num("report.d_motion_size", static_cast<double>(d_motion_size));
    kv.set_num("report.d_neg_size", static_cast<double>(d_neg_size));
    kv.set_num("report.eval_episodes", final_eval.episodes);
    kv.set_num("report.eval_successes", final_eval.successes);
    kv.set_num("report.eval_success_rate", final_eval.success_rate);
    kv.set_num("report.eval_mean_progress", final_eval.mean_progress);
    kv.set_num("report.errors", static_cast<double>(errors.size()));
    return kv;
  }
};

inline RunReport collect_report(const SystemState& sys, long iterations,
                                const EvalResult& final_eval) {
  const Counters& c = sys.counters;
  RunReport r;
  r.cfg = sys.cfg;
  r.iterations = iterations;
  r.plans_found = c.plans_found.load();
  r.plans_failed = c.plans_failed.load();
  r.plans_refined = c.plans_refined.load();
  r.refine_cold = c.refine_cold.load();
  r.refine_warm = c.refine_warm.load();
  r.refine_cold_success = c.refine_cold_success.load();
  r.refine_warm_success = c.refine_warm_success.load();
  if (r.refine_cold > 0) {
    r.refine_cold_mean_iters =
        static_cast<double>(c.refine_cold_iters.load()) / r.refine_cold;
    r.refine_cold_mean_s =
        c.refine_cold_us.load() / 1e6 / static_cast<double>(r.refine_cold);
  }
  if (r.refine_warm > 0) {
    r.refine_warm_mean_iters =
        static_cast<double>(c.refine_warm_iters.load()) / r.refine_warm;
    r.refine_warm_mean_s =
        c.refine_warm_us.load() / 1e6 / static_cast<double>(r.refine_warm);
  }
  r.expansions_pushed = c.expansions_pushed.load();
  r.exploration_rollouts = c.exploration_rollouts.load();
  r.exploration_pushes = c.exploration_pushes.load();
  r.exploration_negatives = c.exploration_negatives.load();
  r.trainer_steps = c.trainer_steps.load();
  r.lo_steps = c.lo_steps.load();
  r.d_task_size = sys.d_task.size();
  r.d_motion_size = sys.d_motion.size();
  r.d_neg_size = sys.d_neg.size();
  r.final_eval = final_eval;
  return r;
}

namespace detail {

inline void open_logs(SystemState& sys) {
  const std::string dir = sys.cfg.out_dir;
  std::filesystem::create_directories(dir + "/metrics");
  std::filesystem::create_directories(dir + "/checkpoints");
  std::filesystem::create_directories(dir + "/report");
  sys.log_train.open(dir + "/metrics/train.csv",
                     {"step", "task_loss", "motion_loss", "flat_loss",
                      "d_task", "d_motion", "d_neg"});
  sys.log_eval.open(dir + "/metrics/eval.csv",
                    {"step", "episodes", "successes", "success_rate",
                     "mean_progress", "snapshot_version"});
  if (!sys.cfg.serial)
    sys.log_refine.open(dir + "/metrics/refine.csv",
                        {"warm", "success", "iterations", "merit", "seconds"});
  std::ofstream echo(dir + "/config.echo");
  echo << sys.cfg.to_kv().serialize();
}

inline void log_eval_row(SystemState& sys, long step, const EvalResult& ev,
                         std::uint64_t version) {
  if (!sys.log_eval.is_open()) return;
  sys.log_eval.row({CsvLog::num(static_cast<double>(step)),
                    CsvLog::num(ev.episodes), CsvLog::num(ev.successes),
                    CsvLog::num(ev.success_rate),
                    CsvLog::num(ev.mean_progress),
                    CsvLog::num(static_cast<double>(version))});
}

}  // namespace detail

// Serial mode: a deterministic round-robin over the node types driven by a
// single generator. Produces bit-identical datasets, networks, and reports
// for a fixed config and seed.
inline RunReport run_serial(SystemState& sys) {
  const RunConfig& cfg = sys.cfg;
  Rng rng(cfg.seed);
  Trainer trainer(cfg, rng);
  trainer.publish(sys);

  long iters = 0;
  for (; iters < cfg.serial_iters; ++iters) {
    if (cfg.max_plans > 0 &&
        sys.counters.plans_refined.load() >= cfg.max_plans)
      break;
    task_node_iteration(sys, rng);
    while (auto unit = sys.q_motion.try_pop())
      motion_node_process(sys, std::move(*unit), rng);
    if (exploration_enabled(cfg.feedback)) exploration_node_iteration(sys, rng);
    for (int k = 0; k < 8; ++k) trainer.iteration(sys, rng);
    if (cfg.eval_every > 0 && (iters + 1) % cfg.eval_every == 0) {
      const PolicySnapshot snap = trainer.snapshot();
      EvalResult ev = evaluate_snapshot(snap, cfg, rng, cfg.eval_episodes);
      detail::log_eval_row(sys, iters + 1, ev, snap.version);
    }
  }

  trainer.publish(sys);
  const PolicySnapshot final_snap = trainer.snapshot();
  save_snapshot(final_snap, cfg.out_dir + "/checkpoints/final");
  EvalResult final_eval =
      evaluate_snapshot(final_snap, cfg, rng, cfg.eval_episodes);
  detail::log_eval_row(sys, iters, final_eval, final_snap.version);

  RunReport report = collect_report(sys, iters, final_eval);
  report.errors = sys.errors;
  std::ofstream out(cfg.out_dir + "/report/report.kv");
  out << report.to_kv().serialize();
  return report;
}

// Concurrent mode: dedicated worker threads per node type plus a trainer
// thread, stopped on the wall-time budget (or max_plans / first error).
inline RunReport run_concurrent(SystemState& sys) {
  const RunConfig& cfg = sys.cfg;
  Rng init_rng(cfg.seed);
  Trainer trainer(cfg, init_rng);
  trainer.publish(sys);

  std::atomic<long> trainer_iters{0};
  std::vector<std::thread> threads;
  std::uint64_t next_seed = cfg.seed * 0x9e3779b97f4a7c15ULL + 1;
  auto spawn = [&](auto body) {
    const std::uint64_t seed = next_seed++;
    threads.emplace_back([&sys, seed, body] {
      Rng rng(seed);
      try {
        body(rng);
      } catch (const std::exception& e) {
        sys.record_error(e.what());
      }
    });
  };

  for (int i = 0; i < cfg.task_workers; ++i)
    spawn([&sys](Rng& rng) {
      while (!sys.stop.load()) task_node_iteration(sys, rng);
    });
  for (int i = 0; i < cfg.motion_workers; ++i)
    spawn([&sys](Rng& rng) {
      while (!sys.stop.load()) {
        auto unit = sys.q_motion.pop_wait(std::chrono::milliseconds(100));
        if (unit) motion_node_process(sys, std::move(*unit), rng);
      }
    });
  if (exploration_enabled(cfg.feedback))
    for (int i = 0; i < cfg.exploration_workers; ++i)
      spawn([&sys](Rng& rng) {
        while (!sys.stop.load()) exploration_node_iteration(sys, rng);
      });
  spawn([&sys, &trainer, &trainer_iters](Rng& rng) {
    const RunConfig& c = sys.cfg;
    while (!sys.stop.load()) {
      trainer.iteration(sys, rng);
      const long it = ++trainer_iters;
      if (c.eval_every > 0 && it % c.eval_every == 0) {
        const PolicySnapshot snap = trainer.snapshot();
        EvalResult ev = evaluate_snapshot(snap, c, rng, c.eval_episodes);
        detail::log_eval_row(sys, it, ev, snap.version);
      }
      if (sys.d_task.size() == 0 && sys.d_motion.size() == 0 &&
          sys.d_neg.size() == 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  });

  const auto t0 = std::chrono::steady_clock::now();
  while (!sys.stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (elapsed >= cfg.wall_time_s) break;
    if (cfg.max_plans > 0 &&
        sys.counters.plans_refined.load() >= cfg.max_plans)
      break;
  }
  sys.stop.store(true);
  sys.q_motion.close();
  for (auto& t : threads) t.join();

  trainer.publish(sys);
  const PolicySnapshot final_snap = trainer.snapshot();
  save_snapshot(final_snap, cfg.out_dir + "/checkpoints/final");
  Rng eval_rng(cfg.seed + 1);
  EvalResult final_eval =
      evaluate_snapshot(final_snap, cfg, eval_rng, cfg.eval_episodes);
  detail::log_eval_row(sys, trainer_iters.load(), final_eval,
                       final_snap.version);

  RunReport report = collect_report(sys, trainer_iters.load(), final_eval);
  report.errors = sys.errors;
  std::ofstream out(cfg.out_dir + "/report/report.kv");
  out << report.to_kv().serialize();
  return report;
}

inline RunReport run_system(const RunConfig& cfg) {
  if (cfg.goal_objects != cfg.domain.n_objects)
    throw std::invalid_argument(
        "run_system: goal_objects must equal domain.n_objects");
  SystemState sys(cfg);
  detail::open_logs(sys);
  return cfg.serial ? run_serial(sys) : run_concurrent(sys);
}

}  // namespace tamp2d

#endif  // TAMP2D_ORCHESTRATOR_HPP_
