#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <thread>

#include "tamp2d/orchestrator.hpp"

using namespace tamp2d;

namespace {

namespace fs = std::filesystem;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunConfig tiny_run(const std::string& out_dir) {
  RunConfig cfg;
  cfg.domain.n_objects = 1;
  cfg.goal_objects = 1;
  cfg.serial = true;
  cfg.serial_iters = 40;
  cfg.batch_size = 16;
  cfg.eval_every = 20;
  cfg.eval_episodes = 2;
  cfg.snapshot_every = 50;
  cfg.seed = 12345;
  cfg.out_dir = out_dir;
  return cfg;
}

// Proportional grasp controller wired directly from the attention features:
// enough to reach and grasp objects in an open world.
MotionPolicy proportional_lo(const DomainConfig& cfg) {
  Rng rng(0);
  MotionPolicy p;
  p.net = init_xavier({motion_input_dim(cfg), 4}, {}, rng, 0.0,
                      Activation::kIdentity);
  p.net.layers[0].W.setZero();
  p.net.layers[0].W(0, 0) = 1.0;  // vx from attention dx
  p.net.layers[0].W(1, 1) = 1.0;  // vy from attention dy
  p.net.layers[0].b << 0, 0, 0, 1.0;
  return p;
}

TaskPolicy constant_grasp_hi(const DomainConfig& cfg) {
  Rng rng(0);
  TaskPolicy p;
  p.n_obj = cfg.n_objects;
  p.n_targ = cfg.n_targets;
  const int out = kNumSchemas + cfg.n_objects + cfg.n_targets;
  p.net = init_xavier({observation_dim(cfg), out},
                      {kNumSchemas, cfg.n_objects, cfg.n_targets}, rng, 0.0,
                      Activation::kSoftmaxHeads);
  p.net.layers[0].W.setZero();
  p.net.layers[0].b.setZero();
  p.net.layers[0].b[0] = 50.0;
  return p;
}

}  // namespace

TEST_CASE("task queue orders by priority then recency and stays bounded") {
  TaskQueue q(3);
  DomainConfig cfg;
  auto mk = [&](int priority) {
    PlanningProblem p;
    p.priority = priority;
    return p;
  };
  q.push(mk(5));
  q.push(mk(1));
  q.push(mk(3));
  q.push(mk(2));  // overflows: the priority-5 problem is evicted
  CHECK(q.size() == 3);
  auto a = q.try_pop();
  REQUIRE(a);
  CHECK(a->priority == 1);
  auto b = q.try_pop();
  REQUIRE(b);
  CHECK(b->priority == 2);
  CHECK(q.try_pop()->priority == 3);
  CHECK(!q.try_pop());

  // Equal priorities: most recent first.
  q.push(mk(1));
  const std::uint64_t first_seq = 0;  // seq of the oldest among equals
  (void)first_seq;
  q.push(mk(1));
  auto newer = q.try_pop();
  auto older = q.try_pop();
  REQUIRE(newer);
  REQUIRE(older);
  CHECK(newer->seq > older->seq);
}

TEST_CASE("motion queue under producer-consumer stress loses nothing") {
  // 8 producers x 8 consumers x 10^6 items, every item sequence-numbered.
  const int kProducers = 8, kConsumers = 8;
  const long kTotal = 1000000;
  const long per_producer = kTotal / kProducers;
  MotionQueue q(4096);

  std::vector<std::vector<std::uint8_t>> seen(
      kProducers, std::vector<std::uint8_t>(per_producer, 0));
  std::atomic<long> consumed{0};
  std::atomic<bool> duplicate{false};

  std::vector<std::thread> threads;
  for (int p = 0; p < kProducers; ++p)
    threads.emplace_back([&, p] {
      for (long i = 0; i < per_producer; ++i) {
        MotionWorkUnit u;
        u.problem.seq = static_cast<std::uint64_t>(p) * per_producer + i;
        // Unbounded retry: the test queue must not drop under pressure, so
        // spin until there is room.
        while (true) {
          if (q.size() < 4000) {
            q.push(std::move(u));
            break;
          }
          std::this_thread::yield();
        }
      }
    });
  for (int c = 0; c < kConsumers; ++c)
    threads.emplace_back([&] {
      while (true) {
        auto u = q.pop_wait(std::chrono::milliseconds(50));
        if (!u) {
          if (consumed.load() >= kTotal) return;
          continue;
        }
        const long id = static_cast<long>(u->problem.seq);
        auto& cell = seen[id / per_producer][id % per_producer];
        if (__atomic_exchange_n(&cell, std::uint8_t{1}, __ATOMIC_SEQ_CST))
          duplicate.store(true);
        ++consumed;
      }
    });
  for (auto& t : threads) t.join();

  CHECK(consumed.load() == kTotal);
  CHECK(!duplicate.load());
  long missing = 0;
  for (const auto& row : seen)
    for (std::uint8_t v : row)
      if (!v) ++missing;
  CHECK(missing == 0);
}

TEST_CASE("dataset honors capacity and the sampling mix") {
  Dataset<NegativeRecord> d(100);
  for (int i = 0; i < 80; ++i) d.append({}, SourceTag::kBase);
  for (int i = 0; i < 80; ++i) d.append({{}, 1, 0, 0}, SourceTag::kExploration);
  CHECK(d.size() == 100);
  CHECK(d.total_appended() == 160);
  // Trimming eats the larger partition first, so exploration kept its 80
  // only until base shrank to meet it.
  CHECK(d.size(SourceTag::kBase) <= 80);

  Rng rng(5);
  const auto batch = d.sample(rng, 2000, 0.5);
  long exploration = 0;
  for (const auto& r : batch) exploration += r.type == 1;
  CHECK(exploration > 700);
  CHECK(exploration < 1300);
}

TEST_CASE("failed refinement expands the task problem with failure fluents") {
  RunConfig cfg = tiny_run("test_orch_expand_out");
  SystemState sys(cfg);
  Rng rng(3);

  PlanningProblem p = sample_problem(rng, 1, cfg.domain);
  // Script an invalid first action: Transfer requires Holding, which is
  // false, so refinement must fail fast and push an expansion.
  MotionWorkUnit unit;
  unit.problem = p;
  unit.plan.actions = {{SchemaType::kTransfer, 0, 0}};
  motion_node_process(sys, unit, rng);

  CHECK(sys.counters.expansions_pushed.load() == 1);
  REQUIRE(sys.q_task.size() == 1);
  auto pushed = sys.q_task.try_pop();
  REQUIRE(pushed);
  REQUIRE(!pushed->phi0.failures.empty());
  const FailureFluent& f = pushed->phi0.failures.front();
  CHECK(f.blocked == unit.plan.actions[0]);
  CHECK(f.scope == fingerprint(abstract_state(p.x0, cfg.domain).fluents));
  CHECK(sys.counters.plans_refined.load() == 0);
  fs::remove_all("test_orch_expand_out");
}

TEST_CASE("successful refinement feeds both datasets with verifiable data") {
  RunConfig cfg = tiny_run("test_orch_feed_out");
  SystemState sys(cfg);
  Rng rng(4);

  PlanningProblem p = sample_problem(rng, 1, cfg.domain);
  PlanResult pr = plan(p.phi0, p.goal, sys.actions, cfg.domain);
  REQUIRE(pr.success);
  MotionWorkUnit unit{p, pr.plan};
  motion_node_process(sys, unit, rng);

  REQUIRE(sys.counters.plans_refined.load() == 1);
  // One pi_hi record per executed control step.
  CHECK(sys.d_task.size() == sys.d_motion.size());
  CHECK(sys.d_motion.size() >= 3 * pr.plan.actions.size());

  // Criterion-style integrity: the stored episode re-simulates to a
  // goal-satisfying state, and motion records re-pass their constraints.
  for (const TaskRecord& rec : sys.d_task.snapshot()) {
    REQUIRE(rec.episode);
    WorldState x = rec.episode->x0;
    for (const Trajectory& seg : rec.episode->segments)
      x = execute(x, seg, cfg.domain);
    CHECK(goal_satisfied(x, rec.episode->goal, cfg.domain));
  }
  for (const MotionRecord& rec : sys.d_motion.snapshot()) {
    REQUIRE(rec.segment);
    const ConstraintSet cs =
        build_constraints(rec.segment->x_start, rec.segment->action, cfg.domain);
    for (const Constraint& c : cs.all)
      CHECK(c.value(rec.segment->raw.waypoints.at(c.t).pos) <= 1e-4);
  }
  fs::remove_all("test_orch_feed_out");
}

TEST_CASE("exploration node converts monitor events into feedback") {
  RunConfig cfg = tiny_run("test_orch_explore_out");
  SystemState sys(cfg);
  Rng rng(6);

  // Without a trained motion policy the node is a no-op.
  PolicySnapshot idle;
  idle.hi = constant_grasp_hi(cfg.domain);
  idle.lo = proportional_lo(cfg.domain);
  idle.lo_steps = 0;
  sys.snapshots.publish(idle);
  exploration_node_iteration(sys, rng);
  CHECK(sys.counters.exploration_rollouts.load() == 0);

  // A grasp-forever policy with a working reach controller triggers
  // delayed-switch penalties: negatives plus replanning pushes.
  PolicySnapshot snap = idle;
  snap.lo_steps = 1;
  sys.snapshots.publish(snap);
  for (int i = 0; i < 5; ++i) exploration_node_iteration(sys, rng);
  CHECK(sys.counters.exploration_rollouts.load() == 5);
  CHECK(sys.counters.exploration_negatives.load() > 0);
  CHECK(sys.counters.exploration_pushes.load() > 0);
  CHECK(sys.d_neg.size() > 0);
  REQUIRE(sys.q_task.size() > 0);
  auto pushed = sys.q_task.try_pop();
  REQUIRE(pushed);
  CHECK(pushed->from_exploration);
  fs::remove_all("test_orch_explore_out");
}

TEST_CASE("trainer reduces motion loss on linearly generated controls") {
  RunConfig cfg = tiny_run("test_orch_train_out");
  cfg.batch_size = 32;
  cfg.motion_lr = 2e-3;  // speeds the fixture up; decrease is what matters
  SystemState sys(cfg);
  Rng rng(7);

  // Synthetic supervision: control = fixed linear map of the input.
  const int in_dim = motion_input_dim(cfg.domain);
  for (int i = 0; i < 500; ++i) {
    MotionRecord rec;
    rec.lo_input.resize(in_dim);
    for (int j = 0; j < in_dim; ++j) rec.lo_input[j] = rng.uniform(-1, 1);
    rec.control = {0.3 * rec.lo_input[0], -0.2 * rec.lo_input[1],
                   0.1 * rec.lo_input[2], 0.5};
    sys.d_motion.append(std::move(rec), SourceTag::kBase);
  }

  Trainer trainer(cfg, rng);
  double first = 0, last = 0;
  for (int it = 0; it < 400; ++it) {
    trainer.iteration(sys, rng);
    if (it == 20) first = trainer.last_motion_loss();
    last = trainer.last_motion_loss();
  }
  CHECK(trainer.lo_steps() == 400);
  CHECK(last < 0.5 * first);
  fs::remove_all("test_orch_train_out");
}

TEST_CASE("snapshot checkpoints round trip through a directory") {
  DomainConfig dcfg;
  dcfg.n_objects = 2;
  Rng rng(8);
  PolicySnapshot snap;
  snap.hi = make_task_policy(dcfg, rng, 1e-4);
  snap.lo = make_motion_policy(dcfg, rng, 1e-4);
  snap.flat = make_flat_policy(dcfg, rng, 1e-4);
  snap.version = 9;
  snap.lo_steps = 123;

  save_snapshot(snap, "test_orch_ckpt");
  PolicySnapshot back = load_snapshot("test_orch_ckpt");
  fs::remove_all("test_orch_ckpt");

  CHECK(back.version == 9);
  CHECK(back.lo_steps == 123);
  CHECK(back.hi.n_obj == 2);
  REQUIRE(back.flat.has_value());
  for (std::size_t i = 0; i < snap.hi.net.layers.size(); ++i)
    CHECK(back.hi.net.layers[i].W == snap.hi.net.layers[i].W);
  for (std::size_t i = 0; i < snap.lo.net.layers.size(); ++i)
    CHECK(back.lo.net.layers[i].W == snap.lo.net.layers[i].W);
}

TEST_CASE("serial runs are bit deterministic") {
  RunConfig cfg_a = tiny_run("test_orch_det_a");
  RunConfig cfg_b = tiny_run("test_orch_det_b");
  RunReport ra = run_system(cfg_a);
  RunReport rb = run_system(cfg_b);

  CHECK(ra.plans_refined == rb.plans_refined);
  CHECK(ra.trainer_steps == rb.trainer_steps);

  // Byte-identical reports (modulo the differing out_dir echo) and
  // checkpoints.
  auto strip_dir = [](std::string s, const std::string& dir) {
    std::size_t pos;
    while ((pos = s.find(dir)) != std::string::npos) s.erase(pos, dir.size());
    return s;
  };
  CHECK(strip_dir(slurp("test_orch_det_a/report/report.kv"), "test_orch_det_a") ==
        strip_dir(slurp("test_orch_det_b/report/report.kv"), "test_orch_det_b"));
  CHECK(slurp("test_orch_det_a/checkpoints/final/task.bin") ==
        slurp("test_orch_det_b/checkpoints/final/task.bin"));
  CHECK(slurp("test_orch_det_a/checkpoints/final/motion.bin") ==
        slurp("test_orch_det_b/checkpoints/final/motion.bin"));
  CHECK(slurp("test_orch_det_a/metrics/train.csv") ==
        slurp("test_orch_det_b/metrics/train.csv"));
  CHECK(slurp("test_orch_det_a/metrics/eval.csv") ==
        slurp("test_orch_det_b/metrics/eval.csv"));
  CHECK(!slurp("test_orch_det_a/config.echo").empty());

  fs::remove_all("test_orch_det_a");
  fs::remove_all("test_orch_det_b");
}

TEST_CASE("concurrent mode runs within a wall-time budget without errors") {
  RunConfig cfg = tiny_run("test_orch_conc_out");
  cfg.serial = false;
  cfg.wall_time_s = 2.0;
  cfg.task_workers = 2;
  cfg.motion_workers = 2;
  cfg.exploration_workers = 1;
  RunReport r = run_system(cfg);
  CHECK(r.errors.empty());
  CHECK(r.plans_found > 0);
  CHECK(fs::exists("test_orch_conc_out/report/report.kv"));
  CHECK(fs::exists("test_orch_conc_out/checkpoints/final/task.bin"));
  fs::remove_all("test_orch_conc_out");
}

TEST_CASE("evaluation metrics stay within contract bounds") {
  RunConfig cfg = tiny_run("test_orch_eval_out");
  Rng rng(10);
  PolicySnapshot snap;
  snap.hi = make_task_policy(cfg.domain, rng, 0.0);
  snap.lo = make_motion_policy(cfg.domain, rng, 0.0);

  EvalResult ev = evaluate_snapshot(snap, cfg, rng, 10);
  CHECK(ev.episodes == 10);
  CHECK(ev.success_rate >= 0.0);
  CHECK(ev.success_rate <= 1.0);
  CHECK(ev.mean_progress >= 0.0);
  CHECK(ev.mean_progress <= 1.0);

  EvalResult none = evaluate_snapshot(snap, cfg, rng, 0);
  CHECK(none.episodes == 0);
  CHECK(none.success_rate == 0.0);
}
