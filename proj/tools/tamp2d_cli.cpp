#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tamp2d/orchestrator.hpp"
#include "tamp2d/replay.hpp"
#include "tamp2d/report.hpp"

namespace {

int cmd_train(const std::string& config_path, const std::string& out_dir,
              long seed, bool serial, int objects, const std::string& feedback,
              long iters, double wall_time, long max_plans, bool train_flat) {
  tamp2d::RunConfig cfg;
  try {
    if (!config_path.empty())
      cfg = tamp2d::RunConfig::from_kv(tamp2d::KeyValueFile::load(config_path));
    if (!feedback.empty()) cfg.feedback = tamp2d::feedback_mode_from(feedback);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (serial) cfg.serial = true;
  if (objects > 0) {
    cfg.goal_objects = objects;
    cfg.domain.n_objects = objects;  // one goal conjunct per world object
  } else if (config_path.empty()) {
    cfg.domain.n_objects = cfg.goal_objects;
  }
  if (iters > 0) cfg.serial_iters = iters;
  if (wall_time > 0) cfg.wall_time_s = wall_time;
  if (max_plans > 0) cfg.max_plans = max_plans;
  if (train_flat) cfg.train_flat = true;
  if (cfg.goal_objects < 1 || cfg.goal_objects != cfg.domain.n_objects) {
    std::cerr << "error: goal objects must match the domain object count\n";
    return 2;
  }

  tamp2d::RunReport report = tamp2d::run_system(cfg);
  std::cout << "iterations " << report.iterations << "\n"
            << "plans refined " << report.plans_refined << "\n"
            << "trainer steps " << report.trainer_steps << "\n"
            << "final success rate " << report.final_eval.success_rate << "\n";
  if (!report.errors.empty()) {
    for (const auto& e : report.errors) std::cerr << "worker error: " << e << "\n";
    return 1;
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint, long seed, int episodes,
             int objects, bool flat) {
  tamp2d::PolicySnapshot snap;
  try {
    snap = tamp2d::load_snapshot(checkpoint);
  } catch (const std::exception& e) {
    std::cerr << "error: cannot load checkpoint " << checkpoint << ": "
              << e.what() << "\n";
    return 2;
  }
  tamp2d::RunConfig cfg;
  cfg.domain.n_objects = snap.hi.n_obj;
  cfg.domain.n_targets = snap.hi.n_targ;
  cfg.goal_objects = objects > 0 ? objects : snap.hi.n_obj;
  if (cfg.goal_objects != snap.hi.n_obj) {
    std::cerr << "error: checkpoint was trained for " << snap.hi.n_obj
              << " objects\n";
    return 2;
  }
  if (flat && !snap.flat) {
    std::cerr << "error: checkpoint has no flat baseline network\n";
    return 2;
  }
  tamp2d::Rng rng(seed >= 0 ? static_cast<std::uint64_t>(seed) : 0);
  tamp2d::EvalResult ev =
      tamp2d::evaluate_snapshot(snap, cfg, rng, episodes, flat);
  std::cout << "episodes " << ev.episodes << "\n"
            << "successes " << ev.successes << "\n"
            << "success_rate " << ev.success_rate << "\n"
            << "mean_progress " << ev.mean_progress << "\n";
  return 0;
}

int cmd_bench_refine(long seed, int count, const std::string& checkpoint) {
  tamp2d::DomainConfig cfg;
  tamp2d::Rng rng(seed >= 0 ? static_cast<std::uint64_t>(seed) : 0);
  std::optional<tamp2d::PolicySnapshot> snap;
  if (!checkpoint.empty()) {
    try {
      snap = tamp2d::load_snapshot(checkpoint);
    } catch (const std::exception& e) {
      std::cerr << "error: cannot load checkpoint: " << e.what() << "\n";
      return 2;
    }
  }

  long cold_iters = 0, warm_iters = 0, cold_n = 0, warm_n = 0;
  long cold_ok = 0, warm_ok = 0;
  double cold_s = 0, warm_s = 0;
  const auto actions = tamp2d::ground_all(cfg);
  for (int i = 0; i < count; ++i) {
    tamp2d::PlanningProblem p = tamp2d::sample_problem(rng, 1, cfg);
    tamp2d::PlanResult pr =
        tamp2d::plan(p.phi0, p.goal, actions, cfg);
    if (!pr.success || pr.plan.actions.empty()) continue;
    const tamp2d::GroundAction& a = pr.plan.actions.front();

    auto t0 = std::chrono::steady_clock::now();
    tamp2d::RefineResult cold = tamp2d::refine(p.x0, a, std::nullopt, 1.0, cfg);
    cold_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                  .count();
    ++cold_n;
    cold_iters += cold.iterations;
    if (cold.success) ++cold_ok;

    if (snap) {
      tamp2d::Trajectory warm =
          tamp2d::rollout_lo(*snap, p.x0, a, p.goal, cfg);
      t0 = std::chrono::steady_clock::now();
      tamp2d::RefineResult wr = tamp2d::refine(p.x0, a, warm, 1.0, cfg);
      warm_s +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      ++warm_n;
      warm_iters += wr.iterations;
      if (wr.success) ++warm_ok;
    }
  }
  if (cold_n == 0) {
    std::cerr << "error: no refinable problems sampled\n";
    return 1;
  }
  std::cout << "cold_n " << cold_n << "\n"
            << "cold_success " << cold_ok << "\n"
            << "cold_mean_iters " << static_cast<double>(cold_iters) / cold_n
            << "\n"
            << "cold_mean_s " << cold_s / cold_n << "\n";
  if (warm_n > 0)
    std::cout << "warm_n " << warm_n << "\n"
              << "warm_success " << warm_ok << "\n"
              << "warm_mean_iters "
              << static_cast<double>(warm_iters) / warm_n << "\n"
              << "warm_mean_s " << warm_s / warm_n << "\n";
  return 0;
}

int cmd_report(const std::string& run_dir) {
  if (!std::filesystem::exists(run_dir)) {
    std::cerr << "error: run directory not found: " << run_dir << "\n";
    return 2;
  }
  if (!tamp2d::write_report(run_dir)) {
    std::cerr << "error: no metrics found under " << run_dir << "\n";
    return 1;
  }
  std::cout << "report written to " << run_dir << "/report\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D task-and-motion planning with policy distillation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", feedback, checkpoint, run_dir;
  long seed = -1, iters = 0, max_plans = 0;
  double wall_time = 0;
  int objects = 0, episodes = 20, count = 20;
  bool serial = false, train_flat = false, flat = false;

  auto* train = app.add_subcommand("train", "Run the planner/learner system");
  train->add_option("--config", config_path, "key=value config file");
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--seed", seed, "random seed");
  train->add_flag("--serial", serial, "deterministic single-thread mode");
  train->add_option("--objects", objects, "objects per goal")
      ->check(CLI::PositiveNumber);
  train->add_option("--feedback", feedback,
                    "none | task | motion | tamp");
  train->add_option("--iters", iters, "serial-mode iterations");
  train->add_option("--wall-time", wall_time, "concurrent-mode seconds");
  train->add_option("--max-plans", max_plans, "stop after N refined plans");
  train->add_flag("--train-flat", train_flat, "also train the flat baseline");

  auto* ev = app.add_subcommand("eval", "Evaluate a saved checkpoint");
  ev->add_option("--checkpoint", checkpoint, "checkpoint directory")
      ->required();
  ev->add_option("--seed", seed, "random seed");
  ev->add_option("--episodes", episodes, "evaluation episodes");
  ev->add_option("--objects", objects, "objects per goal");
  ev->add_flag("--flat", flat, "evaluate the flat baseline head");

  auto* bench = app.add_subcommand("bench-refine",
                                   "Benchmark trajectory refinement");
  bench->add_option("--seed", seed, "random seed");
  bench->add_option("--count", count, "problems to refine");
  bench->add_option("--checkpoint", checkpoint,
                    "optional checkpoint for warm starts");

  auto* rep = app.add_subcommand("report", "Render charts from run metrics");
  rep->add_option("--out", run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed())
      return cmd_train(config_path, out_dir, seed, serial, objects, feedback,
                       iters, wall_time, max_plans, train_flat);
    if (ev->parsed()) return cmd_eval(checkpoint, seed, episodes, objects, flat);
    if (bench->parsed()) return cmd_bench_refine(seed, count, checkpoint);
    if (rep->parsed()) return cmd_report(run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
