#include "catch_amalgamated.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tamp2d/orchestrator.hpp"
#include "tamp2d/replay.hpp"
#include "tamp2d/report.hpp"

using namespace tamp2d;

namespace {

namespace fs = std::filesystem;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void dump(const std::string& path, const std::string& body) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  out << body;
}

#ifdef TAMP2D_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(TAMP2D_CLI_PATH) + " " + args +
                          " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace

TEST_CASE("key-value files parse, override, and serialize deterministically") {
  std::istringstream in(
      "# a comment\n"
      "  alpha = 1.5  \n"
      "beta=two words here\n"
      "alpha = 2.5   # later assignment wins\n"
      "gamma = on\n"
      "no equals sign on this line\n");
  KeyValueFile kv = KeyValueFile::parse(in);
  CHECK(kv.get_num("alpha", 0) == 2.5);
  CHECK(kv.get_str("beta", "") == "two words here");
  CHECK(kv.get_bool("gamma", false));
  CHECK(!kv.has("no equals sign on this line"));
  CHECK(kv.get_int("missing", 7) == 7);

  CHECK_THROWS(kv.get_num("beta", 0));
  kv.set("gamma", "maybe");
  CHECK_THROWS(kv.get_bool("gamma", false));
  CHECK_THROWS(KeyValueFile::load("no_such_file.kv"));

  kv.set("gamma", "on");
  const std::string s = kv.serialize();
  CHECK(s == "alpha = 2.5\nbeta = two words here\ngamma = on\n");
  std::istringstream round(s);
  KeyValueFile back = KeyValueFile::parse(round);
  CHECK(back.serialize() == s);
}

TEST_CASE("run config round trips through its key-value form") {
  RunConfig cfg;
  cfg.goal_objects = 2;
  cfg.domain.n_objects = 3;
  cfg.seed = 99;
  cfg.batch_size = 32;
  cfg.feedback = FeedbackMode::kMotionOnly;
  RunConfig back = RunConfig::from_kv(cfg.to_kv());
  CHECK(back.to_kv().serialize() == cfg.to_kv().serialize());
  CHECK(back.goal_objects == 2);
  CHECK(back.feedback == FeedbackMode::kMotionOnly);

  KeyValueFile bad = cfg.to_kv();
  bad.set("run.goal_objects", "5");  // exceeds domain.n_objects = 3
  CHECK_THROWS(RunConfig::from_kv(bad));
}

TEST_CASE("csv tables skip and count malformed rows") {
  dump("test_fmt_csv/t.csv",
       "step,loss\n"
       "1,0.5\n"
       "2,0.4,extra\n"
       "\n"
       "3,0.3\n"
       "lonely\n");
  CsvTable t = CsvTable::load("test_fmt_csv/t.csv");
  REQUIRE(t.header == std::vector<std::string>{"step", "loss"});
  CHECK(t.rows.size() == 2);
  CHECK(t.skipped == 2);
  CHECK(t.rows[1][1] == "0.3");

  Curve c = curve_from_csv(t, "step", "loss", "loss");
  REQUIRE(c.x.size() == 2);
  CHECK(c.x[1] == 3.0);
  CHECK(c.y[0] == 0.5);
  CHECK(curve_from_csv(t, "step", "absent", "x").x.empty());
  fs::remove_all("test_fmt_csv");
}

TEST_CASE("svg rendering is byte deterministic and places points correctly") {
  Curve c{"demo", {0.0, 10.0}, {0.0, 1.0}};
  const std::string a = render_svg({c}, "t", "x", "y");
  const std::string b = render_svg({c}, "t", "x", "y");
  CHECK(a == b);
  CHECK(a.find("<svg") == 0);
  CHECK(a.find("</svg>") != std::string::npos);
  // Plot area is x in [60, 620], y in [40, 350]; the two points span it.
  CHECK(a.find("points=\"60,350 620,40\"") != std::string::npos);
  CHECK(a.find("demo") != std::string::npos);

  // Degenerate input still renders without dividing by zero.
  Curve flat_c{"flat", {5.0}, {2.0}};
  const std::string d = render_svg({flat_c}, "t", "x", "y");
  CHECK(d.find("polyline") != std::string::npos);
}

TEST_CASE("rollout logs replay bit-exactly through the hex-float format") {
  DomainConfig cfg;
  cfg.n_objects = 2;
  cfg.n_targets = 2;
  Rng rng(42);
  PlanningProblem p = sample_problem(rng, 2, cfg);

  RolloutLog log;
  log.x0 = p.x0;
  log.dt = cfg.control_dt;
  for (int t = 0; t < 25; ++t) {
    log.controls.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1),
                            rng.uniform(-0.5, 0.5), t > 12 ? 1.0 : -1.0});
    log.action_names.push_back("-");
  }
  log.events.emplace_back(3, "started");

  std::ostringstream out;
  write_rollout(out, log);
  std::istringstream in(out.str());
  RolloutLog back = read_rollout(in);

  REQUIRE(back.controls.size() == log.controls.size());
  CHECK(back.dt == log.dt);
  CHECK(back.x0.robot_pos.x == log.x0.robot_pos.x);
  CHECK(back.x0.objects.size() == log.x0.objects.size());
  CHECK(back.events == log.events);

  const WorldState fa = replay(log, cfg);
  const WorldState fb = replay(back, cfg);
  CHECK(fa.robot_pos.x == fb.robot_pos.x);
  CHECK(fa.robot_pos.y == fb.robot_pos.y);
  for (std::size_t i = 0; i < fa.objects.size(); ++i) {
    CHECK(fa.objects[i].pos.x == fb.objects[i].pos.x);
    CHECK(fa.objects[i].pos.y == fb.objects[i].pos.y);
  }
  CHECK(fa.attached == fb.attached);

  std::istringstream junk("not a log\n");
  CHECK_THROWS(read_rollout(junk));
}

TEST_CASE("report generation builds charts from a synthetic run directory") {
  const std::string dir = "test_fmt_report";
  dump(dir + "/metrics/eval.csv",
       "step,success_rate,mean_progress,episodes\n"
       "100,0.2,0.4,20\n"
       "200,0.5,0.7,20\n");
  dump(dir + "/metrics/train.csv",
       "step,task_loss,motion_loss,flat_loss,d_task,d_motion,d_neg\n"
       "50,1.2,0.8,0,10,40,0\n"
       "100,0.9,0.6,0,20,80,0\n");
  dump(dir + "/report/report.kv",
       "report.plans_refined = 12\nreport.trainer_steps = 100\n"
       "report.eval_success_rate = 0.5\nreport.eval_mean_progress = 0.7\n");

  REQUIRE(write_report(dir));
  CHECK(fs::exists(dir + "/report/eval_curve.svg"));
  CHECK(fs::exists(dir + "/report/loss_curve.svg"));
  const std::string sum = slurp(dir + "/report/summary.txt");
  CHECK(sum.find("plans refined: 12") != std::string::npos);
  CHECK(sum.find("final success rate: 0.5") != std::string::npos);
  CHECK(sum.find("eval rows: 2") != std::string::npos);

  // Re-rendering over identical inputs is byte-stable.
  const std::string svg1 = slurp(dir + "/report/eval_curve.svg");
  REQUIRE(write_report(dir));
  CHECK(slurp(dir + "/report/eval_curve.svg") == svg1);

  CHECK(!write_report("test_fmt_report_missing"));
  fs::remove_all(dir);
}

#ifdef TAMP2D_CLI_PATH

TEST_CASE("cli exit codes distinguish usage, runtime, and success") {
  CHECK(run_cli("definitely-not-a-subcommand") == 2);
  CHECK(run_cli("eval") == 2);  // missing required --checkpoint
  CHECK(run_cli("eval --checkpoint no_such_dir") == 2);
  CHECK(run_cli("train --config no_such_file.kv") == 2);
  CHECK(run_cli("train --serial --objects 0 --iters 1") == 2);
  CHECK(run_cli("train --feedback bogus --serial --iters 1") == 2);
  CHECK(run_cli("report --out no_such_dir") == 2);
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("cli train, eval, bench-refine, and report work end to end") {
  const std::string out = "test_fmt_cli_run";
  fs::remove_all(out);
  CHECK(run_cli("train --serial --objects 1 --iters 25 --seed 3 --out " + out) ==
        0);
  CHECK(fs::exists(out + "/metrics/train.csv"));
  CHECK(fs::exists(out + "/checkpoints/final/meta.kv"));
  CHECK(fs::exists(out + "/report/report.kv"));

  CHECK(run_cli("eval --checkpoint " + out +
                "/checkpoints/final --episodes 2 --seed 1") == 0);
  // The checkpoint encodes a 1-object domain; asking for 2 must fail.
  CHECK(run_cli("eval --checkpoint " + out +
                "/checkpoints/final --objects 2") == 2);
  CHECK(run_cli("eval --checkpoint " + out + "/checkpoints/final --flat") == 2);

  CHECK(run_cli("bench-refine --seed 5 --count 3") == 0);
  CHECK(run_cli("report --out " + out) == 0);
  CHECK(fs::exists(out + "/report/summary.txt"));

  // A directory with no metrics is a runtime error, not a usage error.
  fs::create_directories("test_fmt_cli_empty");
  CHECK(run_cli("report --out test_fmt_cli_empty") == 1);
  fs::remove_all("test_fmt_cli_empty");
  fs::remove_all(out);
}

#endif  // TAMP2D_CLI_PATH
