#ifndef TAMP2D_CONFIG_HPP_
#define TAMP2D_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tamp2d {

// Flat key = value text format used for domain descriptions and run configs.
// Lines starting with '#' are comments; whitespace around keys/values is
// trimmed. Keys are unique; later assignments win.
class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile parse(std::istream& in) {
    KeyValueFile kv;
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = trim(line.substr(0, eq));
      std::string val = trim(line.substr(eq + 1));
      if (key.empty()) continue;
      kv.values_[key] = val;
    }
    return kv;
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_str(const std::string& key, const std::string& dflt) const {
    auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }

  double get_num(const std::string& key, double dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("invalid numeric value for key '" + key +
                               "': " + it->second);
    }
  }

  long get_int(const std::string& key, long dflt) const {
    return static_cast<long>(get_num(key, static_cast<double>(dflt)));
  }

  bool get_bool(const std::string& key, bool dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    if (it->second == "true" || it->second == "on" || it->second == "1")
      return true;
    if (it->second == "false" || it->second == "off" || it->second == "0")
      return false;
    throw std::runtime_error("invalid boolean value for key '" + key +
                             "': " + it->second);
  }

  void set(const std::string& key, const std::string& val) {
    values_[key] = val;
  }
  void set_num(const std::string& key, double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    values_[key] = os.str();
  }

  // Deterministic (sorted) emission so config echoes are reproducible.
  std::string serialize() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
    return os.str();
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
  }

  std::map<std::string, std::string> values_;
};

// Geometry, thresholds, and entity counts for the 2D pick-place domain.
// Every tunable lives here so run metadata can echo a single record.
struct DomainConfig {
  int n_objects = 5;
  int n_targets = 8;

  double workspace = 10.0;    // square [0, workspace]^2 with boundary walls
  double robot_radius = 0.4;
  double object_radius = 0.3;
  double target_radius = 0.3;

  double v_max = 1.0;         // world units / s, planar speed bound
  double omega_max = 2.0;     // rad / s
  double sim_dt = 0.1;        // fine-grained simulation step
  double control_dt = 0.3;    // step duration of re-timed / policy controls

  // grasp_tol = half the object radius; the gripper point is the robot
  // center, so grasping means driving the center onto the object.
  double grasp_tol = 0.15;
  double place_tol = 0.15;    // GripperNearTarget threshold
  double retreat_dist = 1.0;  // minimum clearance after place-and-retreat
  double d_safe = 0.05;       // collision margin for trajectory optimization

  int horizon = 20;           // waypoints per action before re-timing
  double retime_step = 0.3;   // max per-step displacement after re-timing
  int lidar_rays = 39;

  double lidar_max_range() const { return workspace * std::sqrt(2.0); }

  KeyValueFile to_kv() const {
    KeyValueFile kv;
    kv.set_num("domain.n_objects", n_objects);
    kv.set_num("domain.n_targets", n_targets);
    kv.set_num("domain.workspace", workspace);
    kv.set_num("domain.robot_radius", robot_radius);
    kv.set_num("domain.object_radius", object_radius);
    kv.set_num("domain.target_radius", target_radius);
    kv.set_num("domain.v_max", v_max);
    kv.set_num("domain.omega_max", omega_max);
    kv.set_num("domain.sim_dt", sim_dt);
    kv.set_num("domain.control_dt", control_dt);
    kv.set_num("domain.grasp_tol", grasp_tol);
    kv.set_num("domain.place_tol", place_tol);
    kv.set_num("domain.retreat_dist", retreat_dist);
    kv.set_num("domain.d_safe", d_safe);
    kv.set_num("domain.horizon", horizon);
    kv.set_num("domain.retime_step", retime_step);
    kv.set_num("domain.lidar_rays", lidar_rays);
    return kv;
  }

  static DomainConfig from_kv(const KeyValueFile& kv) {
    DomainConfig d;
    d.n_objects = static_cast<int>(kv.get_int("domain.n_objects", d.n_objects));
    d.n_targets = static_cast<int>(kv.get_int("domain.n_targets", d.n_targets));
    d.workspace = kv.get_num("domain.workspace", d.workspace);
    d.robot_radius = kv.get_num("domain.robot_radius", d.robot_radius);
    d.object_radius = kv.get_num("domain.object_radius", d.object_radius);
    d.target_radius = kv.get_num("domain.target_radius", d.target_radius);
    d.v_max = kv.get_num("domain.v_max", d.v_max);
    d.omega_max = kv.get_num("domain.omega_max", d.omega_max);
    d.sim_dt = kv.get_num("domain.sim_dt", d.sim_dt);
    d.control_dt = kv.get_num("domain.control_dt", d.control_dt);
    d.grasp_tol = kv.get_num("domain.grasp_tol", d.grasp_tol);
    d.place_tol = kv.get_num("domain.place_tol", d.place_tol);
    d.retreat_dist = kv.get_num("domain.retreat_dist", d.retreat_dist);
    d.d_safe = kv.get_num("domain.d_safe", d.d_safe);
    d.horizon = static_cast<int>(kv.get_int("domain.horizon", d.horizon));
    d.retime_step = kv.get_num("domain.retime_step", d.retime_step);
    d.lidar_rays = static_cast<int>(kv.get_int("domain.lidar_rays", d.lidar_rays));
    if (d.n_objects < 0 || d.n_targets < 0)
      throw std::runtime_error("entity counts must be nonnegative");
    if (d.horizon < 2) throw std::runtime_error("horizon must be >= 2");
    return d;
  }
};

enum class FeedbackMode { kNone, kTaskOnly, kMotionOnly, kTamp };

inline const char* feedback_mode_name(FeedbackMode m) {
  switch (m) {
    case FeedbackMode::kNone: return "no-feedback";
    case FeedbackMode::kTaskOnly: return "task-feedback";
    case FeedbackMode::kMotionOnly: return "motion-feedback";
    case FeedbackMode::kTamp: return "tamp-feedback";
  }
  return "?";
}

inline FeedbackMode feedback_mode_from(const std::string& s) {
  if (s == "no-feedback" || s == "none") return FeedbackMode::kNone;
  if (s == "task-feedback" || s == "task") return FeedbackMode::kTaskOnly;
  if (s == "motion-feedback" || s == "motion") return FeedbackMode::kMotionOnly;
  if (s == "tamp-feedback" || s == "tamp") return FeedbackMode::kTamp;
  throw std::runtime_error("unknown feedback mode: " + s);
}

struct RunConfig {
  DomainConfig domain;
  int goal_objects = 1;  // objects per sampled problem

  FeedbackMode feedback = FeedbackMode::kTamp;
  bool train_flat = false;  // also train the flat baseline on the same data

  int task_workers = 2;
  int motion_workers = 6;
  int exploration_workers = 2;
  bool serial = false;

  std::uint64_t seed = 0;
  double wall_time_s = 60.0;   // concurrent-mode budget
  long serial_iters = 2000;    // serial-mode budget (deterministic)
  long max_plans = 0;          // stop after this many refined plans (0 = off)

  double p_fresh = 0.3;        // fresh-sample probability in the task node
  long warmup_plans = 200;     // successful plans before motion feedback
  double dev_weight = 1.0;

  double temp0 = 1.0;          // exploration temperature lambda_0
  double temp_growth = 1.5;    // eta: widen sampling after invalid samples
  int explore_max_iter = 10;

  long dataset_capacity = 200000;
  long queue_capacity = 4096;

  int batch_size = 64;
  double task_lr = 1e-3;
  double task_l2 = 4e-4;
  double motion_lr = 2e-4;
  double motion_l2 = 1e-4;
  long snapshot_every = 200;   // trainer steps between published snapshots

  long eval_every = 2000;      // serial iterations / trainer steps per eval
  int eval_episodes = 20;
  std::string out_dir = "out";

  KeyValueFile to_kv() const {
    KeyValueFile kv = domain.to_kv();
    kv.set_num("run.goal_objects", goal_objects);
    kv.set("run.feedback", feedback_mode_name(feedback));
    kv.set("run.train_flat", train_flat ? "true" : "false");
    kv.set_num("run.task_workers", task_workers);
    kv.set_num("run.motion_workers", motion_workers);
    kv.set_num("run.exploration_workers", exploration_workers);
    kv.set("run.serial", serial ? "true" : "false");
    kv.set_num("run.seed", static_cast<double>(seed));
    kv.set_num("run.wall_time_s", wall_time_s);
    kv.set_num("run.serial_iters", serial_iters);
    kv.set_num("run.max_plans", max_plans);
    kv.set_num("run.p_fresh", p_fresh);
    kv.set_num("run.warmup_plans", warmup_plans);
    kv.set_num("run.dev_weight", dev_weight);
    kv.set_num("run.temp0", temp0);
    kv.set_num("run.temp_growth", temp_growth);
    kv.set_num("run.explore_max_iter", explore_max_iter);
    kv.set_num("run.dataset_capacity", dataset_capacity);
    kv.set_num("run.queue_capacity", queue_capacity);
    kv.set_num("run.batch_size", batch_size);
    kv.set_num("run.task_lr", task_lr);
    kv.set_num("run.task_l2", task_l2);
    kv.set_num("run.motion_lr", motion_lr);
    kv.set_num("run.motion_l2", motion_l2);
    kv.set_num("run.snapshot_every", snapshot_every);
    kv.set_num("run.eval_every", eval_every);
    kv.set_num("run.eval_episodes", eval_episodes);
    kv.set("run.out_dir", out_dir);
    return kv;
  }

  static RunConfig from_kv(const KeyValueFile& kv) {
    RunConfig c;
    c.domain = DomainConfig::from_kv(kv);
    c.goal_objects = static_cast<int>(kv.get_int("run.goal_objects", c.goal_objects));
    c.feedback = feedback_mode_from(kv.get_str("run.feedback", "tamp-feedback"));
    c.train_flat = kv.get_bool("run.train_flat", c.train_flat);
    c.task_workers = static_cast<int>(kv.get_int("run.task_workers", c.task_workers));
    c.motion_workers = static_cast<int>(kv.get_int("run.motion_workers", c.motion_workers));
    c.exploration_workers =
        static_cast<int>(kv.get_int("run.exploration_workers", c.exploration_workers));
    c.serial = kv.get_bool("run.serial", c.serial);
    c.seed = static_cast<std::uint64_t>(kv.get_int("run.seed", 0));
    c.wall_time_s = kv.get_num("run.wall_time_s", c.wall_time_s);
    c.serial_iters = kv.get_int("run.serial_iters", c.serial_iters);
    c.max_plans = kv.get_int("run.max_plans", c.max_plans);
    c.p_fresh = kv.get_num("run.p_fresh", c.p_fresh);
    c.warmup_plans = kv.get_int("run.warmup_plans", c.warmup_plans);
    c.dev_weight = kv.get_num("run.dev_weight", c.dev_weight);
    c.temp0 = kv.get_num("run.temp0", c.temp0);
    c.temp_growth = kv.get_num("run.temp_growth", c.temp_growth);
    c.explore_max_iter = static_cast<int>(kv.get_int("run.explore_max_iter", c.explore_max_iter));
    c.dataset_capacity = kv.get_int("run.dataset_capacity", c.dataset_capacity);
    c.queue_capacity = kv.get_int("run.queue_capacity", c.queue_capacity);
    c.batch_size = static_cast<int>(kv.get_int("run.batch_size", c.batch_size));
    c.task_lr = kv.get_num("run.task_lr", c.task_lr);
    c.task_l2 = kv.get_num("run.task_l2", c.task_l2);
    c.motion_lr = kv.get_num("run.motion_lr", c.motion_lr);
    c.motion_l2 = kv.get_num("run.motion_l2", c.motion_l2);
    c.snapshot_every = kv.get_int("run.snapshot_every", c.snapshot_every);
    c.eval_every = kv.get_int("run.eval_every", c.eval_every);
    c.eval_episodes = static_cast<int>(kv.get_int("run.eval_episodes", c.eval_episodes));
    c.out_dir = kv.get_str("run.out_dir", c.out_dir);
    if (c.goal_objects < 1 || c.goal_objects > c.domain.n_objects)
      throw std::runtime_error("run.goal_objects out of range");
    return c;
  }
};

}  // namespace tamp2d

#endif  // TAMP2D_CONFIG_HPP_
