#ifndef TAMP2D_REPLAY_HPP_
#define TAMP2D_REPLAY_HPP_

#include <cinttypes>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tamp2d/policy.hpp"

namespace tamp2d {

// Line-delimited rollout log. Doubles are written as C hex floats so a
// replayed run reproduces every state bit-exactly.
//
//   rollout v1
//   dt <dt>
//   robot <x> <y> <theta> <radius> <aperture> <attached|-1>
//   object <x> <y> <r>          (one per object)
//   target <x> <y> <r>
//   wall <ax> <ay> <bx> <by>
//   control <t> <vx> <vy> <omega> <grip> <action-name|->
//   event <t> <name>

namespace detail {
inline std::string hexf(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}
inline double parse_hexf(const std::string& s) {
  return std::strtod(s.c_str(), nullptr);
}
}  // namespace detail

struct RolloutLog {
  WorldState x0;
  double dt = 0.0;
  std::vector<Control> controls;
  std::vector<std::string> action_names;  // parallel to controls; "-" = none
  std::vector<std::pair<int, std::string>> events;
};

inline const char* monitor_event_name(MonitorEvent e) {
  switch (e) {
    case MonitorEvent::kStarted: return "started";
    case MonitorEvent::kRejectedPre: return "rejected-pre";
    case MonitorEvent::kPrematureSwitch: return "negative-premature";
    case MonitorEvent::kDelayedSwitch: return "negative-delayed";
    case MonitorEvent::kNoValidAction: return "no-valid-action";
  }
  return "?";
}

inline RolloutLog log_from_result(const WorldState& x0,
                                  const RolloutResult& r, double dt) {
  RolloutLog log;
  log.x0 = x0;
  log.dt = dt;
  for (const RolloutStep& s : r.steps) {
    log.controls.push_back(s.control);
    log.action_names.push_back(s.action.obj >= 0 ? s.action.name() : "-");
  }
  for (std::size_t i = 0; i < r.events.size(); ++i)
    log.events.emplace_back(static_cast<int>(i),
                            monitor_event_name(r.events[i]));
  return log;
}

inline void write_rollout(std::ostream& out, const RolloutLog& log) {
  using detail::hexf;
  out << "rollout v1\n";
  out << "dt " << hexf(log.dt) << "\n";
  const WorldState& x = log.x0;
  out << "robot " << hexf(x.robot_pos.x) << " " << hexf(x.robot_pos.y) << " "
      << hexf(x.robot_theta) << " " << hexf(x.robot_radius) << " "
      << hexf(x.aperture) << " " << (x.attached ? *x.attached : -1) << "\n";
  for (const Disk& d : x.objects)
    out << "object " << hexf(d.pos.x) << " " << hexf(d.pos.y) << " "
        << hexf(d.radius) << "\n";
  for (const Disk& d : x.targets)
    out << "target " << hexf(d.pos.x) << " " << hexf(d.pos.y) << " "
        << hexf(d.radius) << "\n";
  for (const Segment& s : x.walls)
    out << "wall " << hexf(s.a.x) << " " << hexf(s.a.y) << " " << hexf(s.b.x)
        << " " << hexf(s.b.y) << "\n";
  for (std::size_t t = 0; t < log.controls.size(); ++t) {
    const Control& u = log.controls[t];
    out << "control " << t << " " << hexf(u.vx) << " " << hexf(u.vy) << " "
        << hexf(u.omega) << " " << hexf(u.grip) << " " << log.action_names[t]
        << "\n";
  }
  for (const auto& [t, name] : log.events)
    out << "event " << t << " " << name << "\n";
}

inline RolloutLog read_rollout(std::istream& in) {
  using detail::parse_hexf;
  RolloutLog log;
  std::string line;
  if (!std::getline(in, line) || line != "rollout v1")
    throw std::runtime_error("not a rollout log");
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    std::string a, b, c, d, e, f;
    if (tag == "dt") {
      ss >> a;
      log.dt = parse_hexf(a);
    } else if (tag == "robot") {
      ss >> a >> b >> c >> d >> e >> f;
      log.x0.robot_pos = {parse_hexf(a), parse_hexf(b)};
      log.x0.robot_theta = parse_hexf(c);
      log.x0.robot_radius = parse_hexf(d);
      log.x0.aperture = parse_hexf(e);
      const int att = std::stoi(f);
      if (att >= 0) log.x0.attached = att;
    } else if (tag == "object" || tag == "target") {
      ss >> a >> b >> c;
      Disk disk{{parse_hexf(a), parse_hexf(b)}, parse_hexf(c)};
      (tag == "object" ? log.x0.objects : log.x0.targets).push_back(disk);
    } else if (tag == "wall") {
      ss >> a >> b >> c >> d;
      log.x0.walls.push_back(
          {{parse_hexf(a), parse_hexf(b)}, {parse_hexf(c), parse_hexf(d)}});
    } else if (tag == "control") {
      int t;
      ss >> t >> a >> b >> c >> d >> e;
      log.controls.push_back(
          {parse_hexf(a), parse_hexf(b), parse_hexf(c), parse_hexf(d)});
      log.action_names.push_back(e);
    } else if (tag == "event") {
      int t;
      ss >> t >> a;
      log.events.emplace_back(t, a);
    }
  }
  return log;
}

inline WorldState replay(const RolloutLog& log, const DomainConfig& cfg) {
  WorldState x = log.x0;
  for (const Control& u : log.controls) x = step(x, u, cfg, log.dt);
  return x;
}

}  // namespace tamp2d

#endif  // TAMP2D_REPLAY_HPP_
