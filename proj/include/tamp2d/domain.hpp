#ifndef TAMP2D_DOMAIN_HPP_
#define TAMP2D_DOMAIN_HPP_

#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tamp2d/world.hpp"

namespace tamp2d {

enum class Predicate : std::uint8_t {
  kAt,                 // At(obj, targ)
  kHolding,            // Holding(obj)
  kHandEmpty,          // HandEmpty
  kGripperNear,        // GripperNear(obj)
  kGripperNearTarget,  // GripperNearTarget(targ)
  kInFreeSpace,        // InFreeSpace (robot)
};

// Ground fluent. Unused argument slots are -1; equality is structural.
struct Fluent {
  Predicate pred;
  int a = -1;  // object id, where applicable
  int b = -1;  // target id, where applicable

  auto operator<=>(const Fluent&) const = default;
};

inline Fluent at(int obj, int targ) { return {Predicate::kAt, obj, targ}; }
inline Fluent holding(int obj) { return {Predicate::kHolding, obj}; }
inline Fluent hand_empty() { return {Predicate::kHandEmpty}; }
inline Fluent gripper_near(int obj) { return {Predicate::kGripperNear, obj}; }
inline Fluent gripper_near_target(int targ) {
  return {Predicate::kGripperNearTarget, -1, targ};
}
inline Fluent in_free_space() { return {Predicate::kInFreeSpace}; }

inline std::string fluent_name(const Fluent& f) {
  switch (f.pred) {
    case Predicate::kAt:
      return "At(o" + std::to_string(f.a) + ",t" + std::to_string(f.b) + ")";
    case Predicate::kHolding:
      return "Holding(o" + std::to_string(f.a) + ")";
    case Predicate::kHandEmpty:
      return "HandEmpty";
    case Predicate::kGripperNear:
      return "GripperNear(o" + std::to_string(f.a) + ")";
    case Predicate::kGripperNearTarget:
      return "GripperNearTarget(t" + std::to_string(f.b) + ")";
    case Predicate::kInFreeSpace:
      return "InFreeSpace";
  }
  return "?";
}

enum class SchemaType : std::uint8_t {
  kMoveToAndGrasp = 0,  // (obj)
  kTransfer = 1,        // (obj, targ)
  kPlaceAndRetreat = 2, // (obj, targ)
};

constexpr int kNumSchemas = 3;

inline const char* schema_name(SchemaType t) {
  switch (t) {
    case SchemaType::kMoveToAndGrasp: return "MoveToAndGrasp";
    case SchemaType::kTransfer: return "Transfer";
    case SchemaType::kPlaceAndRetreat: return "PlaceAndRetreat";
  }
  return "?";
}

inline bool schema_has_target(SchemaType t) {
  return t != SchemaType::kMoveToAndGrasp;
}

struct GroundAction {
  SchemaType schema = SchemaType::kMoveToAndGrasp;
  int obj = -1;
  int targ = -1;  // -1 for MoveToAndGrasp

  auto operator<=>(const GroundAction&) const = default;

  std::string name() const {
    std::string s = std::string(schema_name(schema)) + "(o" + std::to_string(obj);
    if (schema_has_target(schema)) s += ",t" + std::to_string(targ);
    return s + ")";
  }
};

// Symbolic pre / add / delete structure of one ground action, used by the
// task planner. Delete lists are computed against the domain's entity
// counts so abstraction stays closed (no stale fluents).
struct GroundedConditions {
  std::vector<Fluent> pre;
  std::vector<Fluent> add;
  std::vector<Fluent> del;
};

inline GroundedConditions ground_conditions(const GroundAction& a,
                                            const DomainConfig& cfg) {
  GroundedConditions c;
  switch (a.schema) {
    case SchemaType::kMoveToAndGrasp:
      c.pre = {hand_empty()};
      c.add = {holding(a.obj), gripper_near(a.obj)};
      c.del = {hand_empty()};
      for (int t = 0; t < cfg.n_targets; ++t) c.del.push_back(at(a.obj, t));
      for (int o = 0; o < cfg.n_objects; ++o)
        if (o != a.obj) c.del.push_back(gripper_near(o));
      for (int t = 0; t < cfg.n_targets; ++t)
        c.del.push_back(gripper_near_target(t));
      break;
    case SchemaType::kTransfer:
      c.pre = {holding(a.obj)};
      c.add = {gripper_near_target(a.targ)};
      for (int t = 0; t < cfg.n_targets; ++t)
        if (t != a.targ) c.del.push_back(gripper_near_target(t));
      for (int o = 0; o < cfg.n_objects; ++o)
        if (o != a.obj) c.del.push_back(gripper_near(o));
      break;
    case SchemaType::kPlaceAndRetreat:
      c.pre = {holding(a.obj), gripper_near_target(a.targ)};
      c.add = {at(a.obj, a.targ), hand_empty()};
      c.del = {holding(a.obj), gripper_near(a.obj)};
      for (int t = 0; t < cfg.n_targets; ++t)
        c.del.push_back(gripper_near_target(t));
      break;
  }
  return c;
}

// Every type-correct binding of the three schemas, in deterministic order:
// schema order, then lexicographic (obj, targ).
inline std::vector<GroundAction> ground_all(const DomainConfig& cfg) {
  std::vector<GroundAction> out;
  for (int o = 0; o < cfg.n_objects; ++o)
    out.push_back({SchemaType::kMoveToAndGrasp, o, -1});
  for (int o = 0; o < cfg.n_objects; ++o)
    for (int t = 0; t < cfg.n_targets; ++t)
      out.push_back({SchemaType::kTransfer, o, t});
  for (int o = 0; o < cfg.n_objects; ++o)
    for (int t = 0; t < cfg.n_targets; ++t)
      out.push_back({SchemaType::kPlaceAndRetreat, o, t});
  return out;
}

inline bool holds(const Fluent& f, const WorldState& x,
                  const DomainConfig& cfg) {
  switch (f.pred) {
    case Predicate::kAt:
      return (x.objects.at(f.a).pos - x.targets.at(f.b).pos).norm() <=
             x.objects.at(f.a).radius;
    case Predicate::kHolding:
      return x.attached && *x.attached == f.a;
    case Predicate::kHandEmpty:
      return !x.attached;
    case Predicate::kGripperNear:
      return (x.objects.at(f.a).pos - x.gripper()).norm() <= cfg.grasp_tol;
    case Predicate::kGripperNearTarget:
      return (x.targets.at(f.b).pos - x.gripper()).norm() <= cfg.place_tol;
    case Predicate::kInFreeSpace:
      return wall_penetration(x) <= 0.0;
  }
  throw std::invalid_argument("unknown predicate");
}

// Constraint-failure reasons reported by refinement, consumed symbolically
// by the task planner as blocked actions.
enum class FailureReason : std::uint8_t {
  kCollision,
  kUnreachable,
  kGraspInfeasible,
};

inline const char* failure_reason_name(FailureReason r) {
  switch (r) {
    case FailureReason::kCollision: return "collision";
    case FailureReason::kUnreachable: return "unreachable";
    case FailureReason::kGraspInfeasible: return "grasp-infeasible";
  }
  return "?";
}

struct FailureFluent {
  GroundAction blocked;
  FailureReason reason = FailureReason::kCollision;
  std::uint64_t scope = 0;  // fingerprint of the logical state at failure

  auto operator<=>(const FailureFluent&) const = default;
};

struct LogicalState {
  std::set<Fluent> fluents;
  std::vector<FailureFluent> failures;

  bool contains(const Fluent& f) const { return fluents.count(f) > 0; }
};

// Order-independent fingerprint of the regular fluent set (FNV-1a over the
// canonical sorted encoding).
inline std::uint64_t fingerprint(const std::set<Fluent>& fluents) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  for (const Fluent& f : fluents) {
    mix(static_cast<std::uint64_t>(f.pred) + 1);
    mix(static_cast<std::uint64_t>(f.a + 2));
    mix(static_cast<std::uint64_t>(f.b + 2));
  }
  return h;
}

// Exact logical abstraction of a world state: the set of fluents whose
// geometric predicate evaluates true. Pure and idempotent.
inline LogicalState abstract_state(const WorldState& x,
                                   const DomainConfig& cfg) {
  LogicalState phi;
  const int n_obj = static_cast<int>(x.objects.size());
  const int n_targ = static_cast<int>(x.targets.size());
  for (int o = 0; o < n_obj; ++o) {
    for (int t = 0; t < n_targ; ++t)
      if (holds(at(o, t), x, cfg)) phi.fluents.insert(at(o, t));
    if (holds(holding(o), x, cfg)) phi.fluents.insert(holding(o));
    if (holds(gripper_near(o), x, cfg)) phi.fluents.insert(gripper_near(o));
  }
  for (int t = 0; t < n_targ; ++t)
    if (holds(gripper_near_target(t), x, cfg))
      phi.fluents.insert(gripper_near_target(t));
  if (holds(hand_empty(), x, cfg)) phi.fluents.insert(hand_empty());
  if (holds(in_free_space(), x, cfg)) phi.fluents.insert(in_free_space());
  return phi;
}

struct Goal {
  std::vector<Fluent> conjuncts;  // At(obj, targ) conjuncts
};

inline bool goal_satisfied(const WorldState& x, const Goal& g,
                           const DomainConfig& cfg) {
  for (const Fluent& f : g.conjuncts)
    if (!holds(f, x, cfg)) return false;
  return true;
}

}  // namespace tamp2d

#endif  // TAMP2D_DOMAIN_HPP_
