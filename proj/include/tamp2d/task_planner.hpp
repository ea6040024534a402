#ifndef TAMP2D_TASK_PLANNER_HPP_
#define TAMP2D_TASK_PLANNER_HPP_

#include <limits>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "tamp2d/domain.hpp"
#include "tamp2d/problems.hpp"

namespace tamp2d {

constexpr int kHeuristicInfinity = std::numeric_limits<int>::max();

struct TaskPlan {
  std::vector<GroundAction> actions;
};

struct PlanResult {
  bool success = false;
  TaskPlan plan;
  long expansions = 0;
  long generated = 0;

  std::vector<std::string> to_lines() const {
    std::vector<std::string> lines;
    for (const GroundAction& a : plan.actions) lines.push_back(a.name());
    return lines;
  }
};

inline bool subset_of(const std::vector<Fluent>& sub,
                      const std::set<Fluent>& sup) {
  for (const Fluent& f : sub)
    if (!sup.count(f)) return false;
  return true;
}

// Size of a relaxed plan ignoring delete effects (FF-style: build the
// relaxed planning graph, then extract achievers backward). Returns 0 iff
// the goal is already satisfied and kHeuristicInfinity when the goal is
// unreachable even in the relaxation.
inline int relaxed_plan_heuristic(const std::set<Fluent>& phi,
                                  const Goal& goal,
                                  const std::vector<GroundAction>& actions,
                                  const DomainConfig& cfg) {
  if (subset_of(goal.conjuncts, phi)) return 0;

  // Grounded conditions are cheap but recomputed often; build once.
  std::vector<GroundedConditions> conds;
  conds.reserve(actions.size());
  for (const GroundAction& a : actions) conds.push_back(ground_conditions(a, cfg));

  std::set<Fluent> facts = phi;
  // First achiever of each fact discovered after layer 0.
  std::map<Fluent, int> achiever;
  std::vector<char> applied(actions.size(), 0);

  bool goal_reached = false;
  while (!goal_reached) {
    std::vector<Fluent> new_facts;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (applied[i] || !subset_of(conds[i].pre, facts)) continue;
      applied[i] = 1;
      for (const Fluent& f : conds[i].add)
        if (!facts.count(f) && !achiever.count(f)) {
          achiever[f] = static_cast<int>(i);
          new_facts.push_back(f);
        }
    }
    if (new_facts.empty()) break;
    for (const Fluent& f : new_facts) facts.insert(f);
    goal_reached = subset_of(goal.conjuncts, facts);
  }
  if (!subset_of(goal.conjuncts, facts)) return kHeuristicInfinity;

  // Backward extraction: collect achievers for goal facts and, recursively,
  // for the achievers' preconditions that were not initially true.
  std::set<int> selected;
  std::set<Fluent> open(goal.conjuncts.begin(), goal.conjuncts.end());
  std::set<Fluent> closed;
  while (!open.empty()) {
    const Fluent f = *open.begin();
    open.erase(open.begin());
    if (closed.count(f) || phi.count(f)) continue;
    closed.insert(f);
    const int a = achiever.at(f);
    if (selected.insert(a).second)
      for (const Fluent& p : conds[a].pre)
        if (!phi.count(p)) open.insert(p);
  }
  return static_cast<int>(selected.size());
}

// Greedy best-first search over logical states. Failure fluents block
// their action whenever the current search state's fingerprint matches the
// failure's scope. Deterministic: ties broken by insertion order, actions
// tried in ground_all order.
inline PlanResult plan(const LogicalState& phi0, const Goal& goal,
                       const std::vector<GroundAction>& actions,
                       const DomainConfig& cfg, long node_budget = 50000) {
  PlanResult result;

  std::vector<GroundedConditions> conds;
  conds.reserve(actions.size());
  for (const GroundAction& a : actions) conds.push_back(ground_conditions(a, cfg));

  struct Node {
    std::set<Fluent> state;
    std::vector<int> path;  // action indices from the root
  };
  std::vector<Node> nodes;
  nodes.push_back({phi0.fluents, {}});

  // (h, insertion counter) -> node index
  using Key = std::pair<int, long>;
  std::priority_queue<std::pair<Key, int>, std::vector<std::pair<Key, int>>,
                      std::greater<>>
      open;
  const int h0 = relaxed_plan_heuristic(phi0.fluents, goal, actions, cfg);
  if (h0 == kHeuristicInfinity) return result;
  open.push({{h0, 0}, 0});
  std::set<std::set<Fluent>> seen;
  seen.insert(phi0.fluents);
  long counter = 0;

  while (!open.empty() && result.expansions < node_budget) {
    const int idx = open.top().second;
    open.pop();
    const Node node = nodes[idx];  // copy: nodes may reallocate below
    if (subset_of(goal.conjuncts, node.state)) {
      result.success = true;
      for (int ai : node.path) result.plan.actions.push_back(actions[ai]);
      return result;
    }
    ++result.expansions;
    const std::uint64_t fp = fingerprint(node.state);
    for (std::size_t i = 0; i < actions.size(); ++i) {
      bool blocked = false;
      for (const FailureFluent& e : phi0.failures)
        if (e.blocked == actions[i] && e.scope == fp) {
          blocked = true;
          break;
        }
      if (blocked || !subset_of(conds[i].pre, node.state)) continue;
      std::set<Fluent> next = node.state;
      for (const Fluent& f : conds[i].del) next.erase(f);
      for (const Fluent& f : conds[i].add) next.insert(f);
      if (!seen.insert(next).second) continue;
      const int h = relaxed_plan_heuristic(next, goal, actions, cfg);
      if (h == kHeuristicInfinity) continue;
      std::vector<int> path = node.path;
      path.push_back(static_cast<int>(i));
      nodes.push_back({std::move(next), std::move(path)});
      ++result.generated;
      open.push({{h, ++counter}, static_cast<int>(nodes.size() - 1)});
    }
  }
  return result;
}

// Symbolic execution check: pre satisfied at every step under add/delete
// rewriting and goal satisfied at the end.
inline bool symbolically_valid(const LogicalState& phi0,
                               const std::vector<GroundAction>& plan_actions,
                               const Goal& goal, const DomainConfig& cfg) {
  std::set<Fluent> s = phi0.fluents;
  for (const GroundAction& a : plan_actions) {
    const GroundedConditions c = ground_conditions(a, cfg);
    if (!subset_of(c.pre, s)) return false;
    for (const Fluent& f : c.del) s.erase(f);
    for (const Fluent& f : c.add) s.insert(f);
  }
  return subset_of(goal.conjuncts, s);
}

}  // namespace tamp2d

#endif  // TAMP2D_TASK_PLANNER_HPP_
