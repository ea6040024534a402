#include "catch_amalgamated.hpp"

#include <set>

#include "tamp2d/domain.hpp"
#include "tamp2d/problems.hpp"

using namespace tamp2d;

namespace {

DomainConfig sized(int n_obj, int n_targ) {
  DomainConfig cfg;
  cfg.n_objects = n_obj;
  cfg.n_targets = n_targ;
  return cfg;
}

}  // namespace

TEST_CASE("grounding count matches exhaustive enumeration for all sizes") {
  for (int n_obj = 1; n_obj <= 5; ++n_obj) {
    for (int n_targ = 1; n_targ <= 8; ++n_targ) {
      const DomainConfig cfg = sized(n_obj, n_targ);
      const auto actions = ground_all(cfg);
      // One grasp per object plus (transfer, place) per object-target pair.
      CHECK(static_cast<int>(actions.size()) == n_obj + 2 * n_obj * n_targ);
      std::set<GroundAction> unique(actions.begin(), actions.end());
      CHECK(unique.size() == actions.size());
    }
  }
  CHECK(ground_all(sized(5, 8)).size() == 85);
}

TEST_CASE("grounding order is deterministic: schema then lexicographic") {
  const auto actions = ground_all(sized(2, 2));
  REQUIRE(actions.size() == 10);
  CHECK(actions[0].name() == "MoveToAndGrasp(o0)");
  CHECK(actions[1].name() == "MoveToAndGrasp(o1)");
  CHECK(actions[2].name() == "Transfer(o0,t0)");
  CHECK(actions[5].name() == "Transfer(o1,t1)");
  CHECK(actions[6].name() == "PlaceAndRetreat(o0,t0)");
  CHECK(actions[9].name() == "PlaceAndRetreat(o1,t1)");
}

TEST_CASE("ground conditions encode the pick-place schema structure") {
  const DomainConfig cfg = sized(3, 4);
  const GroundedConditions grasp =
      ground_conditions({SchemaType::kMoveToAndGrasp, 1, -1}, cfg);
  CHECK(grasp.pre == std::vector<Fluent>{hand_empty()});
  CHECK(std::count(grasp.add.begin(), grasp.add.end(), holding(1)) == 1);
  CHECK(std::count(grasp.del.begin(), grasp.del.end(), hand_empty()) == 1);

  const GroundedConditions transfer =
      ground_conditions({SchemaType::kTransfer, 0, 2}, cfg);
  CHECK(transfer.pre == std::vector<Fluent>{holding(0)});
  CHECK(std::count(transfer.add.begin(), transfer.add.end(),
                   gripper_near_target(2)) == 1);

  const GroundedConditions place =
      ground_conditions({SchemaType::kPlaceAndRetreat, 2, 3}, cfg);
  REQUIRE(place.pre.size() == 2);
  CHECK(std::count(place.pre.begin(), place.pre.end(), holding(2)) == 1);
  CHECK(std::count(place.pre.begin(), place.pre.end(),
                   gripper_near_target(3)) == 1);
  CHECK(std::count(place.add.begin(), place.add.end(), at(2, 3)) == 1);
  CHECK(std::count(place.add.begin(), place.add.end(), hand_empty()) == 1);
  CHECK(std::count(place.del.begin(), place.del.end(), holding(2)) == 1);
}

TEST_CASE("holds evaluates geometric predicates against tolerances") {
  const DomainConfig cfg = sized(2, 2);
  WorldState x = make_world(cfg);
  x.objects = {{{2.0, 2.0}, cfg.object_radius}, {{8.0, 8.0}, cfg.object_radius}};
  x.targets = {{{2.0, 2.2}, cfg.target_radius}, {{5.0, 5.0}, cfg.target_radius}};

  // At: object center within object radius of target center.
  CHECK(holds(at(0, 0), x, cfg));   // 0.2 <= 0.3
  CHECK(!holds(at(0, 1), x, cfg));
  CHECK(!holds(at(1, 0), x, cfg));

  CHECK(holds(hand_empty(), x, cfg));
  CHECK(!holds(holding(0), x, cfg));
  x.attached = 0;
  CHECK(holds(holding(0), x, cfg));
  CHECK(!holds(holding(1), x, cfg));
  CHECK(!holds(hand_empty(), x, cfg));
  x.attached.reset();

  x.robot_pos = {2.0, 2.0 + 0.9 * cfg.grasp_tol};
  CHECK(holds(gripper_near(0), x, cfg));
  x.robot_pos = {2.0, 2.0 + cfg.grasp_tol + 1e-6};
  CHECK(!holds(gripper_near(0), x, cfg));

  x.robot_pos = {5.0, 5.0 + 0.9 * cfg.place_tol};
  CHECK(holds(gripper_near_target(1), x, cfg));
  CHECK(holds(in_free_space(), x, cfg));
}

TEST_CASE("abstract_state is exact and idempotent") {
  const DomainConfig cfg = sized(2, 2);
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    PlanningProblem p = sample_problem(rng, 2, cfg);
    const LogicalState phi = abstract_state(p.x0, cfg);
    // Exactness: membership iff the predicate holds.
    for (int o = 0; o < cfg.n_objects; ++o) {
      CHECK(phi.contains(gripper_near(o)) == holds(gripper_near(o), p.x0, cfg));
      for (int t = 0; t < cfg.n_targets; ++t)
        CHECK(phi.contains(at(o, t)) == holds(at(o, t), p.x0, cfg));
    }
    CHECK(phi.contains(hand_empty()));
    // Idempotence under re-abstraction.
    CHECK(abstract_state(p.x0, cfg).fluents == phi.fluents);
  }
}

TEST_CASE("fingerprint is order independent and content sensitive") {
  std::set<Fluent> a{hand_empty(), at(0, 1), gripper_near(2)};
  std::set<Fluent> b{gripper_near(2), hand_empty(), at(0, 1)};
  CHECK(fingerprint(a) == fingerprint(b));

  std::set<Fluent> c{hand_empty(), at(1, 0), gripper_near(2)};
  CHECK(fingerprint(a) != fingerprint(c));
  CHECK(fingerprint({}) != fingerprint(a));

  std::set<Fluent> d{at(0, 1)};
  std::set<Fluent> e{at(1, 0)};
  CHECK(fingerprint(d) != fingerprint(e));  // argument order matters
}

TEST_CASE("goal satisfaction matches conjunct-wise holds") {
  const DomainConfig cfg = sized(2, 2);
  WorldState x = make_world(cfg);
  x.objects = {{{2.0, 2.0}, cfg.object_radius}, {{8.0, 8.0}, cfg.object_radius}};
  x.targets = {{{2.0, 2.1}, cfg.target_radius}, {{8.0, 8.1}, cfg.target_radius}};
  Goal g{{at(0, 0), at(1, 1)}};
  CHECK(goal_satisfied(x, g, cfg));
  x.objects[1].pos = {4.0, 4.0};
  CHECK(!goal_satisfied(x, g, cfg));
}

TEST_CASE("sampled problems are well formed") {
  const DomainConfig cfg = sized(5, 8);
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    PlanningProblem p = sample_problem(rng, 5, cfg);
    REQUIRE(p.x0.objects.size() == 5);
    REQUIRE(p.x0.targets.size() == 8);
    REQUIRE(p.goal.conjuncts.size() == 5);
    // Distinct goal objects and targets.
    std::set<int> objs, targs;
    for (const Fluent& f : p.goal.conjuncts) {
      objs.insert(f.a);
      targs.insert(f.b);
    }
    CHECK(objs.size() == 5);
    CHECK(targs.size() == 5);
    // Nothing starts in penetration and no goal starts satisfied.
    CHECK(wall_penetration(p.x0) <= 0.0);
    for (const Fluent& f : p.goal.conjuncts) CHECK(!holds(f, p.x0, cfg));
    // Objects pairwise separated.
    for (std::size_t i = 0; i < p.x0.objects.size(); ++i)
      for (std::size_t j = i + 1; j < p.x0.objects.size(); ++j)
        CHECK((p.x0.objects[i].pos - p.x0.objects[j].pos).norm() >=
              2 * cfg.object_radius - 1e-12);
    CHECK(p.phi0.fluents == abstract_state(p.x0, cfg).fluents);
  }
}
