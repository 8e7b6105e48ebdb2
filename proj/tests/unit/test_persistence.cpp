#include "helpers.hpp"
#include "hetform/persistence.hpp"

using namespace hetform;
using testing::error_kind_of;

TEST_SUITE("persistence") {

TEST_CASE("active edges") {
  const auto s = testing::load("six_agent.json");
  const auto p = *s.desired_positions;
  CHECK(active_edges(p, s.graph).size() == 10);

  Configuration q = p;
  q.set(2, p[2] + Vec2(1, 0));
  const auto act = active_edges(q, s.graph);
  CHECK(act.size() < 10);

  CHECK(active_edges(Configuration{{0, 0}, {1, 0}}, TwoLayerGraph(2, {})).empty());
}

TEST_CASE("fitting positions") {
  TwoLayerGraph free(2, {DirectedEdge::make_distance(0, 1, 2, 1)});
  const Configuration off{{0, 0}, {2.5, 0}};
  CHECK(is_fitting_position(off, free, 1));  // no outgoing constraints
  CHECK_FALSE(is_fitting_position(off, free, 0));
  // the constraint is out of reach of the search ball
  CHECK(is_fitting_position(Configuration{{0, 0}, {5, 0}}, free, 0));

  const auto a = testing::load("fig2a.json");
  for (AgentId i = 0; i < 4; ++i) CHECK(is_fitting_position(*a.desired_positions, a.graph, i));
}

TEST_CASE("fig2b: agent 3 reaches at most two of its three constraints") {
  const auto s = testing::load("fig2b.json");
  Configuration p = *s.desired_positions;
  // slide agent 4 along its orbit around agent 2
  const Vec2 c = p[1];
  const Vec2 r = p[3] - c;
  const double t = 0.4;
  p.set(3, c + Vec2(std::cos(t) * r.x() - std::sin(t) * r.y(), std::sin(t) * r.x() + std::cos(t) * r.y()));

  const auto move = best_fitting_move(p, s.graph, 2);
  CHECK(move.active_count == 2);

  // dense grid oracle over agent 3's neighbourhood
  const auto out = s.graph.outgoing(2);
  std::size_t best = 0;
  const double half = 1.5;
  const int n = 601;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Configuration q = p;
      q.set(2, p[2] + Vec2(-half + 2 * half * i / (n - 1), -half + 2 * half * j / (n - 1)));
      std::size_t count = 0;
      for (auto l : out) count += constraint_residual(q, s.graph.edge(l)) <= 5e-3;
      best = std::max(best, count);
    }
  }
  CHECK(best == 2);

  Configuration moved = p;
  moved.set(2, move.position);
  CHECK(is_fitting_position(moved, s.graph, 2));
}

TEST_CASE("consistency verdicts") {
  const auto b = testing::load("fig2b.json");
  const auto vb = check_consistency(b.graph, *b.desired_positions);
  CHECK_FALSE(vb.consistent);
  REQUIRE(vb.witness);
  CHECK(vb.max_violation > 1e-2);
  CHECK(*vb.violated_edge < b.graph.edge_count());

  const auto a = testing::load("fig2a.json");
  const auto va = check_consistency(a.graph, *a.desired_positions);
  CHECK(va.consistent);
  CHECK(va.trials == 200);
  CHECK(va.inconclusive == 0);

  TwoLayerGraph single(2, {DirectedEdge::make_distance(0, 1, 3, 1)});
  CHECK(check_consistency(single, Configuration{{0, 0}, {3, 0}}, {.trials = 50}).consistent);

  CHECK(error_kind_of([&] { check_consistency(a.graph, a.initial_positions); }) == ErrorKind::NotAnEquilibrium);
}

TEST_CASE("false verdict is stable when trials grow") {
  const auto b = testing::load("fig2b.json");
  for (std::uint64_t seed : {0u, 3u, 11u}) {
    ConsistencyOptions small{.trials = 20, .seed = seed};
    ConsistencyOptions big{.trials = 200, .seed = seed};
    const auto v1 = check_consistency(b.graph, *b.desired_positions, small);
    const auto v2 = check_consistency(b.graph, *b.desired_positions, big);
    if (!v1.consistent) {
      CHECK_FALSE(v2.consistent);
      CHECK(v1.counterexample_trial == v2.counterexample_trial);
      CHECK(v1.witness->max_displacement(*v2.witness) == 0.0);
    }
  }
}

TEST_CASE("dof ledger") {
  const auto s = testing::load("six_agent.json");
  const auto d = dof_ledger(s.graph, true);
  CHECK(d.total_dof == 2);
  int expected = 0;
  for (AgentId i = 0; i < 6; ++i) expected += 2 - static_cast<int>(std::min<std::size_t>(2, s.graph.out_degree(i)));
  CHECK(d.total_dof == expected);
  CHECK(d.structure == LeaderStructure::TwoColeaders);

  const auto lone = dof_ledger(TwoLayerGraph(1, {}));
  CHECK(lone.total_dof == 2);
  CHECK(lone.structure == LeaderStructure::OneLeader);

  TwoLayerGraph pair(2, {DirectedEdge::make_distance(0, 1, 1, 1), DirectedEdge::make_distance(1, 0, 1, 1)});
  const auto dp = dof_ledger(pair);
  CHECK(dp.per_agent_dof == std::vector<int>{1, 1});
  CHECK(dp.structure == LeaderStructure::TwoColeaders);

  const auto b = testing::load("fig2b.json");
  CHECK(error_kind_of([&] { dof_ledger(b.graph, true); }) == ErrorKind::OverConstrained);
  CHECK(dof_ledger(b.graph).structure == LeaderStructure::Invalid);
}

TEST_CASE("persistence of bundled scenarios") {
  const auto six = testing::load("six_agent.json");
  CHECK(check_persistence(six.graph, *six.desired_positions, {.trials = 50}).persistent);
  const auto b = testing::load("fig2b.json");
  const auto rb = check_persistence(b.graph, *b.desired_positions);
  CHECK(rb.rigidity.is_minimal);
  CHECK_FALSE(rb.persistent);
}

TEST_CASE("seeded uniform stream") {
  CHECK(unit_uniform(0) == 0.0);
  CHECK(unit_uniform(~std::uint64_t{0}) < 1.0);
  const Configuration p{{0, 0}, {1, 1}, {2, 0}};
  const auto q1 = perturb_in_disk(p, 0.5, 42, 3);
  const auto q2 = perturb_in_disk(p, 0.5, 42, 3);
  const auto q3 = perturb_in_disk(p, 0.5, 42, 4);
  CHECK(q1.max_displacement(q2) == 0.0);
  CHECK(q1.max_displacement(q3) > 0.0);
  CHECK(q1.max_displacement(p) <= 0.5);
}

}
