#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "hetform/merge.hpp"
#include "hetform/persistence.hpp"
#include "hetform/rigidity.hpp"
#include "hetform/sim.hpp"

using namespace hetform;
using testing::error_kind_of;

namespace {

MergeRequest r3_request() {
  MergeRequest r;
  r.merge_case = MergeCase::TwoColeaders;
  r.new_agent_kind = SensingKind::Bearing;
  r.anchor1 = 0;
  r.anchor2 = 1;
  r.new_desired_position = {0, -5};
  r.gains = std::make_pair(3.0, 3.0);
  return r;
}

}  // namespace

TEST_SUITE("merge") {

TEST_CASE("classify") {
  const auto s = testing::load("two_agent.json");
  CHECK(classify_merge(s.graph, 0, 1, {false, false}) == MergeCase::Unilateral);
  CHECK(classify_merge(s.graph, 0, 1, {true, false}) == MergeCase::TwoColeaders);
  CHECK(error_kind_of([&] { classify_merge(s.graph, 0, 1, {true, true}); }) == ErrorKind::InvalidAnchors);
  CHECK(error_kind_of([&] { classify_merge(s.graph, 0, 0, {false, false}); }) == ErrorKind::InvalidAnchors);

  // one leader: agent 0 free, agent 1 fixed by two edges to 0... use a leader-follower pair
  TwoLayerGraph lf(3, {DirectedEdge::make_distance(1, 0, 1, 1), DirectedEdge::make_bearing(1, 0, {1, 0}, 1),
                       DirectedEdge::make_distance(2, 0, 1, 1), DirectedEdge::make_distance(2, 1, 1, 1)});
  CHECK(classify_merge(lf, 0, 1, {true, false}) == MergeCase::OneLeader);
  CHECK(error_kind_of([&] { classify_merge(lf, 2, 1, {true, false}); }) == ErrorKind::InvalidAnchors);
}

TEST_CASE("first merge of the reference scenario") {
  const auto s = testing::load("two_agent.json");
  const auto plan = plan_merge(s.graph, *s.desired_positions, r3_request());
  CHECK(plan.certified);
  CHECK(plan.gains.first == 3.0);
  CHECK(plan.new_agent == 2);
  CHECK(plan.new_edges[0].tail == 0);
  CHECK(plan.new_edges[0].kind == SensingKind::Distance);
  CHECK(plan.new_edges[0].distance == doctest::Approx(5 * std::sqrt(2.0)));
  CHECK(plan.new_edges[1].tail == 2);
  CHECK(plan.new_edges[1].kind == SensingKind::Bearing);
  CHECK(plan.new_edges[1].bearing.isApprox(Vec2(0, 1)));
  CHECK(plan.max_real_part < 0);
  REQUIRE(plan.closed_form);
  CHECK(*plan.closed_form->lower == doctest::Approx(*plan.certificate.lower).epsilon(1e-6));

  // spectrum of the assembled block matrix from an independent eigensolve
  Eigen::EigenSolver<Eigen::MatrixXd> es(assemble_block_matrix(plan.system), false);
  CHECK(es.eigenvalues().real().maxCoeff() == doctest::Approx(plan.max_real_part));

  const auto g3 = apply_merge(s.graph, plan);
  CHECK(g3.agent_count() == 3);
  CHECK(g3.edge_count() == 4);
  const auto p3 = extend_configuration(*s.desired_positions, plan.new_desired_position);
  const auto rep = analyze_rigidity(p3, g3);
  CHECK(rep.rank == 4);
  CHECK(rep.is_minimal);
  CHECK(dof_ledger(g3).total_dof == 2);
}

TEST_CASE("gain selection clamps into the certified range") {
  const auto s = testing::load("two_agent.json");
  auto req = r3_request();
  req.gains = std::make_pair(0.5, 0.5);
  const auto plan = plan_merge(s.graph, *s.desired_positions, req);
  CHECK(plan.certified);
  CHECK(plan.gains.first == doctest::Approx(1.05 * *plan.certificate.lower));

  req.gains = std::make_pair(50.0, 50.0);
  const auto hi = plan_merge(s.graph, *s.desired_positions, req);
  CHECK(hi.certified);
  CHECK(hi.gains.first == doctest::Approx(*hi.certificate.upper / 1.05));
}

TEST_CASE("collinear placements and bad anchors") {
  const auto s = testing::load("two_agent.json");
  auto req = r3_request();
  req.new_desired_position = {10, 0};
  CHECK(error_kind_of([&] { plan_merge(s.graph, *s.desired_positions, req); }) ==
        ErrorKind::CollinearDesiredPlacement);
  req = r3_request();
  req.anchor2 = 7;
  CHECK(error_kind_of([&] { plan_merge(s.graph, *s.desired_positions, req); }) == ErrorKind::InvalidAnchors);
}

TEST_CASE("unilateral merges are certified for any gains") {
  const auto s = testing::load("four_agent.json");
  for (double k : {1e-2, 1.0, 1e2}) {
    MergeRequest req;
    req.merge_case = MergeCase::Unilateral;
    req.new_agent_kind = SensingKind::Distance;
    req.anchor1 = 0;
    req.anchor2 = 1;
    req.new_desired_position = {4.82269, -7.6579475816892355};
    req.gains = std::make_pair(k, 2 * k);
    const auto plan = plan_merge(s.graph, *s.desired_positions, req);
    CHECK(plan.certified);
    CHECK(plan.max_real_part < 0);
    CHECK(plan.gains.first == k);
    const auto g5 = apply_merge(s.graph, plan);
    CHECK(dof_ledger(g5).per_agent_dof.back() == 0);
    CHECK(dof_ledger(g5).total_dof == 2);
  }
}

TEST_CASE("reference chain rebuilds the six-agent wiring") {
  const auto four = testing::load("four_agent.json");
  const auto six = testing::load("six_agent.json");
  MergeRequest r6;
  r6.merge_case = MergeCase::Unilateral;
  r6.new_agent_kind = SensingKind::Distance;
  r6.anchor1 = 0;
  r6.anchor2 = 1;
  r6.new_desired_position = (*six.desired_positions)[5];
  r6.gains = std::make_pair(3.0, 3.0);
  const auto p6 = plan_merge(four.graph, *four.desired_positions, r6);
  const auto g5 = apply_merge(four.graph, p6);
  const auto c5 = extend_configuration(*four.desired_positions, r6.new_desired_position);

  MergeRequest r5;
  r5.merge_case = MergeCase::TwoColeaders;
  r5.new_agent_kind = SensingKind::Bearing;
  r5.anchor1 = 3;
  r5.anchor2 = 4;
  r5.new_desired_position = (*six.desired_positions)[4];
  r5.gains = std::make_pair(3.8, 3.8);
  r5.allow_uncertified = true;
  const auto p5 = plan_merge(g5, c5, r5);
  const auto g6 = apply_merge(g5, p5, true);
  CHECK(g6.edge_count() == 10);
  // same constraint set as the bundled file, up to agent relabelling 4 <-> 5
  const auto c6 = extend_configuration(c5, r5.new_desired_position);
  CHECK(analyze_rigidity(c6, g6).is_minimal);
  CHECK(constraint_residuals(c6, g6).size() == 10);
  for (double r : constraint_residuals(c6, g6)) CHECK(r < 1e-9);
}

}
