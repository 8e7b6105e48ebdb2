#pragma once

// Planning and applying single-agent insertions with certified gains.

#include <array>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "hetform/graph.hpp"
#include "hetform/stability.hpp"

namespace hetform {

/// Direction of the new edge at each anchor.
struct NewEdgeDirections {
  bool from_anchor1{false};
  bool from_anchor2{false};
};

/// Both edges out of the new agent is Unilateral. Otherwise anchor 1 must
/// send the edge into the new agent and anchor 2 receive the other one;
/// anchor 1 must be a coleader (TwoColeaders) or the leader (OneLeader).
/// Throws InvalidAnchors.
MergeCase classify_merge(const TwoLayerGraph& g, AgentId anchor1, AgentId anchor2, NewEdgeDirections dirs);

struct MergeRequest {
  MergeCase merge_case{MergeCase::Unilateral};
  SensingKind new_agent_kind{SensingKind::Distance};
  AgentId anchor1{0};
  AgentId anchor2{1};
  Vec2 new_desired_position{Vec2::Zero()};
  /// (k_l, k_{l+1}); k_l belongs to the anchor-side edge (or the edge to
  /// anchor 1 for Unilateral).
  std::optional<std::pair<double, double>> gains;
  /// Plan even when no gain is certified.
  bool allow_uncertified{false};
};

struct MergePlan {
  MergeCase merge_case{MergeCase::Unilateral};
  SensingKind new_agent_kind{SensingKind::Distance};
  std::pair<AgentId, AgentId> anchors{0, 1};
  AgentId new_agent{0};
  std::array<DirectedEdge, 2> new_edges{};
  std::pair<double, double> gains{1.0, 1.0};
  GainBound certificate;
  /// Same bound from the closed-form proposition, when its structure applies.
  std::optional<GainBound> closed_form;
  Vec2 new_desired_position{Vec2::Zero()};
  bool certified{false};
  /// Linearization at the chosen gains and its spectrum.
  LinearizedMergeSystem system;
  CriterionReport criterion;
  std::vector<std::complex<double>> spectrum;
  double max_real_part{0.0};
};

/// Linearized merge system in [existing tree edges, new edge] coordinates
/// for new edge gains (k_l, k_{l+1}).
LinearizedMergeSystem linearize_merge_numeric(const TwoLayerGraph& g, const Configuration& p_star,
                                              const MergeRequest& req, double k_l, double k_l1);

/// Throws InvalidAnchors, CollinearDesiredPlacement, NotAnEquilibrium,
/// PreconditionViolated.
MergePlan plan_merge(const TwoLayerGraph& g, const Configuration& p_star, const MergeRequest& req);

/// Extended graph with the plan's edges; throws PreconditionViolated for an
/// uncertified plan unless `allow_uncertified`.
TwoLayerGraph apply_merge(const TwoLayerGraph& g, const MergePlan& plan, bool allow_uncertified = false);

Configuration extend_configuration(const Configuration& p, const Vec2& new_position);

}  // namespace hetform
