#include "hetform/merge.hpp"

#include <cmath>
#include <sstream>

#include "hetform/control.hpp"
#include "hetform/persistence.hpp"

namespace hetform {

namespace {

[[noreturn]] void bad_anchors(const std::string& msg) { throw FormationError(ErrorKind::InvalidAnchors, msg); }

NewEdgeDirections directions_for(MergeCase c) {
  if (c == MergeCase::Unilateral) return {false, false};
  return {true, false};
}

SensingKind anchor_kind(const TwoLayerGraph& g, AgentId a) {
  const auto k = g.agent_kind(a);
  if (!k) {
    std::ostringstream os;
    os << "sensing kind of anchor " << a << " is unknown; declare agent_kinds";
    throw FormationError(ErrorKind::ValidationError, os.str());
  }
  return *k;
}

DirectedEdge edge_towards(AgentId tail, AgentId head, SensingKind kind, const Vec2& z_star, double gain) {
  const double d = z_star.norm();
  if (kind == SensingKind::Distance) return DirectedEdge::make_distance(tail, head, d, gain);
  return DirectedEdge::make_bearing(tail, head, z_star / d, gain, d);
}

std::array<DirectedEdge, 2> make_new_edges(const TwoLayerGraph& g, const Configuration& p, const MergeRequest& req,
                                           double k_l, double k_l1) {
  const AgentId n = g.agent_count();
  const Vec2 q = req.new_desired_position;
  const Vec2 p1 = p[req.anchor1], p2 = p[req.anchor2];
  if (req.merge_case == MergeCase::Unilateral) {
    return {edge_towards(n, req.anchor1, req.new_agent_kind, p1 - q, k_l),
            edge_towards(n, req.anchor2, req.new_agent_kind, p2 - q, k_l1)};
  }
  return {edge_towards(req.anchor1, n, anchor_kind(g, req.anchor1), q - p1, k_l),
          edge_towards(n, req.anchor2, req.new_agent_kind, p2 - q, k_l1)};
}

TreeOptions tree_options(const TwoLayerGraph& g, const MergeRequest& req) {
  TreeOptions opts;
  if (req.merge_case != MergeCase::Unilateral) {
    opts.leaf = req.anchor1;
    if (g.linked(req.anchor1, req.anchor2)) opts.leaf_parent = req.anchor2;
  }
  return opts;
}

void check_placement(const TwoLayerGraph& g, const Configuration& p, const MergeRequest& req) {
  const AgentId n = g.agent_count();
  if (req.anchor1 >= n || req.anchor2 >= n) bad_anchors("anchor id out of range");
  if (req.anchor1 == req.anchor2) bad_anchors("anchors must be distinct");
  if (p.size() != n) throw FormationError(ErrorKind::ValidationError, "configuration size does not match graph");
  const Vec2 a = p[req.anchor1] - req.new_desired_position;
  const Vec2 b = p[req.anchor2] - req.new_desired_position;
  if (a.norm() < kCoincidenceThreshold || b.norm() < kCoincidenceThreshold) {
    throw FormationError(ErrorKind::CollinearDesiredPlacement, "new agent coincides with an anchor");
  }
  const double s = (a.x() * b.y() - a.y() * b.x()) / (a.norm() * b.norm());
  if (std::abs(s) <= 1e-9) {
    throw FormationError(ErrorKind::CollinearDesiredPlacement, "new desired position is collinear with the anchors");
  }
}

double anchor_link_angle(const TwoLayerGraph& g, const Configuration& p, AgentId a1, AgentId a2) {
  if (const auto l = g.find_edge(a1, a2)) return effective_angle(g.edge(*l).kind, p[a2] - p[a1]);
  if (const auto l = g.find_edge(a2, a1)) return effective_angle(g.edge(*l).kind, p[a1] - p[a2]);
  return angle_of(p[a2] - p[a1]);
}

}  // namespace

MergeCase classify_merge(const TwoLayerGraph& g, AgentId anchor1, AgentId anchor2, NewEdgeDirections dirs) {
  const AgentId n = g.agent_count();
  if (anchor1 >= n || anchor2 >= n) bad_anchors("anchor id out of range");
  if (anchor1 == anchor2) bad_anchors("anchors must be distinct");
  if (!dirs.from_anchor1 && !dirs.from_anchor2) return MergeCase::Unilateral;
  if (dirs.from_anchor1 && dirs.from_anchor2) bad_anchors("both new edges point into the new agent");

  const AgentId sender = dirs.from_anchor1 ? anchor1 : anchor2;
  const auto led = dof_ledger(g);
  if (led.structure == LeaderStructure::TwoColeaders && led.per_agent_dof[sender] == 1) {
    return MergeCase::TwoColeaders;
  }
  if (led.structure == LeaderStructure::OneLeader && led.per_agent_dof[sender] == 2) return MergeCase::OneLeader;
  std::ostringstream os;
  os << "agent " << sender << " is neither the leader nor a coleader (structure "
     << to_string(led.structure) << ")";
  bad_anchors(os.str());
}

LinearizedMergeSystem linearize_merge_numeric(const TwoLayerGraph& g, const Configuration& p_star,
                                              const MergeRequest& req, double k_l, double k_l1) {
  const AgentId n = g.agent_count();
  const auto edges = make_new_edges(g, p_star, req, k_l, k_l1);
  const auto ext = g.with_edges_appended(n + 1, edges, req.new_agent_kind);
  const auto p_ext = extend_configuration(p_star, req.new_desired_position);

  auto tree = spanning_tree(g, tree_options(g, req));
  if (req.merge_case == MergeCase::Unilateral) tree.emplace_back(n, req.anchor1);
  else tree.emplace_back(req.anchor1, n);
  const Eigen::MatrixXd t = tree_map(n + 1, tree);
  const Eigen::MatrixXd t_pinv = t.transpose() * (t * t.transpose()).inverse();
  const Eigen::MatrixXd m = t * control_jacobian(p_ext, ext) * t_pinv;

  const Eigen::Index nx = m.rows() - 2;
  LinearizedMergeSystem sys;
  sys.merge_case = req.merge_case;
  sys.A = -m.topLeftCorner(nx, nx);
  sys.coupling_x = m.topRightCorner(nx, 2);
  sys.coupling_y = m.bottomLeftCorner(2, nx);
  sys.D = -m.bottomRightCorner<2, 2>();
  if (nx >= 2) {
    sys.B = sys.coupling_x.bottomRows<2>();
    sys.C = sys.coupling_y.rightCols<2>();
  }
  const double a1 = anchor_link_angle(g, p_star, req.anchor1, req.anchor2);
  const double al = effective_angle(edges[0].kind, p_ext[edges[0].head] - p_ext[edges[0].tail]);
  const double al1 = effective_angle(edges[1].kind, p_ext[edges[1].head] - p_ext[edges[1].tail]);
  sys.theta = {wrap_angle(al - al1), wrap_angle(a1 - al1), wrap_angle(a1 - al)};
  return sys;
}

MergePlan plan_merge(const TwoLayerGraph& g, const Configuration& p_star, const MergeRequest& req) {
  check_placement(g, p_star, req);
  const auto dirs = directions_for(req.merge_case);
  const MergeCase found = classify_merge(g, req.anchor1, req.anchor2, dirs);
  if (found != req.merge_case) {
    std::ostringstream os;
    os << "anchors support a " << to_string(found) << " merge, not " << to_string(req.merge_case);
    bad_anchors(os.str());
  }

  const auto existing = numeric_edge_linearization(g, p_star, tree_options(g, req));
  const double existing_re = max_real_eigenvalue(-existing.A);
  const bool existing_stable = existing_re < 0.0;
  if (!existing_stable && !req.allow_uncertified) {
    std::ostringstream os;
    os << "existing formation is not exponentially stable (max Re = " << existing_re << ")";
    throw FormationError(ErrorKind::PreconditionViolated, os.str());
  }

  MergePlan plan;
  plan.merge_case = req.merge_case;
  plan.new_agent_kind = req.new_agent_kind;
  plan.anchors = {req.anchor1, req.anchor2};
  plan.new_agent = g.agent_count();
  plan.new_desired_position = req.new_desired_position;

  const auto build = [&](double k) { return linearize_merge_numeric(g, p_star, req, k, k); };
  if (req.merge_case == MergeCase::Unilateral) {
    plan.certificate = gain_bound_unilateral();
    plan.certificate.condition_holds = existing_stable;
    if (!existing_stable) plan.certificate.details.advice = "existing formation is not exponentially stable";
  } else {
    plan.certificate = gain_bound_numeric(build, req.merge_case);
    const auto ref = build(1.0);
    const double lam = min_sym_eigenvalue(ref.A + ref.A.transpose());
    if (ref.single_block_coupling(1e-9) && lam > 0.0) {
      if (req.merge_case == MergeCase::OneLeader) {
        plan.closed_form = gain_bound_one_leader(lam, ref.theta[0]);
      } else if (const auto link = g.find_edge(req.anchor1, req.anchor2)) {
        plan.closed_form =
            gain_bound_two_coleaders(lam, ref.theta[0], ref.theta[1], ref.theta[2], g.edge(*link).gain);
      }
    }
  }

  double default_gain = 1.0;
  if (const auto out = g.outgoing(req.anchor1); !out.empty()) default_gain = g.edge(out.front()).gain;
  const auto requested = req.gains.value_or(std::make_pair(default_gain, default_gain));
  if (!(requested.first > 0.0) || !(requested.second > 0.0)) {
    throw FormationError(ErrorKind::ValidationError, "gains must be positive");
  }

  const auto holds_at = [&](double kl, double kl1) {
    try {
      return evaluate_criterion(linearize_merge_numeric(g, p_star, req, kl, kl1)).holds;
    } catch (const FormationError& e) {
      if (e.kind() == ErrorKind::SingularCollinear) return false;
      throw;
    }
  };

  if (req.merge_case == MergeCase::Unilateral) {
    plan.gains = requested;
    plan.certified = plan.certificate.condition_holds;
  } else if (holds_at(requested.first, requested.second)) {
    plan.gains = requested;
    plan.certified = true;
  } else if (plan.certificate.condition_holds) {
    const auto& cb = plan.certificate;
    double k = requested.first;
    const std::optional<double> lo = cb.lower ? std::optional<double>(1.05 * *cb.lower) : std::nullopt;
    const std::optional<double> hi = cb.upper ? std::optional<double>(*cb.upper / 1.05) : std::nullopt;
    if (lo && hi && *lo > *hi) {
      k = std::sqrt(*cb.lower * *cb.upper);
    } else {
      if (lo) k = std::max(k, *lo);
      if (hi) k = std::min(k, *hi);
    }
    plan.gains = {k, k};
    plan.certified = holds_at(k, k);
  } else if (req.allow_uncertified) {
    plan.gains = requested;
    plan.certified = false;
  } else {
    throw FormationError(ErrorKind::PreconditionViolated, plan.certificate.details.advice);
  }

  plan.new_edges = make_new_edges(g, p_star, req, plan.gains.first, plan.gains.second);
  plan.system = linearize_merge_numeric(g, p_star, req, plan.gains.first, plan.gains.second);
  try {
    plan.criterion = evaluate_criterion(plan.system);
  } catch (const FormationError& e) {
    if (e.kind() != ErrorKind::SingularCollinear) throw;
  }
  const Eigen::MatrixXd full = assemble_block_matrix(plan.system);
  Eigen::EigenSolver<Eigen::MatrixXd> es(full, false);
  plan.spectrum.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  plan.max_real_part = es.eigenvalues().real().maxCoeff();
  return plan;
}

TwoLayerGraph apply_merge(const TwoLayerGraph& g, const MergePlan& plan, bool allow_uncertified) {
  if (!plan.certified && !allow_uncertified) {
    throw FormationError(ErrorKind::PreconditionViolated, "merge plan is not certified");
  }
  return g.with_edges_appended(g.agent_count() + 1, plan.new_edges, plan.new_agent_kind);
}

Configuration extend_configuration(const Configuration& p, const Vec2& new_position) {
  Configuration out(p.size() + 1);
  out.stacked().head(p.stacked().size()) = p.stacked();
  out.set(p.size(), new_position);
  return out;
}

}  // namespace hetform
