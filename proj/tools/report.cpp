#include "report.hpp"

#include <cmath>

namespace hetform::report {

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json edge(const DirectedEdge& e) {
  Json j;
  j["tail"] = e.tail;
  j["head"] = e.head;
  j["kind"] = std::string(to_string(e.kind));
  if (e.kind == SensingKind::Distance) j["desired"] = e.distance;
  else j["desired"] = point(e.bearing);
  j["gain"] = e.gain;
  if (e.kind == SensingKind::Bearing) j["scale"] = e.scale;
  return j;
}

}  // namespace

Json point(const Vec2& v) { return Json::array({v.x(), v.y()}); }

Json configuration(const Configuration& c) {
  Json arr = Json::array();
  for (AgentId i = 0; i < c.size(); ++i) arr.push_back(point(c[i]));
  return arr;
}

Json rigidity(const RigidityReport& r, std::size_t agents, std::size_t edges) {
  Json j;
  j["agents"] = agents;
  j["edges"] = edges;
  j["rank"] = r.rank;
  j["expected_rank"] = 2 * static_cast<int>(agents) - 2;
  j["is_infinitesimally_rigid"] = r.is_infinitesimally_rigid;
  j["is_minimal"] = r.is_minimal;
  j["kernel_dimension"] = r.kernel_basis.size();
  j["kernel_translation_residual"] = r.kernel_translation_residual;
  Json kernel = Json::array();
  for (const auto& v : r.kernel_basis) kernel.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  j["kernel_basis"] = kernel;
  j["singular_values"] = r.singular_values;
  j["full_distance_bearing_rank"] = r.full_matrix_rank;
  return j;
}

Json dof(const DofLedger& d) {
  Json j;
  j["per_agent_dof"] = d.per_agent_dof;
  j["total_dof"] = d.total_dof;
  j["leaders"] = d.leaders;
  j["structure"] = std::string(to_string(d.structure));
  return j;
}

Json consistency(const ConsistencyVerdict& v, const TwoLayerGraph& g) {
  Json j;
  j["consistent"] = v.consistent;
  j["method"] = "monte-carlo falsification (not a proof)";
  j["trials_run"] = v.trials;
  j["inconclusive_trials"] = v.inconclusive;
  j["eps"] = v.eps;
  j["seed"] = v.seed;
  j["max_violation"] = v.max_violation;
  if (v.witness) {
    j["counterexample_trial"] = *v.counterexample_trial;
    j["violated_edge"] = *v.violated_edge;
    const auto& e = g.edge(*v.violated_edge);
    j["violated_edge_endpoints"] = Json::array({e.tail, e.head});
    j["witness"] = configuration(*v.witness);
  }
  return j;
}

Json gain_bound(const GainBound& b) {
  Json j;
  j["case"] = std::string(to_string(b.merge_case));
  j["condition_holds"] = b.condition_holds;
  j["lower"] = optional_number(b.lower);
  j["upper"] = optional_number(b.upper);
  Json d;
  d["method"] = b.details.method;
  d["lambda_min_A_sym"] = b.details.lambda_min_A;
  d["reference_gain"] = b.details.reference_gain;
  d["lambda_max_BC"] = b.details.lambda_max_BC;
  d["lambda_max_D_inv"] = b.details.lambda_max_D_inv;
  d["mu_bar"] = optional_number(b.details.mu_bar);
  d["published_form_bound"] = optional_number(b.details.published_form_bound);
  d["published_precondition"] = b.details.published_precondition;
  d["required_multiplier"] = optional_number(b.details.required_multiplier);
  if (!b.details.advice.empty()) d["advice"] = b.details.advice;
  j["details"] = d;
  return j;
}

Json criterion(const CriterionReport& c) {
  Json j;
  j["holds"] = c.holds;
  j["lambda_min_A_sym"] = c.lambda_min_sym_A;
  j["lambda_min_weight"] = c.lambda_min_weight;
  j["coupling_norm"] = c.coupling_norm;
  j["lambda_max_D_inv"] = c.lambda_max_D_inv;
  j["lhs"] = c.lhs;
  j["rhs"] = c.rhs;
  j["rebalanced"] = c.rebalanced;
  j["block_triangular"] = c.triangular;
  j["existing_hurwitz"] = c.existing_hurwitz;
  return j;
}

Json merge_plan(const MergePlan& p) {
  Json j;
  j["case"] = std::string(to_string(p.merge_case));
  j["new_agent"] = p.new_agent;
  j["new_agent_kind"] = std::string(to_string(p.new_agent_kind));
  j["anchors"] = Json::array({p.anchors.first, p.anchors.second});
  j["new_desired_position"] = point(p.new_desired_position);
  j["new_edges"] = Json::array({edge(p.new_edges[0]), edge(p.new_edges[1])});
  j["gains"] = Json::array({p.gains.first, p.gains.second});
  j["certified"] = p.certified;
  j["certificate"] = gain_bound(p.certificate);
  j["closed_form"] = p.closed_form ? gain_bound(*p.closed_form) : Json(nullptr);
  j["criterion_at_gains"] = criterion(p.criterion);
  j["theta"] = Json::array({p.system.theta[0], p.system.theta[1], p.system.theta[2]});
  Json spec = Json::array();
  for (const auto& z : p.spectrum) spec.push_back(Json::array({z.real(), z.imag()}));
  j["spectrum"] = spec;
  j["max_real_part"] = p.max_real_part;
  return j;
}

Json convergence(const ConvergenceReport& c, const Trajectory& t) {
  Json j;
  j["converged"] = c.converged;
  j["converged_at"] = optional_number(c.converged_at);
  j["decay_rate"] = optional_number(c.decay_rate);
  j["max_final_error"] = c.max_final_error;
  j["final_errors"] = c.final_errors;
  j["samples"] = t.times.size();
  j["t_end"] = t.times.empty() ? 0.0 : t.times.back();
  return j;
}

}  // namespace hetform::report
