#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hetform/control.hpp"
#include "hetform/merge.hpp"
#include "hetform/persistence.hpp"
#include "hetform/rigidity.hpp"
#include "hetform/scenario.hpp"
#include "hetform/sim.hpp"
#include "hetform/stability.hpp"

namespace py = pybind11;
using namespace hetform;

using Points = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

namespace {

Points to_points(const Configuration& p) {
  Points out(static_cast<Eigen::Index>(p.size()), 2);
  for (AgentId i = 0; i < p.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = p[i].transpose();
  return out;
}

Configuration from_points(const Points& pts) {
  Configuration c(static_cast<std::size_t>(pts.rows()));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) c.set(static_cast<AgentId>(i), pts.row(i).transpose());
  return c;
}

py::dict consistency_dict(const ConsistencyVerdict& v) {
  py::dict d;
  d["consistent"] = v.consistent;
  d["trials"] = v.trials;
  d["inconclusive"] = v.inconclusive;
  d["eps"] = v.eps;
  d["seed"] = v.seed;
  d["max_violation"] = v.max_violation;
  d["counterexample_trial"] = v.counterexample_trial;
  d["violated_edge"] = v.violated_edge;
  d["witness"] = v.witness ? py::object(py::cast(to_points(*v.witness))) : py::object(py::none());
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Heterogeneous-sensing formation analysis";

  static py::exception<FormationError> formation_error(m, "FormationError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const FormationError& e) {
      py::object err = formation_error;
      err.attr("last_kind") = std::string(to_string(e.kind()));
      PyErr_SetString(formation_error.ptr(), e.what());
    }
  });

  py::enum_<SensingKind>(m, "SensingKind")
      .value("DISTANCE", SensingKind::Distance)
      .value("BEARING", SensingKind::Bearing);

  py::enum_<MergeCase>(m, "MergeCase")
      .value("TWO_COLEADERS", MergeCase::TwoColeaders)
      .value("ONE_LEADER", MergeCase::OneLeader)
      .value("UNILATERAL", MergeCase::Unilateral);

  py::class_<DirectedEdge>(m, "DirectedEdge")
      .def_static("distance", &DirectedEdge::make_distance, py::arg("tail"), py::arg("head"), py::arg("desired"),
                  py::arg("gain") = 1.0)
      .def_static("bearing", &DirectedEdge::make_bearing, py::arg("tail"), py::arg("head"), py::arg("desired"),
                  py::arg("gain") = 1.0, py::arg("scale") = 1.0)
      .def_readonly("tail", &DirectedEdge::tail)
      .def_readonly("head", &DirectedEdge::head)
      .def_readonly("kind", &DirectedEdge::kind)
      .def_readonly("distance", &DirectedEdge::distance)
      .def_readonly("bearing", &DirectedEdge::bearing)
      .def_readonly("scale", &DirectedEdge::scale)
      .def_readonly("gain", &DirectedEdge::gain)
      .def("__repr__", [](const DirectedEdge& e) {
        return "<DirectedEdge " + std::to_string(e.tail) + "->" + std::to_string(e.head) + " " +
               std::string(to_string(e.kind)) + ">";
      });

  py::class_<TwoLayerGraph>(m, "TwoLayerGraph")
      .def(py::init<std::size_t, std::vector<DirectedEdge>>(), py::arg("agents"), py::arg("edges"))
      .def_property_readonly("agent_count", &TwoLayerGraph::agent_count)
      .def_property_readonly("edge_count", &TwoLayerGraph::edge_count)
      .def_property_readonly("edges", &TwoLayerGraph::edges)
      .def("out_degree", &TwoLayerGraph::out_degree);

  py::class_<SimParams>(m, "SimParams")
      .def(py::init<>())
      .def_readwrite("dt", &SimParams::dt)
      .def_readwrite("t_max", &SimParams::t_max)
      .def_readwrite("convergence_tol", &SimParams::convergence_tol)
      .def_readwrite("record_every", &SimParams::record_every);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("description", &Scenario::description)
      .def_readonly("graph", &Scenario::graph)
      .def_property_readonly("initial_positions", [](const Scenario& s) { return to_points(s.initial_positions); })
      .def_property_readonly("desired_positions",
                             [](const Scenario& s) -> std::optional<Points> {
                               if (!s.desired_positions) return std::nullopt;
                               return to_points(*s.desired_positions);
                             })
      .def_readonly("sim", &Scenario::sim)
      .def("to_json", &serialize_scenario);

  m.def("load_scenario", [](const std::filesystem::path& p) { return parse_scenario(p); }, py::arg("path"));
  m.def("parse_scenario", [](const std::string& text) { return parse_scenario_text(text); }, py::arg("text"));

  py::class_<RigidityReport>(m, "RigidityReport")
      .def_readonly("rank", &RigidityReport::rank)
      .def_readonly("is_infinitesimally_rigid", &RigidityReport::is_infinitesimally_rigid)
      .def_readonly("is_minimal", &RigidityReport::is_minimal)
      .def_readonly("singular_values", &RigidityReport::singular_values)
      .def_readonly("kernel_basis", &RigidityReport::kernel_basis)
      .def_readonly("kernel_translation_residual", &RigidityReport::kernel_translation_residual);

  m.def(
      "analyze_rigidity", [](const Points& p, const TwoLayerGraph& g) { return analyze_rigidity(from_points(p), g); },
      py::arg("positions"), py::arg("graph"));
  m.def(
      "rigidity_matrix", [](const Points& p, const TwoLayerGraph& g) { return rigidity_matrix(from_points(p), g); },
      py::arg("positions"), py::arg("graph"));
  m.def(
      "assemble_control",
      [](const Points& p, const TwoLayerGraph& g) {
        const Eigen::VectorXd u = assemble_control(from_points(p), g);
        return to_points(Configuration(u));
      },
      py::arg("positions"), py::arg("graph"));

  m.def(
      "check_consistency",
      [](const TwoLayerGraph& g, const Points& p, int trials, std::optional<double> eps, std::uint64_t seed) {
        ConsistencyOptions o;
        o.trials = trials;
        o.eps = eps;
        o.seed = seed;
        return consistency_dict(check_consistency(g, from_points(p), o));
      },
      py::arg("graph"), py::arg("desired"), py::arg("trials") = 200, py::arg("eps") = py::none(),
      py::arg("seed") = 0);

  m.def(
      "projection_sum_eigenvalues",
      [](const std::vector<std::pair<double, double>>& terms) {
        std::vector<ProjectionTerm> t;
        for (auto [a, k] : terms) t.push_back({a, k});
        const auto ev = projection_sum_eigenvalues(t);
        return std::make_pair(ev.max, ev.min);
      },
      py::arg("terms"), "terms: list of (alpha, k); returns (lambda_max, lambda_min)");
  m.def(
      "projection_inverse",
      [](double a1, double k1, double a2, double k2) { return Mat2(projection_inverse({a1, k1}, {a2, k2})); },
      py::arg("alpha1"), py::arg("k1"), py::arg("alpha2"), py::arg("k2"));

  py::class_<GainBound>(m, "GainBound")
      .def_readonly("merge_case", &GainBound::merge_case)
      .def_readonly("lower", &GainBound::lower)
      .def_readonly("upper", &GainBound::upper)
      .def_readonly("condition_holds", &GainBound::condition_holds)
      .def_property_readonly("published_form_bound",
                             [](const GainBound& b) { return b.details.published_form_bound; })
      .def_property_readonly("method", [](const GainBound& b) { return b.details.method; })
      .def("certifies", &GainBound::certifies);

  m.def("gain_bound_two_coleaders", &gain_bound_two_coleaders, py::arg("lambda_min_A"), py::arg("theta1"),
        py::arg("theta2"), py::arg("theta3"), py::arg("k1"));
  m.def("gain_bound_one_leader", &gain_bound_one_leader, py::arg("lambda_min_A"), py::arg("theta"));
  m.def("gain_bound_unilateral", &gain_bound_unilateral);

  m.def(
      "plan_merge",
      [](const TwoLayerGraph& g, const Points& p, MergeCase c, SensingKind kind, AgentId a1, AgentId a2,
         const Vec2& at, std::optional<std::pair<double, double>> gains, bool allow_uncertified) {
        MergeRequest r;
        r.merge_case = c;
        r.new_agent_kind = kind;
        r.anchor1 = a1;
        r.anchor2 = a2;
        r.new_desired_position = at;
        r.gains = gains;
        r.allow_uncertified = allow_uncertified;
        const auto plan = plan_merge(g, from_points(p), r);
        py::dict d;
        d["certified"] = plan.certified;
        d["gains"] = plan.gains;
        d["certificate"] = plan.certificate;
        d["closed_form"] = plan.closed_form;
        d["max_real_part"] = plan.max_real_part;
        d["graph"] = apply_merge(g, plan, true);
        d["desired_positions"] = to_points(extend_configuration(from_points(p), at));
        return d;
      },
      py::arg("graph"), py::arg("desired"), py::arg("case"), py::arg("kind"), py::arg("anchor1"),
      py::arg("anchor2"), py::arg("at"), py::arg("gains") = py::none(), py::arg("allow_uncertified") = false);

  m.def(
      "simulate",
      [](const TwoLayerGraph& g, const Points& p0, const SimParams& params) {
        const auto traj = simulate(g, from_points(p0), params);
        const auto rep = verify_convergence(traj, g, params.convergence_tol);
        const auto k = static_cast<py::ssize_t>(traj.times.size());
        const auto n = static_cast<py::ssize_t>(g.agent_count());
        py::array_t<double> pos({k, n, py::ssize_t{2}});
        auto view = pos.mutable_unchecked<3>();
        for (py::ssize_t s = 0; s < k; ++s)
          for (py::ssize_t i = 0; i < n; ++i)
            for (py::ssize_t c = 0; c < 2; ++c)
              view(s, i, c) = traj.positions[static_cast<std::size_t>(s)].stacked()(2 * i + c);
        py::dict d;
        d["times"] = traj.times;
        d["positions"] = pos;
        d["errors"] = traj.errors;
        d["converged"] = rep.converged;
        d["converged_at"] = rep.converged_at;
        d["decay_rate"] = rep.decay_rate;
        d["max_final_error"] = rep.max_final_error;
        return d;
      },
      py::arg("graph"), py::arg("initial"), py::arg("params") = SimParams{});

  m.def(
      "perturb",
      [](const Points& p, const TwoLayerGraph& g, double frac, std::uint64_t seed) {
        return to_points(perturb(from_points(p), g, frac, seed));
      },
      py::arg("positions"), py::arg("graph"), py::arg("frac"), py::arg("seed") = 0);
}
