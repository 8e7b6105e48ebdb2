#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hetform/errors.hpp"
#include "hetform/merge.hpp"
#include "hetform/output.hpp"
#include "hetform/persistence.hpp"
#include "hetform/rigidity.hpp"
#include "hetform/scenario.hpp"
#include "hetform/sim.hpp"
#include "report.hpp"

namespace fs = std::filesystem;
using namespace hetform;
using report::Json;

namespace {

constexpr int kPass = 0;
constexpr int kError = 1;
constexpr int kVerdictFail = 2;

struct Globals {
  std::string out{"."};
  std::uint64_t seed{0};
  bool quiet{false};
};

void emit(const Globals& g, const Json& j) {
  if (!g.quiet) std::cout << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::vector<double> split_numbers(const std::string& text, std::size_t expected, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size()) {
      throw FormationError(ErrorKind::ValidationError, what + ": '" + text + "' is not a number list");
    }
    out.push_back(v);
  }
  if (out.size() != expected) {
    std::ostringstream os;
    os << what << ": expected " << expected << " comma-separated values, got '" << text << "'";
    throw FormationError(ErrorKind::ValidationError, os.str());
  }
  return out;
}

AgentId agent_id(double v, const std::string& what) {
  if (v < 0 || v != std::floor(v)) throw FormationError(ErrorKind::ValidationError, what + ": bad agent id");
  return static_cast<AgentId>(v);
}

struct MergeArgs {
  std::string merge_case;
  std::string anchors;
  std::string kind;
  std::string at;
  std::string gains;
  bool allow_uncertified{false};
};

MergeRequest to_request(const MergeArgs& a) {
  MergeRequest req;
  const auto c = parse_merge_case(a.merge_case);
  if (!c) throw FormationError(ErrorKind::ValidationError, "unknown merge case '" + a.merge_case + "'");
  req.merge_case = *c;
  const auto kind = parse_sensing_kind(a.kind);
  if (!kind) throw FormationError(ErrorKind::ValidationError, "unknown sensing kind '" + a.kind + "'");
  req.new_agent_kind = *kind;
  const auto anchors = split_numbers(a.anchors, 2, "anchors");
  req.anchor1 = agent_id(anchors[0], "anchors");
  req.anchor2 = agent_id(anchors[1], "anchors");
  const auto at = split_numbers(a.at, 2, "at");
  req.new_desired_position = Vec2(at[0], at[1]);
  if (!a.gains.empty()) {
    const auto gains = split_numbers(a.gains, 2, "gains");
    req.gains = std::make_pair(gains[0], gains[1]);
  }
  req.allow_uncertified = a.allow_uncertified;
  return req;
}

// "case=two_coleaders;anchors=0,1;kind=bearing;at=0,-5[;gains=3,3][;allow_uncertified]"
MergeArgs parse_merge_spec(const std::string& spec) {
  MergeArgs a;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    const std::string key = part.substr(0, eq);
    const std::string value = eq == std::string::npos ? "" : part.substr(eq + 1);
    if (key == "case") a.merge_case = value;
    else if (key == "anchors") a.anchors = value;
    else if (key == "kind") a.kind = value;
    else if (key == "at") a.at = value;
    else if (key == "gains") a.gains = value;
    else if (key == "allow_uncertified" || key == "allow-uncertified") a.allow_uncertified = true;
    else throw FormationError(ErrorKind::ValidationError, "unknown merge-spec key '" + key + "'");
  }
  if (a.merge_case.empty() || a.anchors.empty() || a.kind.empty() || a.at.empty()) {
    throw FormationError(ErrorKind::ValidationError, "merge spec needs case, anchors, kind and at");
  }
  return a;
}

const Configuration& equilibrium_of(const Scenario& s) {
  return s.desired_positions ? *s.desired_positions : s.initial_positions;
}

int cmd_check_rigidity(const Globals& gl, const std::string& path, const std::string& at) {
  const Scenario s = parse_scenario(path);
  if (at != "equilibrium" && at != "initial") {
    throw FormationError(ErrorKind::ValidationError, "--at must be equilibrium or initial");
  }
  const Configuration& p = at == "initial" ? s.initial_positions : equilibrium_of(s);
  const auto r = analyze_rigidity(p, s.graph);
  Json j;
  j["scenario"] = path;
  j["at"] = at;
  j["rigidity"] = report::rigidity(r, s.graph.agent_count(), s.graph.edge_count());
  emit(gl, j);
  return r.is_infinitesimally_rigid ? kPass : kVerdictFail;
}

int cmd_check_persistence(const Globals& gl, const std::string& path, int trials, std::optional<double> eps) {
  const Scenario s = parse_scenario(path);
  ConsistencyOptions opts;
  opts.trials = trials;
  opts.eps = eps;
  opts.seed = gl.seed;
  const auto rep = check_persistence(s.graph, equilibrium_of(s), opts);
  Json j;
  j["scenario"] = path;
  j["persistent"] = rep.persistent;
  j["dof"] = report::dof(rep.dof);
  j["rigidity"] = report::rigidity(rep.rigidity, s.graph.agent_count(), s.graph.edge_count());
  j["consistency"] = report::consistency(rep.consistency, s.graph);
  emit(gl, j);
  return rep.persistent ? kPass : kVerdictFail;
}

int cmd_gain_bound(const Globals& gl, const std::string& path, const std::string& spec) {
  const Scenario s = parse_scenario(path);
  MergeRequest req = to_request(parse_merge_spec(spec));
  req.allow_uncertified = true;
  const auto plan = plan_merge(s.graph, equilibrium_of(s), req);
  Json j;
  j["scenario"] = path;
  j["case"] = std::string(to_string(plan.merge_case));
  j["lower"] = plan.certificate.lower ? Json(*plan.certificate.lower) : Json(nullptr);
  j["upper"] = plan.certificate.upper ? Json(*plan.certificate.upper) : Json(nullptr);
  j["condition_holds"] = plan.certificate.condition_holds;
  j["certificate"] = report::gain_bound(plan.certificate);
  j["closed_form"] = plan.closed_form ? report::gain_bound(*plan.closed_form) : Json(nullptr);
  j["theta"] = Json::array({plan.system.theta[0], plan.system.theta[1], plan.system.theta[2]});
  j["gains_checked"] = Json::array({plan.gains.first, plan.gains.second});
  j["certified_at_gains"] = plan.certified;
  j["max_real_part_at_gains"] = plan.max_real_part;
  emit(gl, j);
  return plan.certificate.condition_holds ? kPass : kVerdictFail;
}

int cmd_merge(const Globals& gl, const std::string& path, const MergeArgs& args) {
  const Scenario s = parse_scenario(path);
  const MergeRequest req = to_request(args);
  const Configuration& p = equilibrium_of(s);
  const auto plan = plan_merge(s.graph, p, req);

  Scenario merged;
  merged.description = s.description;
  merged.graph = apply_merge(s.graph, plan, req.allow_uncertified);
  merged.initial_positions = extend_configuration(s.initial_positions, plan.new_desired_position);
  merged.desired_positions = extend_configuration(p, plan.new_desired_position);
  merged.sim = s.sim;

  const fs::path out(gl.out);
  fs::create_directories(out);
  write_scenario(merged, out / "merged.json");
  Json cert = report::merge_plan(plan);
  write_text(out / "certificate.json", cert.dump(2) + "\n");

  Json j;
  j["scenario"] = path;
  j["merged"] = (out / "merged.json").string();
  j["certificate"] = (out / "certificate.json").string();
  j["plan"] = cert;
  emit(gl, j);
  return plan.certified ? kPass : kVerdictFail;
}

struct SimArgs {
  std::optional<double> dt;
  std::optional<double> t_max;
  std::optional<double> tol;
  std::optional<double> perturb;
};

int cmd_simulate(const Globals& gl, const std::string& path, const SimArgs& a) {
  const Scenario s = parse_scenario(path);
  SimParams params = s.sim;
  if (a.dt) params.dt = *a.dt;
  if (a.t_max) params.t_max = *a.t_max;
  if (a.tol) params.convergence_tol = *a.tol;
  params.validate();

  Configuration p0 = s.initial_positions;
  if (a.perturb) {
    if (!(*a.perturb >= 0.0)) throw FormationError(ErrorKind::ValidationError, "--perturb must be >= 0");
    p0 = perturb(equilibrium_of(s), s.graph, *a.perturb, gl.seed);
  }
  const Trajectory traj = simulate(s.graph, p0, params);
  const auto conv = verify_convergence(traj, s.graph, params.convergence_tol);

  const fs::path out(gl.out);
  fs::create_directories(out);
  {
    std::ofstream os(out / "trajectory.csv");
    write_trajectory_csv(os, traj);
  }
  {
    std::ofstream os(out / "errors.csv");
    write_errors_csv(os, traj);
  }
  write_text(out / "trajectory.svg", render_svg(traj, s.graph));

  Json summary;
  summary["scenario"] = path;
  summary["seed"] = gl.seed;
  summary["perturb"] = a.perturb ? Json(*a.perturb) : Json(nullptr);
  summary["dt"] = params.dt;
  summary["t_max"] = params.t_max;
  summary["convergence_tol"] = params.convergence_tol;
  summary["record_every"] = params.record_every;
  summary["initial_positions"] = report::configuration(p0);
  summary["final_positions"] = report::configuration(traj.positions.back());
  summary["convergence"] = report::convergence(conv, traj);
  write_text(out / "summary.json", summary.dump(2) + "\n");
  emit(gl, summary);
  return conv.converged ? kPass : kVerdictFail;
}

int cmd_plot(const Globals& gl, const std::string& path, const std::string& csv) {
  const Scenario s = parse_scenario(path);
  const Trajectory traj = read_trajectory_csv(csv);
  if (traj.positions.empty()) throw FormationError(ErrorKind::ValidationError, csv + ": no samples");
  if (traj.positions.front().size() != s.graph.agent_count()) {
    throw FormationError(ErrorKind::ValidationError, csv + ": agent count does not match the scenario");
  }
  const fs::path target = fs::path(gl.out) / "trajectory.svg";
  write_text(target, render_svg(traj, s.graph));
  if (!gl.quiet) std::cout << target.string() << '\n';
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous-sensing formation analysis and simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals gl;
  app.add_option("--out", gl.out, "Output directory");
  app.add_option("--seed", gl.seed, "Random seed");
  app.add_flag("--quiet", gl.quiet, "Suppress stdout reports");

  std::string scenario;
  int result = kPass;
  std::function<int()> run;

  auto* rig = app.add_subcommand("check-rigidity", "Rank test of the heterogeneous rigidity matrix");
  std::string at = "equilibrium";
  rig->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);
  rig->add_option("--at", at, "equilibrium or initial")->check(CLI::IsMember({"equilibrium", "initial"}));
  rig->callback([&] { run = [&] { return cmd_check_rigidity(gl, scenario, at); }; });

  auto* per = app.add_subcommand("check-persistence", "Rigidity plus Monte-Carlo constraint consistency");
  int trials = 200;
  std::optional<double> eps;
  per->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);
  per->add_option("--trials", trials)->check(CLI::PositiveNumber);
  per->add_option("--eps", eps)->check(CLI::PositiveNumber);
  per->callback([&] { run = [&] { return cmd_check_persistence(gl, scenario, trials, eps); }; });

  auto* gb = app.add_subcommand("gain-bound", "Certified gain range for a merge");
  std::string spec;
  gb->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);
  gb->add_option("--merge", spec, "case=..;anchors=i,j;kind=..;at=x,y[;gains=a,b]")->required();
  gb->callback([&] { run = [&] { return cmd_gain_bound(gl, scenario, spec); }; });

  auto* mg = app.add_subcommand("merge", "Insert one agent and write the extended scenario");
  MergeArgs margs;
  mg->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);
  mg->add_option("--case", margs.merge_case)->required();
  mg->add_option("--anchors", margs.anchors)->required();
  mg->add_option("--kind", margs.kind)->required();
  mg->add_option("--at", margs.at)->required();
  mg->add_option("--gains", margs.gains);
  mg->add_flag("--allow-uncertified", margs.allow_uncertified);
  mg->callback([&] { run = [&] { return cmd_merge(gl, scenario, margs); }; });

  auto* sm = app.add_subcommand("simulate", "RK4 closed-loop simulation");
  SimArgs sargs;
  sm->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);
  sm->add_option("--dt", sargs.dt);
  sm->add_option("--tmax", sargs.t_max);
  sm->add_option("--tol", sargs.tol);
  sm->add_option("--perturb", sargs.perturb, "Perturbation radius as a fraction of the smallest separation");
  sm->callback([&] { run = [&] { return cmd_simulate(gl, scenario, sargs); }; });

  auto* pl = app.add_subcommand("plot", "SVG from a trajectory CSV");
  std::string csv;
  pl->add_option("scenario", scenario)->required()->check(CLI::ExistingFile);
  pl->add_option("trajectory", csv)->required()->check(CLI::ExistingFile);
  pl->callback([&] { run = [&] { return cmd_plot(gl, scenario, csv); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    result = run();
  } catch (const FormationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return result;
}
