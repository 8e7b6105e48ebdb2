#include "hetform/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hetform/control.hpp"
#include "hetform/persistence.hpp"

namespace hetform {

void SimParams::validate() const {
  const auto fail = [](const char* msg) { throw FormationError(ErrorKind::ValidationError, msg); };
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be positive");
  if (!(t_max >= dt) || !std::isfinite(t_max)) fail("t_max must be at least dt");
  if (!(convergence_tol > 0.0)) fail("convergence_tol must be positive");
  if (record_every < 1) fail("record_every must be at least 1");
}

double Trajectory::max_error(std::size_t sample) const {
  const auto& e = errors.at(sample);
  return e.empty() ? 0.0 : *std::max_element(e.begin(), e.end());
}

namespace {

Eigen::VectorXd velocity(const TwoLayerGraph& g, const Eigen::VectorXd& p, double t) {
  try {
    return assemble_control(Configuration(p), g);
  } catch (const FormationError& e) {
    if (e.kind() != ErrorKind::CoincidentAgents) throw;
    std::ostringstream os;
    os << "t = " << t << ": " << e.what();
    throw FormationError(ErrorKind::CoincidenceDuringSim, os.str());
  }
}

void record(Trajectory& tr, const TwoLayerGraph& g, const Eigen::VectorXd& p, double t) {
  Configuration c(p);
  tr.times.push_back(t);
  tr.errors.push_back(constraint_residuals(c, g));
  tr.positions.push_back(std::move(c));
}

}  // namespace

Trajectory simulate(const TwoLayerGraph& g, const Configuration& p0, const SimParams& params) {
  params.validate();
  if (p0.size() != g.agent_count()) {
    throw FormationError(ErrorKind::ValidationError, "initial configuration size does not match graph");
  }
  const auto steps = static_cast<long>(std::llround(params.t_max / params.dt));
  const double h = params.dt;

  Trajectory tr;
  Eigen::VectorXd p = p0.stacked();
  record(tr, g, p, 0.0);
  for (long s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * h;
    const Eigen::VectorXd k1 = velocity(g, p, t);
    const Eigen::VectorXd k2 = velocity(g, p + 0.5 * h * k1, t + 0.5 * h);
    const Eigen::VectorXd k3 = velocity(g, p + 0.5 * h * k2, t + 0.5 * h);
    const Eigen::VectorXd k4 = velocity(g, p + h * k3, t + h);
    p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!p.allFinite() || p.cwiseAbs().maxCoeff() > 1e12) {
      std::ostringstream os;
      os << "state diverged at t = " << t + h;
      throw FormationError(ErrorKind::NonFinite, os.str());
    }
    if ((s + 1) % params.record_every == 0 || s + 1 == steps) record(tr, g, p, static_cast<double>(s + 1) * h);
  }

  std::vector<double> maxes(tr.times.size());
  for (std::size_t i = 0; i < maxes.size(); ++i) maxes[i] = tr.max_error(i);
  std::size_t first_ok = maxes.size();
  while (first_ok > 0 && maxes[first_ok - 1] <= params.convergence_tol) --first_ok;
  if (first_ok < maxes.size()) tr.converged_at = tr.times[first_ok];
  tr.decay_rate = fit_decay_rate(tr.times, maxes);
  return tr;
}

std::optional<double> fit_decay_rate(const std::vector<double>& times, const std::vector<double>& max_errors) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < max_errors.size(); ++i)
    if (max_errors[i] > kErrorFloor && std::isfinite(max_errors[i])) idx.push_back(i);
  if (idx.size() < 6) return std::nullopt;
  const std::size_t start = idx.size() / 2;
  double st = 0, sy = 0, stt = 0, sty = 0;
  const auto cnt = static_cast<double>(idx.size() - start);
  for (std::size_t k = start; k < idx.size(); ++k) {
    const double t = times[idx[k]], y = std::log(max_errors[idx[k]]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double den = cnt * stt - st * st;
  if (!(std::abs(den) > 0.0)) return std::nullopt;
  return (cnt * sty - st * sy) / den;
}

ConvergenceReport verify_convergence(const Trajectory& traj, const TwoLayerGraph& g, double tol) {
  (void)g;
  ConvergenceReport rep;
  if (traj.times.empty()) return rep;
  rep.final_errors = traj.errors.back();
  rep.max_final_error = traj.max_error(traj.times.size() - 1);
  rep.decay_rate = traj.decay_rate;
  std::size_t first_ok = traj.times.size();
  while (first_ok > 0 && traj.max_error(first_ok - 1) <= tol) --first_ok;
  if (first_ok < traj.times.size()) rep.converged_at = traj.times[first_ok];
  const bool at_floor = rep.max_final_error <= kErrorFloor;
  rep.converged = rep.max_final_error <= tol && rep.converged_at.has_value() &&
                  ((rep.decay_rate && *rep.decay_rate < 0.0) || at_floor);
  return rep;
}

Configuration perturb(const Configuration& p, const TwoLayerGraph& g, double frac, std::uint64_t seed) {
  const double scale = g.edge_count() > 0 ? min_desired_separation(g) : 1.0;
  return perturb_in_disk(p, frac * scale, seed, 0);
}

}  // namespace hetform
