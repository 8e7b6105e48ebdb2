#pragma once

// Fixed-step RK4 integration of p' = u(p), convergence checks and fits.

#include <cstdint>
#include <optional>
#include <vector>

#include "hetform/graph.hpp"

namespace hetform {

struct SimParams {
  double dt{1e-3};
  double t_max{60.0};
  double convergence_tol{1e-3};
  int record_every{10};

  /// Throws ValidationError on dt <= 0, t_max < dt, tol <= 0, record_every < 1.
  void validate() const;
};

/// Samples below this error are treated as floor and left out of fits.
inline constexpr double kErrorFloor = 1e-12;

struct Trajectory {
  std::vector<double> times;
  std::vector<Configuration> positions;
  /// Per sample, per edge: | ||z|| - d* | or ||g - g*||.
  std::vector<std::vector<double>> errors;
  std::optional<double> converged_at;
  std::optional<double> decay_rate;

  double max_error(std::size_t sample) const;
};

/// Throws CoincidenceDuringSim or NonFinite.
Trajectory simulate(const TwoLayerGraph& g, const Configuration& p0, const SimParams& params = {});

/// Least-squares slope of log(max error) over the last half of the samples
/// that sit above the floor; empty with fewer than six such samples.
std::optional<double> fit_decay_rate(const std::vector<double>& times, const std::vector<double>& max_errors);

struct ConvergenceReport {
  bool converged{false};
  std::vector<double> final_errors;
  double max_final_error{0.0};
  std::optional<double> converged_at;
  std::optional<double> decay_rate;
};

/// Verdict: final errors within tol, converged_at set, and either a
/// negative decay rate or errors already at the floor.
ConvergenceReport verify_convergence(const Trajectory& traj, const TwoLayerGraph& g, double tol = 1e-3);

/// Seeded perturbation of every agent inside a disk of radius
/// frac * (smallest desired separation).
Configuration perturb(const Configuration& p, const TwoLayerGraph& g, double frac, std::uint64_t seed);

}  // namespace hetform
