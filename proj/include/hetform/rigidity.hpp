#pragma once

// Distance-bearing function, heterogeneous rigidity matrix and rank tests.

#include <vector>

#include <Eigen/Dense>

#include "hetform/graph.hpp"

namespace hetform {

/// Singular values above this fraction of the largest count toward rank.
inline constexpr double kRankTolerance = 1e-8;

/// [||z_1|| ... ||z_m||, g_1^T ... g_m^T]^T over every edge, length 3m.
Eigen::VectorXd distance_bearing_function(const Configuration& p, const TwoLayerGraph& g);

/// Analytic Jacobian of distance_bearing_function, 3m x 2n.
Eigen::MatrixXd rigidity_matrix(const Configuration& p, const TwoLayerGraph& g);

/// Only the constrained quantity per edge, in edge order: ||z|| for a
/// distance edge, g (two entries) for a bearing edge.
Eigen::VectorXd constraint_function(const Configuration& p, const TwoLayerGraph& g);

/// Jacobian of constraint_function. Used for the rigidity verdict.
Eigen::MatrixXd constraint_jacobian(const Configuration& p, const TwoLayerGraph& g);

struct RigidityReport {
  int rank{0};
  /// Orthonormal, sorted by descending |first component| then |second|,
  /// first nonzero entry positive.
  std::vector<Eigen::VectorXd> kernel_basis;
  bool is_infinitesimally_rigid{false};
  bool is_minimal{false};
  std::vector<double> singular_values;
  /// Rank of the full 3m x 2n rigidity_matrix, for reference.
  int full_matrix_rank{0};
  /// Largest distance of a kernel vector from the translation subspace.
  double kernel_translation_residual{0.0};
};

/// Numerical rank of `m` with the relative tolerance above.
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = kRankTolerance);

/// Deterministic orthonormal basis of the null space of `m`.
std::vector<Eigen::VectorXd> kernel_basis(const Eigen::MatrixXd& m, double rel_tol = kRankTolerance);

/// Distance of `v` from span{1 (x) e1, 1 (x) e2}.
double distance_from_translations(const Eigen::VectorXd& v);

RigidityReport analyze_rigidity(const Configuration& p, const TwoLayerGraph& g);

}  // namespace hetform
