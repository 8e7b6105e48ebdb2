#pragma once

// Per-edge gradient control laws and the assembled closed-loop input.

#include <Eigen/Dense>

#include "hetform/graph.hpp"

namespace hetform {

/// k * (||z||^2 - d*^2) * z / (2 d*^2): pulls the tail toward the head when
/// the edge is too long, pushes it away when too short.
Vec2 distance_control_term(const Vec2& z, double d_star, double k);

/// k * ||z*|| * (g - g*).
Vec2 bearing_control_term(const Vec2& g, const Vec2& g_star, double z_star_norm, double k);

/// Stacked u (2n) with u_i summed over edges whose tail is i, in edge order.
Eigen::VectorXd assemble_control(const Configuration& p, const TwoLayerGraph& g);

/// du/dp (2n x 2n), analytic.
Eigen::MatrixXd control_jacobian(const Configuration& p, const TwoLayerGraph& g);

/// Potential whose negative tail gradient is the distance term:
/// k e^2 / (8 d*^2).
double distance_potential(const Vec2& z, double d_star, double k);

}  // namespace hetform
