#include "hetform/control.hpp"

namespace hetform {

Vec2 distance_control_term(const Vec2& z, double d_star, double k) {
  const double e = z.squaredNorm() - d_star * d_star;
  return k * e * z / (2.0 * d_star * d_star);
}

Vec2 bearing_control_term(const Vec2& g, const Vec2& g_star, double z_star_norm, double k) {
  return k * z_star_norm * (g - g_star);
}

double distance_potential(const Vec2& z, double d_star, double k) {
  const double e = z.squaredNorm() - d_star * d_star;
  return k * e * e / (8.0 * d_star * d_star);
}

Eigen::VectorXd assemble_control(const Configuration& p, const TwoLayerGraph& g) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(g.agent_count()));
  for (const auto& e : g.edges()) {
    const auto ti = 2 * static_cast<Eigen::Index>(e.tail);
    if (e.kind == SensingKind::Distance) {
      u.segment<2>(ti) += distance_control_term(p[e.head] - p[e.tail], e.distance, e.gain);
    } else {
      const auto geo = edge_geometry(p, e);
      u.segment<2>(ti) += bearing_control_term(geo.bearing, e.bearing, e.scale, e.gain);
    }
  }
  return u;
}

Eigen::MatrixXd control_jacobian(const Configuration& p, const TwoLayerGraph& g) {
  const auto n2 = 2 * static_cast<Eigen::Index>(g.agent_count());
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n2, n2);
  for (const auto& e : g.edges()) {
    Mat2 dz;
    if (e.kind == SensingKind::Distance) {
      const Vec2 z = p[e.head] - p[e.tail];
      const double d2 = e.distance * e.distance;
      dz = e.gain / (2.0 * d2) * (2.0 * z * z.transpose() + (z.squaredNorm() - d2) * Mat2::Identity());
    } else {
      const auto geo = edge_geometry(p, e);
      dz = e.gain * e.scale / geo.dist * (Mat2::Identity() - geo.bearing * geo.bearing.transpose());
    }
    const auto ti = 2 * static_cast<Eigen::Index>(e.tail);
    const auto hi = 2 * static_cast<Eigen::Index>(e.head);
    j.block<2, 2>(ti, hi) += dz;
    j.block<2, 2>(ti, ti) -= dz;
  }
  return j;
}

}  // namespace hetform
