#include "hetform/rigidity.hpp"

#include <algorithm>
#include <cmath>

namespace hetform {

namespace {

using Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

Mat2 perp_projector(const Vec2& g) { return Mat2::Identity() - g * g.transpose(); }

std::size_t constraint_rows(const TwoLayerGraph& g) {
  std::size_t rows = 0;
  for (const auto& e : g.edges()) rows += e.kind == SensingKind::Distance ? 1 : 2;
  return rows;
}

}  // namespace

Eigen::VectorXd distance_bearing_function(const Configuration& p, const TwoLayerGraph& g) {
  const std::size_t m = g.edge_count();
  Eigen::VectorXd f(3 * idx(m));
  for (std::size_t l = 0; l < m; ++l) {
    const auto geo = edge_geometry(p, g.edge(l));
    f(idx(l)) = geo.dist;
    f.segment<2>(idx(m + 2 * l)) = geo.bearing;
  }
  return f;
}

Eigen::MatrixXd rigidity_matrix(const Configuration& p, const TwoLayerGraph& g) {
  const std::size_t m = g.edge_count();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(3 * idx(m), 2 * idx(g.agent_count()));
  for (std::size_t l = 0; l < m; ++l) {
    const auto& e = g.edge(l);
    const auto geo = edge_geometry(p, e);
    const Index ti = 2 * idx(e.tail), hi = 2 * idx(e.head);
    r.block<1, 2>(idx(l), ti) = -geo.bearing.transpose();
    r.block<1, 2>(idx(l), hi) = geo.bearing.transpose();
    const Mat2 dg = perp_projector(geo.bearing) / geo.dist;
    r.block<2, 2>(idx(m + 2 * l), ti) = -dg;
    r.block<2, 2>(idx(m + 2 * l), hi) = dg;
  }
  return r;
}

Eigen::VectorXd constraint_function(const Configuration& p, const TwoLayerGraph& g) {
  Eigen::VectorXd f(idx(constraint_rows(g)));
  Index row = 0;
  for (const auto& e : g.edges()) {
    const auto geo = edge_geometry(p, e);
    if (e.kind == SensingKind::Distance) {
      f(row++) = geo.dist;
    } else {
      f.segment<2>(row) = geo.bearing;
      row += 2;
    }
  }
  return f;
}

Eigen::MatrixXd constraint_jacobian(const Configuration& p, const TwoLayerGraph& g) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(idx(constraint_rows(g)), 2 * idx(g.agent_count()));
  Index row = 0;
  for (const auto& e : g.edges()) {
    const auto geo = edge_geometry(p, e);
    const Index ti = 2 * idx(e.tail), hi = 2 * idx(e.head);
    if (e.kind == SensingKind::Distance) {
      r.block<1, 2>(row, ti) = -geo.bearing.transpose();
      r.block<1, 2>(row, hi) = geo.bearing.transpose();
      row += 1;
    } else {
      const Mat2 dg = perp_projector(geo.bearing) / geo.dist;
      r.block<2, 2>(row, ti) = -dg;
      r.block<2, 2>(row, hi) = dg;
      row += 2;
    }
  }
  return r;
}

namespace {

struct Svd {
  Eigen::VectorXd sigma;
  Eigen::MatrixXd v;
  int rank{0};
};

Svd decompose(const Eigen::MatrixXd& m, double rel_tol) {
  Svd out;
  const Index cols = m.cols();
  if (m.rows() == 0 || cols == 0) {
    out.sigma = Eigen::VectorXd::Zero(0);
    out.v = Eigen::MatrixXd::Identity(cols, cols);
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  out.sigma = svd.singularValues();
  out.v = svd.matrixV();
  const double smax = out.sigma.size() > 0 ? out.sigma(0) : 0.0;
  if (smax > 0.0) {
    for (Index i = 0; i < out.sigma.size(); ++i)
      if (out.sigma(i) > rel_tol * smax) ++out.rank;
  }
  return out;
}

}  // namespace

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) { return decompose(m, rel_tol).rank; }

std::vector<Eigen::VectorXd> kernel_basis(const Eigen::MatrixXd& m, double rel_tol) {
  const Svd svd = decompose(m, rel_tol);
  const Index n = m.cols();
  const Index k = n - svd.rank;
  std::vector<Eigen::VectorXd> basis;
  if (k <= 0) return basis;

  // Projector onto the null space is basis-independent; Gram-Schmidt on its
  // columns gives a basis that does not depend on the SVD's choices.
  const Eigen::MatrixXd nv = svd.v.rightCols(k);
  const Eigen::MatrixXd proj = nv * nv.transpose();
  for (Index j = 0; j < n && static_cast<Index>(basis.size()) < k; ++j) {
    Eigen::VectorXd v = proj.col(j);
    for (const auto& b : basis) v -= b.dot(v) * b;
    for (const auto& b : basis) v -= b.dot(v) * b;
    const double nrm = v.norm();
    if (nrm > 1e-6) basis.push_back(v / nrm);
  }

  for (auto& v : basis) {
    for (Index i = 0; i < v.size(); ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0) v = -v;
        break;
      }
    }
  }
  std::stable_sort(basis.begin(), basis.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double a0 = std::abs(a(0)), b0 = std::abs(b(0));
    if (std::abs(a0 - b0) > 1e-12) return a0 > b0;
    return a.size() > 1 && std::abs(a(1)) > std::abs(b(1)) + 1e-12;
  });
  return basis;
}

double distance_from_translations(const Eigen::VectorXd& v) {
  const Index n = v.size() / 2;
  if (n == 0) return 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (Index i = 0; i < n; ++i) mean += v.segment<2>(2 * i);
  mean /= static_cast<double>(n);
  double sq = 0.0;
  for (Index i = 0; i < n; ++i) sq += (v.segment<2>(2 * i) - mean).squaredNorm();
  return std::sqrt(sq);
}

RigidityReport analyze_rigidity(const Configuration& p, const TwoLayerGraph& g) {
  const Eigen::MatrixXd jc = constraint_jacobian(p, g);
  const Svd svd = decompose(jc, kRankTolerance);

  RigidityReport rep;
  rep.rank = svd.rank;
  rep.singular_values.assign(svd.sigma.data(), svd.sigma.data() + svd.sigma.size());
  rep.kernel_basis = kernel_basis(jc, kRankTolerance);
  for (const auto& v : rep.kernel_basis)
    rep.kernel_translation_residual = std::max(rep.kernel_translation_residual, distance_from_translations(v));

  const int n = static_cast<int>(g.agent_count());
  rep.is_infinitesimally_rigid = rep.rank == 2 * n - 2 && rep.kernel_basis.size() == 2 &&
                                 rep.kernel_translation_residual < 1e-8;
  if (n == 1) rep.is_infinitesimally_rigid = true;
  rep.is_minimal = rep.is_infinitesimally_rigid && static_cast<int>(g.edge_count()) == 2 * n - 2;
  rep.full_matrix_rank = numerical_rank(rigidity_matrix(p, g), kRankTolerance);
  return rep;
}

}  // namespace hetform
