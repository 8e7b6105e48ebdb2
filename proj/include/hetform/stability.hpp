#pragma once

// Projection-matrix identities, edge-space linearization, the coupled
// stability criterion and merge gain bounds.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hetform/graph.hpp"

namespace hetform {

enum class MergeCase { TwoColeaders, OneLeader, Unilateral };

std::string_view to_string(MergeCase c) noexcept;
std::optional<MergeCase> parse_merge_case(std::string_view text) noexcept;

/// k * v v^T with v = (cos alpha, sin alpha).
struct ProjectionTerm {
  double alpha{0.0};
  double k{1.0};

  Vec2 direction() const { return {std::cos(alpha), std::sin(alpha)}; }
  /// v-bar = (sin alpha, -cos alpha)
  Vec2 normal() const { return {std::sin(alpha), -std::cos(alpha)}; }
  Mat2 projector() const { return direction() * direction().transpose(); }
  Mat2 weighted() const { return k * projector(); }
};

/// Angle of the projector an edge contributes to the linearized dynamics:
/// the desired direction for distance edges, its normal for bearing edges.
double effective_angle(SensingKind kind, const Vec2& z_star);

/// Inverse of k1 P1 + k2 P2 in closed form:
/// (k1 vb1 vb1^T + k2 vb2 vb2^T) / (k1 k2 sin^2(a1 - a2)).
Mat2 projection_inverse(const ProjectionTerm& t1, const ProjectionTerm& t2);

Mat2 projection_sum(std::span<const ProjectionTerm> terms);

struct ProjectionEigenvalues {
  double max{0.0};
  double min{0.0};
};

/// Closed-form spectrum of sum k_i P_i.
ProjectionEigenvalues projection_sum_eigenvalues(std::span<const ProjectionTerm> terms);

/// x' = -A x + coupling_x y,  y' = coupling_y x - D y.
///
/// For the three merge cases the couplings are nonzero only on the last
/// 2-block of x, where they equal B and C.
struct LinearizedMergeSystem {
  MergeCase merge_case{MergeCase::TwoColeaders};
  Eigen::MatrixXd A;
  Mat2 B{Mat2::Zero()};
  Mat2 C{Mat2::Zero()};
  Mat2 D{Mat2::Zero()};
  std::array<double, 3> theta{0.0, 0.0, 0.0};
  Eigen::MatrixXd coupling_x;
  Eigen::MatrixXd coupling_y;

  /// Places B and C on the last block (B omitted for Unilateral).
  static LinearizedMergeSystem from_blocks(MergeCase c, const Eigen::MatrixXd& a, const Mat2& b,
                                           const Mat2& cc, const Mat2& d);

  /// True when both couplings vanish outside the last block.
  bool single_block_coupling(double tol = 1e-12) const;
};

Eigen::MatrixXd assemble_block_matrix(const LinearizedMergeSystem& sys);

struct CriterionReport {
  bool holds{false};
  /// lambda_min(A + A^T) of the system as given.
  double lambda_min_sym_A{0.0};
  /// lambda_min of the x-weight used on the left-hand side (A + A^T, or 2I
  /// after rebalancing).
  double lambda_min_weight{0.0};
  double coupling_norm{0.0};
  double lambda_max_D_inv{0.0};
  double lhs{0.0};
  double rhs{0.0};
  /// x was reweighted by the Lyapunov solution of A because A + A^T is
  /// not positive definite.
  bool rebalanced{false};
  /// Certified from the block-triangular structure (no x <- y coupling).
  bool triangular{false};
  bool existing_hurwitz{false};
};

/// Evaluates 2 lambda_min(W) > sigma_max^2(G) lambda_max(D^-1) with G the
/// combined x-y coupling. Throws SingularCollinear if D is singular.
CriterionReport evaluate_criterion(const LinearizedMergeSystem& sys);
bool stability_criterion(const LinearizedMergeSystem& sys);

/// Desired angles (already effective) and gains of the three edges the
/// merge involves: the existing anchor link (1), anchor side (l) and new
/// agent side (l+1).
struct MergeGeometry {
  double alpha1{0.0};
  double alpha_l{0.0};
  double alpha_l1{0.0};
  double k1{1.0};
  double k_l{1.0};
  double k_l1{1.0};
};

LinearizedMergeSystem linearize_merge(const Eigen::MatrixXd& existing_A, MergeCase c, const MergeGeometry& geo);

struct GainBound {
  MergeCase merge_case{MergeCase::TwoColeaders};
  /// Certified equal new gains k_l = k_{l+1} lie strictly between lower and
  /// upper; a missing end is unbounded on that side.
  std::optional<double> lower;
  std::optional<double> upper;
  bool condition_holds{false};

  struct Details {
    double lambda_min_A{0.0};
    double reference_gain{0.0};
    double lambda_max_BC{0.0};
    double lambda_max_D_inv{0.0};
    std::optional<double> mu_bar;
    /// Bound obtained from the unweighted inverse, 2 lambda (1 - |cos th1|) > f^2(mu).
    std::optional<double> published_form_bound;
    bool published_precondition{false};
    /// Factor by which lambda_min(A+A^T)/k1 would have to grow for the
    /// criterion to become satisfiable.
    std::optional<double> required_multiplier;
    std::string method;
    std::string advice;
  } details;

  bool certifies(double k) const;
  /// Throws PreconditionViolated (with the advice) when no gain is certified.
  void require() const;
};

/// f(mu) = mu/2 + sqrt(mu^2/4 + mu (s2^2 - s3^2) + s1^2).
double coleader_f(double mu, double theta1, double theta2, double theta3);

GainBound gain_bound_two_coleaders(double lambda_min_A, double theta1, double theta2, double theta3, double k1);
GainBound gain_bound_one_leader(double lambda_min_A, double theta);
GainBound gain_bound_unilateral();

/// Certified range of equal new gains found by scanning the criterion of
/// build(k) over [k_min, k_max] on a log grid and bisecting the edges of the
/// widest certified run.
GainBound gain_bound_numeric(const std::function<LinearizedMergeSystem(double)>& build, MergeCase c,
                             double k_min = 1e-4, double k_max = 1e4);

/// Spanning-tree edge (from, to); its coordinate is p_to - p_from.
using TreeEdge = std::pair<AgentId, AgentId>;

struct TreeOptions {
  /// Agent to attach last, as a leaf, when the rest stays connected.
  std::optional<AgentId> leaf;
  /// Preferred neighbor to attach `leaf` to.
  std::optional<AgentId> leaf_parent;
};

/// BFS tree from the lowest non-leaf agent, neighbors in ascending order.
std::vector<TreeEdge> spanning_tree(const TwoLayerGraph& g, const TreeOptions& opts = {});

/// Maps stacked positions to tree edge coordinates.
Eigen::MatrixXd tree_map(std::size_t agents, std::span<const TreeEdge> tree);

struct EdgeLinearization {
  /// z' = -A z in tree edge coordinates.
  Eigen::MatrixXd A;
  Eigen::MatrixXd tree;
  std::vector<TreeEdge> tree_edges;
  Eigen::MatrixXd position_jacobian;
};

/// Throws NotAnEquilibrium if ||u(p*)|| > 1e-8, InvalidGraph if disconnected.
EdgeLinearization numeric_edge_linearization(const TwoLayerGraph& g, const Configuration& p_star,
                                             const TreeOptions& opts = {});

double max_real_eigenvalue(const Eigen::MatrixXd& m);
double min_sym_eigenvalue(const Eigen::MatrixXd& m);

/// Solves A^T Q + Q A = rhs (Kronecker form).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs);

}  // namespace hetform
