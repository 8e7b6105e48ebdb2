#include "hetform/stability.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>

#include "hetform/control.hpp"

namespace hetform {

namespace {

using Eigen::Index;

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq(double x) { return x * x; }

}  // namespace

std::string_view to_string(MergeCase c) noexcept {
  switch (c) {
    case MergeCase::TwoColeaders: return "two_coleaders";
    case MergeCase::OneLeader: return "one_leader";
    case MergeCase::Unilateral: return "unilateral";
  }
  return "unknown";
}

std::optional<MergeCase> parse_merge_case(std::string_view text) noexcept {
  if (text == "two_coleaders" || text == "two-coleaders" || text == "TwoColeaders") return MergeCase::TwoColeaders;
  if (text == "one_leader" || text == "one-leader" || text == "OneLeader") return MergeCase::OneLeader;
  if (text == "unilateral" || text == "Unilateral") return MergeCase::Unilateral;
  return std::nullopt;
}

double effective_angle(SensingKind kind, const Vec2& z_star) {
  const double a = angle_of(z_star);
  if (kind == SensingKind::Distance) return a;
  return angle_of(Vec2(std::cos(a + std::numbers::pi / 2), std::sin(a + std::numbers::pi / 2)));
}

Mat2 projection_inverse(const ProjectionTerm& t1, const ProjectionTerm& t2) {
  const double s = std::sin(t1.alpha - t2.alpha);
  if (std::abs(s) <= 1e-9) {
    throw FormationError(ErrorKind::SingularCollinear, "projection directions are collinear");
  }
  const Vec2 n1 = t1.normal(), n2 = t2.normal();
  return (t1.k * n1 * n1.transpose() + t2.k * n2 * n2.transpose()) / (t1.k * t2.k * s * s);
}

Mat2 projection_sum(std::span<const ProjectionTerm> terms) {
  Mat2 p = Mat2::Zero();
  for (const auto& t : terms) p += t.weighted();
  return p;
}

ProjectionEigenvalues projection_sum_eigenvalues(std::span<const ProjectionTerm> terms) {
  double sum = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    sum += terms[i].k;
    for (std::size_t j = i + 1; j < terms.size(); ++j)
      pairs += terms[i].k * terms[j].k * sq(std::sin(terms[i].alpha - terms[j].alpha));
  }
  const double disc = std::sqrt(std::max(0.0, sum * sum / 4.0 - pairs));
  return {sum / 2.0 + disc, sum / 2.0 - disc};
}

LinearizedMergeSystem LinearizedMergeSystem::from_blocks(MergeCase c, const Eigen::MatrixXd& a, const Mat2& b,
                                                         const Mat2& cc, const Mat2& d) {
  LinearizedMergeSystem sys;
  sys.merge_case = c;
  sys.A = a;
  sys.B = c == MergeCase::Unilateral ? Mat2::Zero() : b;
  sys.C = cc;
  sys.D = d;
  const Index nx = a.rows();
  sys.coupling_x = Eigen::MatrixXd::Zero(nx, 2);
  sys.coupling_y = Eigen::MatrixXd::Zero(2, nx);
  if (nx >= 2) {
    sys.coupling_x.bottomRows<2>() = sys.B;
    sys.coupling_y.rightCols<2>() = sys.C;
  }
  return sys;
}

bool LinearizedMergeSystem::single_block_coupling(double tol) const {
  const Index nx = A.rows();
  if (nx <= 2) return true;
  return coupling_x.topRows(nx - 2).cwiseAbs().maxCoeff() <= tol &&
         coupling_y.leftCols(nx - 2).cwiseAbs().maxCoeff() <= tol;
}

Eigen::MatrixXd assemble_block_matrix(const LinearizedMergeSystem& sys) {
  const Index nx = sys.A.rows();
  Eigen::MatrixXd m(nx + 2, nx + 2);
  m.topLeftCorner(nx, nx) = -sys.A;
  m.topRightCorner(nx, 2) = sys.coupling_x;
  m.bottomLeftCorner(2, nx) = sys.coupling_y;
  m.bottomRightCorner<2, 2>() = -sys.D;
  return m;
}

double max_real_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return -kInf;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().real().maxCoeff();
}

double min_sym_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return kInf;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs) {
  const Index n = a.rows();
  const Eigen::MatrixXd at = a.transpose();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n * n, n * n);
  // vec(A^T Q) = (I kron A^T) vec Q, vec(Q A) = (A^T kron I) vec Q
  for (Index i = 0; i < n; ++i) {
    k.block(i * n, i * n, n, n) += at;
    for (Index j = 0; j < n; ++j) k.block(i * n, j * n, n, n).diagonal().array() += at(i, j);
  }
  const Eigen::VectorXd q = k.partialPivLu().solve(rhs.reshaped());
  Eigen::MatrixXd out = q.reshaped(n, n);
  return 0.5 * (out + out.transpose());
}

CriterionReport evaluate_criterion(const LinearizedMergeSystem& sys) {
  CriterionReport rep;
  const Mat2 ds = 0.5 * (sys.D + sys.D.transpose());
  Eigen::SelfAdjointEigenSolver<Mat2> des(ds, Eigen::EigenvaluesOnly);
  const double dmin = des.eigenvalues()(0), dmax = des.eigenvalues()(1);
  if (!(dmin > 1e-12 * std::max(1.0, std::abs(dmax)))) {
    throw FormationError(ErrorKind::SingularCollinear, "D is singular or not positive definite");
  }
  rep.lambda_max_D_inv = 1.0 / dmin;

  const Index nx = sys.A.rows();
  rep.lambda_min_sym_A = min_sym_eigenvalue(sys.A + sys.A.transpose());
  rep.existing_hurwitz = nx == 0 || max_real_eigenvalue(-sys.A) < 0.0;

  const double scale = std::max({1.0, sys.A.cwiseAbs().maxCoeff(), sys.D.cwiseAbs().maxCoeff()});
  if (nx == 0 || sys.coupling_x.cwiseAbs().maxCoeff() <= 1e-14 * scale) {
    rep.triangular = true;
    rep.holds = rep.existing_hurwitz;
    rep.lambda_min_weight = rep.lambda_min_sym_A;
    return rep;
  }

  Eigen::MatrixXd g;
  if (rep.lambda_min_sym_A > 0.0) {
    rep.lambda_min_weight = rep.lambda_min_sym_A;
    g = sys.coupling_x + sys.coupling_y.transpose();
  } else if (rep.existing_hurwitz) {
    // V = x^T Q x + y^T y with A^T Q + Q A = 2I.
    const Eigen::MatrixXd q = solve_lyapunov(sys.A, 2.0 * Eigen::MatrixXd::Identity(nx, nx));
    rep.rebalanced = true;
    rep.lambda_min_weight = 2.0;
    g = q * sys.coupling_x + sys.coupling_y.transpose();
  } else {
    return rep;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
  rep.coupling_norm = svd.singularValues()(0);
  rep.lhs = 2.0 * rep.lambda_min_weight;
  rep.rhs = sq(rep.coupling_norm) * rep.lambda_max_D_inv;
  rep.holds = rep.lhs > rep.rhs;
  return rep;
}

bool stability_criterion(const LinearizedMergeSystem& sys) { return evaluate_criterion(sys).holds; }

LinearizedMergeSystem linearize_merge(const Eigen::MatrixXd& existing_A, MergeCase c, const MergeGeometry& geo) {
  if (std::abs(std::sin(geo.alpha_l - geo.alpha_l1)) <= 1e-9) {
    throw FormationError(ErrorKind::CollinearDesiredPlacement, "new agent is collinear with its anchors");
  }
  const ProjectionTerm p1{geo.alpha1, geo.k1}, pl{geo.alpha_l, geo.k_l}, pl1{geo.alpha_l1, geo.k_l1};
  const Mat2 d = pl1.weighted() + pl.weighted();
  Mat2 b = -pl.weighted();
  Mat2 cc = pl1.weighted();
  if (c == MergeCase::TwoColeaders) cc -= p1.weighted();
  auto sys = LinearizedMergeSystem::from_blocks(c, existing_A, b, cc, d);
  sys.theta = {wrap_angle(geo.alpha_l - geo.alpha_l1), wrap_angle(geo.alpha1 - geo.alpha_l1),
                wrap_angle(geo.alpha1 - geo.alpha_l)};
  return sys;
}

bool GainBound::certifies(double k) const {
  return condition_holds && (!lower || k > *lower) && (!upper || k < *upper);
}

void GainBound::require() const {
  if (!condition_holds) throw FormationError(ErrorKind::PreconditionViolated, details.advice);
}

double coleader_f(double mu, double theta1, double theta2, double theta3) {
  const double s1 = sq(std::sin(theta1)), s2 = sq(std::sin(theta2)), s3 = sq(std::sin(theta3));
  return mu / 2.0 + std::sqrt(std::max(0.0, mu * mu / 4.0 + mu * (s2 - s3) + s1));
}

namespace {

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  std::vector<double> g(points);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  return g;
}

// Boundary between x_in (predicate true) and x_out (false), bisected in log space.
template <class Pred>
double bisect_log(double x_in, double x_out, Pred pred, int iters) {
  double a = std::log(x_in), b = std::log(x_out);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (a + b);
    if (pred(std::exp(mid))) a = mid; else b = mid;
    if (std::abs(b - a) < 1e-14) break;
  }
  return std::exp(0.5 * (a + b));
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

GainBound gain_bound_two_coleaders(double lambda_min_A, double theta1, double theta2, double theta3, double k1) {
  const double s1 = std::sin(theta1);
  if (std::abs(s1) <= 1e-9) {
    throw FormationError(ErrorKind::CollinearDesiredPlacement, "sin(theta1) = 0: new agent collinear with anchors");
  }
  const double c1 = std::abs(std::cos(theta1));
  const auto f = [&](double mu) { return coleader_f(mu, theta1, theta2, theta3); };

  GainBound gb;
  gb.merge_case = MergeCase::TwoColeaders;
  gb.details.method = "closed form, two coleaders";
  gb.details.lambda_min_A = lambda_min_A;
  gb.details.reference_gain = k1;
  gb.details.lambda_max_BC = k1 * f(1.0);
  gb.details.lambda_max_D_inv = (1.0 + c1) / (k1 * s1 * s1);

  // Certified iff f(mu)^2 / mu < 2 lambda (1 - |c1|) / k1, with mu = k1 / k.
  const double r = 2.0 * lambda_min_A * (1.0 - c1) / k1;
  const auto h = [&](double mu) { return sq(f(mu)) / mu; };
  const auto grid = log_grid(1e-9, 1e9, 10001);
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (h(grid[i]) < h(grid[best])) best = i;
  const double hmin = h(grid[best]);
  if (hmin < r) {
    const auto ok = [&](double mu) { return h(mu) < r; };
    std::size_t lo = best, hi = best;
    while (lo > 0 && ok(grid[lo - 1])) --lo;
    while (hi + 1 < grid.size() && ok(grid[hi + 1])) ++hi;
    const double mu_lo = lo == 0 ? grid[0] : bisect_log(grid[lo], grid[lo - 1], ok, 200);
    const double mu_hi = hi + 1 == grid.size() ? grid.back() : bisect_log(grid[hi], grid[hi + 1], ok, 200);
    gb.condition_holds = true;
    gb.lower = k1 / mu_hi;
    if (lo != 0) gb.upper = k1 / mu_lo;
  } else {
    gb.details.required_multiplier = r > 0.0 ? hmin / r : kInf;
    gb.details.advice = "no equal new gain satisfies the criterion; lambda_min(A+A^T)/k1 must grow by a factor " +
                        format_double(hmin / std::max(r, 1e-300)) + " (change the existing gain ratios)";
  }

  // Form without gain weights in D^-1: 2 lambda (1 - |c1|) > f(mu)^2.
  const double lhs = 2.0 * lambda_min_A * (1.0 - c1);
  gb.details.published_precondition = lhs > s1 * s1;
  if (gb.details.published_precondition) {
    const auto ok = [&](double mu) { return lhs > sq(f(mu)); };
    double mu_bar = grid.back();
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!ok(grid[i])) {
        mu_bar = bisect_log(grid[i - 1], grid[i], ok, 200);
        break;
      }
    }
    gb.details.mu_bar = mu_bar;
    gb.details.published_form_bound = k1 / mu_bar;
  }
  return gb;
}

GainBound gain_bound_one_leader(double lambda_min_A, double theta) {
  const double s = std::sin(theta);
  if (std::abs(s) <= 1e-9) {
    throw FormationError(ErrorKind::CollinearDesiredPlacement, "sin(theta) = 0: new agent collinear with anchors");
  }
  const double c = std::abs(std::cos(theta));
  GainBound gb;
  gb.merge_case = MergeCase::OneLeader;
  gb.details.method = "closed form, one leader";
  gb.details.lambda_min_A = lambda_min_A;
  gb.details.reference_gain = 1.0;
  gb.details.lambda_max_BC = std::abs(s);
  gb.details.lambda_max_D_inv = (1.0 + c) / (s * s);
  gb.details.published_precondition = 2.0 * lambda_min_A > 1.0 + c;
  // Certified iff 2 lambda > k (1 + |cos theta|).
  if (lambda_min_A > 0.0) {
    gb.condition_holds = true;
    gb.upper = 2.0 * lambda_min_A / (1.0 + c);
  } else {
    gb.details.advice = "existing network has lambda_min(A+A^T) <= 0; no equal new gain is certified";
  }
  if (!gb.details.published_precondition && lambda_min_A > 0.0) {
    gb.details.required_multiplier = (1.0 + c) / (2.0 * lambda_min_A);
  }
  return gb;
}

GainBound gain_bound_unilateral() {
  GainBound gb;
  gb.merge_case = MergeCase::Unilateral;
  gb.condition_holds = true;
  gb.details.method = "block triangular";
  return gb;
}

GainBound gain_bound_numeric(const std::function<LinearizedMergeSystem(double)>& build, MergeCase c, double k_min,
                             double k_max) {
  const auto points = static_cast<std::size_t>(std::ceil(100.0 * std::log10(k_max / k_min))) + 1;
  const auto grid = log_grid(k_min, k_max, points);
  const auto eval = [&](double k) -> std::optional<CriterionReport> {
    try {
      return evaluate_criterion(build(k));
    } catch (const FormationError& e) {
      if (e.kind() == ErrorKind::SingularCollinear) return std::nullopt;
      throw;
    }
  };
  const auto ok = [&](double k) {
    const auto r = eval(k);
    return r && r->holds;
  };

  std::vector<char> flags(grid.size());
  double best_ratio = 0.0;
  double lambda_a = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto r = eval(grid[i]);
    flags[i] = r && r->holds;
    if (r) {
      lambda_a = r->lambda_min_sym_A;
      if (r->triangular) best_ratio = kInf;
      else if (r->rhs > 0.0) best_ratio = std::max(best_ratio, r->lhs / r->rhs);
    }
  }

  std::size_t run_lo = 0, run_hi = 0, best_len = 0;
  for (std::size_t i = 0; i < grid.size();) {
    if (!flags[i]) { ++i; continue; }
    std::size_t j = i;
    while (j + 1 < grid.size() && flags[j + 1]) ++j;
    if (j - i + 1 > best_len) {
      best_len = j - i + 1;
      run_lo = i;
      run_hi = j;
    }
    i = j + 1;
  }

  GainBound gb;
  gb.merge_case = c;
  gb.details.method = "numeric scan of the assembled linearization";
  gb.details.lambda_min_A = lambda_a;
  if (best_len == 0) {
    if (best_ratio > 0.0) gb.details.required_multiplier = 1.0 / best_ratio;
    gb.details.advice = "no equal new gain in [" + format_double(k_min) + ", " + format_double(k_max) +
                        "] satisfies the criterion; best lhs/rhs = " + format_double(best_ratio);
    gb.details.reference_gain = 1.0;
  } else {
    gb.condition_holds = true;
    if (run_lo > 0) gb.lower = bisect_log(grid[run_lo], grid[run_lo - 1], ok, 80);
    if (run_hi + 1 < grid.size()) gb.upper = bisect_log(grid[run_hi], grid[run_hi + 1], ok, 80);
    if (gb.lower && gb.upper) gb.details.reference_gain = std::sqrt(*gb.lower * *gb.upper);
    else if (gb.lower) gb.details.reference_gain = 2.0 * *gb.lower;
    else if (gb.upper) gb.details.reference_gain = 0.5 * *gb.upper;
    else gb.details.reference_gain = 1.0;
  }
  if (const auto r = eval(gb.details.reference_gain)) {
    gb.details.lambda_min_A = r->lambda_min_sym_A;
    gb.details.lambda_max_BC = r->coupling_norm;
    gb.details.lambda_max_D_inv = r->lambda_max_D_inv;
    if (r->rebalanced) gb.details.method += " (Lyapunov-weighted existing coordinates)";
    if (r->triangular) gb.details.method = "block triangular";
  }
  return gb;
}

std::vector<TreeEdge> spanning_tree(const TwoLayerGraph& g, const TreeOptions& opts) {
  const std::size_t n = g.agent_count();
  std::vector<std::vector<AgentId>> adj(n);
  for (const auto& e : g.edges()) {
    adj[e.tail].push_back(e.head);
    adj[e.head].push_back(e.tail);
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }

  const auto bfs = [&](std::optional<AgentId> skip) {
    std::vector<TreeEdge> tree;
    if (n == 0) return tree;
    AgentId root = 0;
    if (skip && *skip == 0 && n > 1) root = 1;
    std::vector<bool> seen(n, false);
    seen[root] = true;
    if (skip) seen[*skip] = true;
    std::deque<AgentId> queue{root};
    while (!queue.empty()) {
      const AgentId a = queue.front();
      queue.pop_front();
      for (AgentId b : adj[a]) {
        if (!seen[b]) {
          seen[b] = true;
          tree.emplace_back(a, b);
          queue.push_back(b);
        }
      }
    }
    return tree;
  };

  if (opts.leaf && *opts.leaf < n && n > 1) {
    const AgentId leaf = *opts.leaf;
    auto tree = bfs(leaf);
    if (tree.size() == n - 2 && !adj[leaf].empty()) {
      AgentId parent = adj[leaf].front();
      if (opts.leaf_parent && std::binary_search(adj[leaf].begin(), adj[leaf].end(), *opts.leaf_parent)) {
        parent = *opts.leaf_parent;
      }
      tree.emplace_back(leaf, parent);
      return tree;
    }
  }
  return bfs(std::nullopt);
}

Eigen::MatrixXd tree_map(std::size_t agents, std::span<const TreeEdge> tree) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(2 * static_cast<Index>(tree.size()), 2 * static_cast<Index>(agents));
  for (std::size_t r = 0; r < tree.size(); ++r) {
    const auto [from, to] = tree[r];
    t.block<2, 2>(2 * static_cast<Index>(r), 2 * static_cast<Index>(from)) = -Mat2::Identity();
    t.block<2, 2>(2 * static_cast<Index>(r), 2 * static_cast<Index>(to)) = Mat2::Identity();
  }
  return t;
}

EdgeLinearization numeric_edge_linearization(const TwoLayerGraph& g, const Configuration& p_star,
                                             const TreeOptions& opts) {
  if (!g.connected()) throw FormationError(ErrorKind::InvalidGraph, "graph is not connected");
  const Eigen::VectorXd u = assemble_control(p_star, g);
  if (u.norm() > 1e-8) {
    std::ostringstream os;
    os << "||u(p*)|| = " << u.norm() << " > 1e-8";
    throw FormationError(ErrorKind::NotAnEquilibrium, os.str());
  }
  EdgeLinearization lin;
  lin.tree_edges = spanning_tree(g, opts);
  lin.tree = tree_map(g.agent_count(), lin.tree_edges);
  lin.position_jacobian = control_jacobian(p_star, g);
  const Eigen::MatrixXd& t = lin.tree;
  const Eigen::MatrixXd t_pinv = t.transpose() * (t * t.transpose()).inverse();
  lin.A = -(t * lin.position_jacobian * t_pinv);
  return lin;
}

}  // namespace hetform
