#include "hetform/persistence.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace hetform {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Residual {
  Eigen::Vector2d r{Eigen::Vector2d::Zero()};
  Eigen::Matrix2d jac{Eigen::Matrix2d::Zero()};
  int rows{1};
};

// Residual of one outgoing edge as a function of the tail position x.
Residual edge_residual(const Vec2& x, const Vec2& head, const DirectedEdge& e) {
  Residual out;
  const Vec2 z = head - x;
  const double d = z.norm();
  if (e.kind == SensingKind::Distance) {
    out.rows = 1;
    out.r(0) = d - e.distance;
    if (d > 0.0) out.jac.row(0) = -z.transpose() / d;
  } else {
    out.rows = 2;
    if (d < kCoincidenceThreshold) {
      out.r = -e.bearing;
      return out;
    }
    const Vec2 gb = z / d;
    out.r = gb - e.bearing;
    out.jac = -(Mat2::Identity() - gb * gb.transpose()) / d;
  }
  return out;
}

double residual_norm(const Residual& r) { return r.rows == 1 ? std::abs(r.r(0)) : r.r.norm(); }

struct Subproblem {
  std::vector<const DirectedEdge*> edges;
  std::vector<Vec2> heads;

  double objective(const Vec2& x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const auto r = edge_residual(x, heads[k], *edges[k]);
      s += r.rows == 1 ? r.r(0) * r.r(0) : r.r.squaredNorm();
    }
    return s;
  }

  double max_residual(const Vec2& x) const {
    double m = 0.0;
    for (std::size_t k = 0; k < edges.size(); ++k)
      m = std::max(m, residual_norm(edge_residual(x, heads[k], *edges[k])));
    return m;
  }

  // Minimum-norm Gauss-Newton steps.
  Vec2 gauss_newton(Vec2 x, int iters) const {
    for (int it = 0; it < iters; ++it) {
      Eigen::MatrixXd j(2 * static_cast<Eigen::Index>(edges.size()), 2);
      Eigen::VectorXd r(j.rows());
      Eigen::Index row = 0;
      for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto res = edge_residual(x, heads[k], *edges[k]);
        for (int q = 0; q < res.rows; ++q, ++row) {
          j.row(row) = res.jac.row(q);
          r(row) = res.r(q);
        }
      }
      j.conservativeResize(row, 2);
      r.conservativeResize(row);
      const Vec2 step = j.completeOrthogonalDecomposition().solve(-r);
      if (!step.allFinite()) break;
      x += step;
      if (step.norm() < 1e-14 * std::max(1.0, x.norm())) break;
    }
    return x;
  }
};

// Derivative-free local minimization of f from x0.
template <class F>
Vec2 nelder_mead(F f, const Vec2& x0, double step, int iters) {
  std::array<Vec2, 3> s{x0, x0 + Vec2(step, 0.0), x0 + Vec2(0.0, step)};
  std::array<double, 3> v{f(s[0]), f(s[1]), f(s[2])};
  for (int it = 0; it < iters; ++it) {
    std::array<int, 3> o{0, 1, 2};
    std::sort(o.begin(), o.end(), [&](int a, int b) { return v[a] < v[b]; });
    const int b = o[0], m = o[1], w = o[2];
    if (std::abs(v[w] - v[b]) < 1e-30 && (s[w] - s[b]).norm() < 1e-13) break;
    const Vec2 c = 0.5 * (s[b] + s[m]);
    const Vec2 xr = c + (c - s[w]);
    const double fr = f(xr);
    if (fr < v[b]) {
      const Vec2 xe = c + 2.0 * (c - s[w]);
      const double fe = f(xe);
      if (fe < fr) { s[w] = xe; v[w] = fe; } else { s[w] = xr; v[w] = fr; }
    } else if (fr < v[m]) {
      s[w] = xr;
      v[w] = fr;
    } else {
      const Vec2 xc = fr < v[w] ? Vec2(c + 0.5 * (xr - c)) : Vec2(c + 0.5 * (s[w] - c));
      const double fc = f(xc);
      if (fc < std::min(fr, v[w])) {
        s[w] = xc;
        v[w] = fc;
      } else {
        for (int k : {m, w}) {
          s[k] = s[b] + 0.5 * (s[k] - s[b]);
          v[k] = f(s[k]);
        }
      }
    }
  }
  return s[std::min_element(v.begin(), v.end()) - v.begin()];
}

// Closest point to `center` inside the ball that satisfies every edge of
// the subproblem to tol, if one is found.
std::optional<Vec2> solve_subset(const Subproblem& sp, const Vec2& center, double radius, double tol, int grid) {
  const auto inside = [&](const Vec2& x) { return (x - center).norm() <= radius * (1.0 + 1e-9); };
  const auto feasible = [&](const Vec2& x) { return inside(x) && sp.max_residual(x) <= tol; };
  const auto penalized = [&](const Vec2& x) {
    const double out = std::max(0.0, (x - center).norm() - radius);
    return sp.objective(x) + 1e6 * out * out;
  };

  std::vector<std::pair<double, Vec2>> seeds;
  seeds.emplace_back(-1.0, center);
  std::vector<std::pair<double, Vec2>> cells;
  const double h = 2.0 * radius / static_cast<double>(grid - 1);
  for (int a = 0; a < grid; ++a) {
    for (int b = 0; b < grid; ++b) {
      const Vec2 x = center + Vec2(-radius + a * h, -radius + b * h);
      if (!inside(x)) continue;
      cells.emplace_back(sp.objective(x), x);
    }
  }
  const std::size_t keep = std::min<std::size_t>(8, cells.size());
  std::partial_sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(keep), cells.end(),
                    [](const auto& l, const auto& r) { return l.first < r.first; });
  seeds.insert(seeds.end(), cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(keep));

  std::optional<Vec2> best;
  double best_disp = kInf;
  const auto consider = [&](const Vec2& x) {
    if (!feasible(x)) return;
    const double disp = (x - center).norm();
    if (disp < best_disp - 1e-12) {
      best = x;
      best_disp = disp;
    }
  };
  for (const auto& [val, x0] : seeds) {
    (void)val;
    Vec2 x = sp.gauss_newton(x0, 30);
    consider(x);
    if (feasible(x)) continue;
    x = nelder_mead(penalized, x0, 0.25 * h, 300);
    x = sp.gauss_newton(x, 30);
    consider(x);
  }
  return best;
}

}  // namespace

std::vector<std::size_t> active_edges(const Configuration& p, const TwoLayerGraph& g, double tol) {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < g.edge_count(); ++l)
    if (constraint_residual(p, g.edge(l)) <= tol) out.push_back(l);
  return out;
}

FittingMove best_fitting_move(const Configuration& p, const TwoLayerGraph& g, AgentId i, const FittingOptions& opts) {
  FittingMove move;
  move.position = p[i];
  const auto out = g.outgoing(i);
  for (auto l : out)
    if (constraint_residual(p, g.edge(l)) <= opts.tol) ++move.current_count;
  move.active_count = move.current_count;
  if (out.empty() || move.current_count == out.size()) return move;

  double min_sep = kInf;
  for (auto l : out) min_sep = std::min(min_sep, g.edge(l).desired_separation());
  const double radius = opts.radius_factor * min_sep;

  // Larger subsets first; the first size with any feasible subset wins.
  const std::size_t k = out.size();
  for (std::size_t size = k; size > move.current_count; --size) {
    std::optional<Vec2> best;
    double best_disp = kInf;
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != size) continue;
      Subproblem sp;
      for (std::size_t b = 0; b < k; ++b) {
        if (mask & (1u << b)) {
          sp.edges.push_back(&g.edge(out[b]));
          sp.heads.push_back(p[g.edge(out[b]).head]);
        }
      }
      const auto x = solve_subset(sp, p[i], radius, opts.tol, opts.grid);
      if (x && (*x - p[i]).norm() < best_disp) {
        best = x;
        best_disp = (*x - p[i]).norm();
      }
    }
    if (best) {
      move.position = *best;
      move.active_count = size;
      move.displacement = best_disp;
      return move;
    }
  }
  return move;
}

bool is_fitting_position(const Configuration& p, const TwoLayerGraph& g, AgentId i, const FittingOptions& opts) {
  const auto move = best_fitting_move(p, g, i, opts);
  return move.active_count <= move.current_count;
}

std::string_view to_string(LeaderStructure s) noexcept {
  switch (s) {
    case LeaderStructure::OneLeader: return "one_leader";
    case LeaderStructure::TwoColeaders: return "two_coleaders";
    case LeaderStructure::Invalid: return "invalid";
  }
  return "invalid";
}

DofLedger dof_ledger(const TwoLayerGraph& g, bool claimed_minimal) {
  DofLedger led;
  int twos = 0, ones = 0;
  for (AgentId i = 0; i < g.agent_count(); ++i) {
    const auto deg = g.out_degree(i);
    if (claimed_minimal && deg > 2) {
      std::ostringstream os;
      os << "agent " << i << " has " << deg << " outgoing constraints";
      throw FormationError(ErrorKind::OverConstrained, os.str());
    }
    const int dof = std::max(0, 2 - static_cast<int>(deg));
    led.per_agent_dof.push_back(dof);
    led.total_dof += dof;
    if (dof > 0) led.leaders.push_back(i);
    twos += dof == 2;
    ones += dof == 1;
  }
  if (twos == 1 && ones == 0) led.structure = LeaderStructure::OneLeader;
  else if (twos == 0 && ones == 2) led.structure = LeaderStructure::TwoColeaders;
  return led;
}

int relax_to_fitting(Configuration& p, const TwoLayerGraph& g, const FittingOptions& opts, int max_sweeps) {
  const auto led = dof_ledger(g);
  std::vector<AgentId> order(g.agent_count());
  for (AgentId i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](AgentId a, AgentId b) { return led.per_agent_dof[a] < led.per_agent_dof[b]; });
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    bool moved = false;
    for (AgentId i : order) {
      const auto move = best_fitting_move(p, g, i, opts);
      if (move.active_count > move.current_count) {
        p.set(i, move.position);
        moved = true;
      }
    }
    if (!moved) break;
  }
  return sweep;
}

double unit_uniform(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

Configuration perturb_in_disk(const Configuration& p, double r, std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  Configuration out = p;
  for (AgentId i = 0; i < p.size(); ++i) {
    const double rad = r * std::sqrt(unit_uniform(rng()));
    const double ang = 2.0 * std::numbers::pi * unit_uniform(rng());
    out.set(i, p[i] + rad * Vec2(std::cos(ang), std::sin(ang)));
  }
  return out;
}

ConsistencyVerdict check_consistency(const TwoLayerGraph& g, const Configuration& p_star,
                                     const ConsistencyOptions& opts) {
  for (std::size_t l = 0; l < g.edge_count(); ++l) {
    const double r = constraint_residual(p_star, g.edge(l));
    if (r > kActiveTolerance) {
      std::ostringstream os;
      os << "edge " << l << " is inactive at p* (residual " << r << ")";
      throw FormationError(ErrorKind::NotAnEquilibrium, os.str());
    }
  }
  ConsistencyVerdict v;
  v.seed = opts.seed;
  v.eps = opts.eps.value_or(g.edge_count() > 0 ? 0.2 * min_desired_separation(g) : 0.0);
  FittingOptions fit;
  fit.tol = opts.tol;

  const double witness_radius = opts.witness_radius_factor * v.eps;
  for (int t = 0; t < opts.trials; ++t) {
    v.trials = t + 1;
    Configuration p = perturb_in_disk(p_star, v.eps, opts.seed, static_cast<std::uint64_t>(t));
    const int sweeps = relax_to_fitting(p, g, fit, opts.max_sweeps);
    if (sweeps >= opts.max_sweeps || p.max_displacement(p_star) > witness_radius) {
      ++v.inconclusive;
      continue;
    }
    double worst = 0.0;
    std::size_t worst_edge = 0;
    for (std::size_t l = 0; l < g.edge_count(); ++l) {
      const double r = constraint_residual(p, g.edge(l));
      if (r > worst) {
        worst = r;
        worst_edge = l;
      }
    }
    if (worst > opts.tol) {
      v.consistent = false;
      v.witness = p;
      v.max_violation = worst;
      v.counterexample_trial = t;
      v.violated_edge = worst_edge;
      return v;
    }
    v.max_violation = std::max(v.max_violation, worst);
  }
  return v;
}

PersistenceReport check_persistence(const TwoLayerGraph& g, const Configuration& p_star,
                                    const ConsistencyOptions& opts) {
  PersistenceReport rep;
  rep.dof = dof_ledger(g);
  rep.rigidity = analyze_rigidity(p_star, g);
  rep.consistency = check_consistency(g, p_star, opts);
  rep.persistent = rep.rigidity.is_infinitesimally_rigid && rep.consistency.consistent;
  return rep;
}

}  // namespace hetform
