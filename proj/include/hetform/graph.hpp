#pragma once

// Two-layer directed sensing graph, configurations and edge geometry.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hetform/errors.hpp"

namespace hetform {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using AgentId = std::size_t;

/// Below this separation (length units) a bearing is undefined.
inline constexpr double kCoincidenceThreshold = 1e-9;

/// Desired bearings within this distance of unit norm are normalized on
/// construction; anything further off is rejected.
inline constexpr double kBearingNormalizeTolerance = 1e-6;

enum class SensingKind { Distance, Bearing };

std::string_view to_string(SensingKind kind) noexcept;
std::optional<SensingKind> parse_sensing_kind(std::string_view text) noexcept;

/// One directed constraint. The tail agent measures the head and moves.
///
/// Distance edges use `distance`; bearing edges use `bearing` (unit vector
/// from tail to head) and `scale`, the desired separation ||z*|| that the
/// bearing law multiplies its error by.
struct DirectedEdge {
  AgentId tail{0};
  AgentId head{0};
  SensingKind kind{SensingKind::Distance};
  double distance{0.0};
  Vec2 bearing{Vec2::UnitX()};
  double scale{1.0};
  double gain{1.0};

  static DirectedEdge make_distance(AgentId tail, AgentId head, double desired, double gain);
  static DirectedEdge make_bearing(AgentId tail, AgentId head, const Vec2& desired, double gain,
                                   double scale = 1.0);

  /// Separation the edge wants: `distance` or `scale`.
  double desired_separation() const noexcept {
    return kind == SensingKind::Distance ? distance : scale;
  }
};

/// Stacked planar positions p = [p_0^T ... p_{n-1}^T]^T.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::size_t agents) : stacked_(Eigen::VectorXd::Zero(2 * agents)) {}
  explicit Configuration(Eigen::VectorXd stacked);
  Configuration(std::initializer_list<Vec2> points);
  static Configuration from_points(std::span<const Vec2> points);

  std::size_t size() const noexcept { return static_cast<std::size_t>(stacked_.size() / 2); }
  Vec2 operator[](AgentId i) const { return stacked_.segment<2>(2 * static_cast<Eigen::Index>(i)); }
  void set(AgentId i, const Vec2& v) { stacked_.segment<2>(2 * static_cast<Eigen::Index>(i)) = v; }

  const Eigen::VectorXd& stacked() const noexcept { return stacked_; }
  Eigen::VectorXd& stacked() noexcept { return stacked_; }

  Configuration translated(const Vec2& t) const;
  Configuration rotated(double angle) const;
  /// max_i ||p_i - q_i||
  double max_displacement(const Configuration& other) const;

 private:
  Eigen::VectorXd stacked_;
};

/// Relative position of an edge's head with respect to its tail.
struct EdgeGeometry {
  Vec2 z;
  double dist;
  Vec2 bearing;
};

/// Per-edge formation error: ||z||^2 - d*^2 for distance edges, g - g* for
/// bearing edges.
struct EdgeError {
  SensingKind kind;
  double distance_error{0.0};
  Vec2 bearing_error{Vec2::Zero()};

  double magnitude() const noexcept {
    return kind == SensingKind::Distance ? std::abs(distance_error) : bearing_error.norm();
  }
};

class TwoLayerGraph {
 public:
  TwoLayerGraph() = default;

  /// Validates and normalizes the edge list; `agent_kinds` may be empty or
  /// contain one (optional) entry per agent. Throws InvalidGraph.
  TwoLayerGraph(std::size_t agents, std::vector<DirectedEdge> edges,
                std::vector<std::optional<SensingKind>> agent_kinds = {});

  std::size_t agent_count() const noexcept { return agents_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<DirectedEdge>& edges() const noexcept { return edges_; }
  const DirectedEdge& edge(std::size_t l) const { return edges_.at(l); }

  std::size_t out_degree(AgentId i) const;
  std::vector<std::size_t> outgoing(AgentId i) const;
  std::optional<std::size_t> find_edge(AgentId tail, AgentId head) const;
  bool linked(AgentId a, AgentId b) const;

  /// Declared kind, else the kind of the agent's outgoing edges.
  std::optional<SensingKind> agent_kind(AgentId i) const;
  const std::vector<std::optional<SensingKind>>& declared_kinds() const noexcept { return kinds_; }

  /// Connectivity of the underlying undirected graph.
  bool connected() const;

  TwoLayerGraph with_edges_appended(std::size_t agents, std::span<const DirectedEdge> extra,
                                    std::optional<SensingKind> new_agent_kind) const;

 private:
  std::size_t agents_{0};
  std::vector<DirectedEdge> edges_;
  std::vector<std::optional<SensingKind>> kinds_;
};

/// Counter-clockwise angle from +x in (-pi, pi].
double angle_of(const Vec2& v);
/// Angle wrapped into (-pi, pi].
double wrap_angle(double a);

EdgeGeometry edge_geometry(const Configuration& p, const DirectedEdge& e);

/// m x n matrix with -1 at the tail and +1 at the head of each edge row.
Eigen::MatrixXd incidence_matrix(const TwoLayerGraph& g);

std::vector<EdgeError> edge_errors(const Configuration& p, const TwoLayerGraph& g);

/// How far an edge is from its constraint in the units used for activity
/// and convergence checks: | ||z|| - d* | or ||g - g*||.
double constraint_residual(const Configuration& p, const DirectedEdge& e);
std::vector<double> constraint_residuals(const Configuration& p, const TwoLayerGraph& g);

/// Smallest desired separation over all edges.
double min_desired_separation(const TwoLayerGraph& g);

/// Copy of `g` whose bearing scales are ||p*_head - p*_tail||.
TwoLayerGraph with_scales_from(const TwoLayerGraph& g, const Configuration& desired);

}  // namespace hetform
