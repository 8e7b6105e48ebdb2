#include "hetform/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>

namespace hetform {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::CoincidentAgents: return "CoincidentAgents";
    case ErrorKind::InvalidGraph: return "InvalidGraph";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::NotAnEquilibrium: return "NotAnEquilibrium";
    case ErrorKind::OverConstrained: return "OverConstrained";
    case ErrorKind::SingularCollinear: return "SingularCollinear";
    case ErrorKind::CollinearDesiredPlacement: return "CollinearDesiredPlacement";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::InvalidAnchors: return "InvalidAnchors";
    case ErrorKind::CoincidenceDuringSim: return "CoincidenceDuringSim";
    case ErrorKind::NonFinite: return "NonFinite";
  }
  return "Unknown";
}

std::string_view to_string(SensingKind kind) noexcept {
  return kind == SensingKind::Distance ? "distance" : "bearing";
}

std::optional<SensingKind> parse_sensing_kind(std::string_view text) noexcept {
  if (text == "distance") return SensingKind::Distance;
  if (text == "bearing") return SensingKind::Bearing;
  return std::nullopt;
}

DirectedEdge DirectedEdge::make_distance(AgentId tail, AgentId head, double desired, double gain) {
  DirectedEdge e;
  e.tail = tail;
  e.head = head;
  e.kind = SensingKind::Distance;
  e.distance = desired;
  e.scale = desired;
  e.gain = gain;
  return e;
}

DirectedEdge DirectedEdge::make_bearing(AgentId tail, AgentId head, const Vec2& desired, double gain,
                                        double scale) {
  DirectedEdge e;
  e.tail = tail;
  e.head = head;
  e.kind = SensingKind::Bearing;
  e.bearing = desired;
  e.scale = scale;
  e.gain = gain;
  return e;
}

Configuration::Configuration(Eigen::VectorXd stacked) : stacked_(std::move(stacked)) {
  if (stacked_.size() % 2 != 0) {
    throw FormationError(ErrorKind::ValidationError, "stacked configuration has odd length");
  }
}

Configuration::Configuration(std::initializer_list<Vec2> points)
    : stacked_(2 * static_cast<Eigen::Index>(points.size())) {
  Eigen::Index i = 0;
  for (const auto& q : points) {
    stacked_.segment<2>(2 * i++) = q;
  }
}

Configuration Configuration::from_points(std::span<const Vec2> points) {
  Configuration c(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) c.set(i, points[i]);
  return c;
}

Configuration Configuration::translated(const Vec2& t) const {
  Configuration c = *this;
  for (std::size_t i = 0; i < size(); ++i) c.set(i, (*this)[i] + t);
  return c;
}

Configuration Configuration::rotated(double angle) const {
  const Mat2 r = Eigen::Rotation2Dd(angle).toRotationMatrix();
  Configuration c = *this;
  for (std::size_t i = 0; i < size(); ++i) c.set(i, r * (*this)[i]);
  return c;
}

double Configuration::max_displacement(const Configuration& other) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < size(); ++i) worst = std::max(worst, ((*this)[i] - other[i]).norm());
  return worst;
}

namespace {

[[noreturn]] void invalid(std::size_t l, const std::string& msg) {
  std::ostringstream os;
  os << "edge " << l << ": " << msg;
  throw FormationError(ErrorKind::InvalidGraph, os.str());
}

}  // namespace

TwoLayerGraph::TwoLayerGraph(std::size_t agents, std::vector<DirectedEdge> edges,
                             std::vector<std::optional<SensingKind>> agent_kinds)
    : agents_(agents), edges_(std::move(edges)), kinds_(std::move(agent_kinds)) {
  if (!kinds_.empty() && kinds_.size() != agents_) {
    throw FormationError(ErrorKind::InvalidGraph, "agent_kinds must list one entry per agent");
  }
  if (kinds_.empty()) kinds_.assign(agents_, std::nullopt);

  for (std::size_t l = 0; l < edges_.size(); ++l) {
    auto& e = edges_[l];
    if (e.tail >= agents_ || e.head >= agents_) invalid(l, "agent id out of range");
    if (e.tail == e.head) invalid(l, "self-loop");
    if (!(e.gain > 0.0) || !std::isfinite(e.gain)) invalid(l, "gain must be positive");
    if (e.kind == SensingKind::Distance) {
      if (!(e.distance > 0.0) || !std::isfinite(e.distance)) invalid(l, "desired distance must be positive");
      e.scale = e.distance;
    } else {
      const double nrm = e.bearing.norm();
      if (!std::isfinite(nrm) || std::abs(nrm - 1.0) > kBearingNormalizeTolerance) {
        invalid(l, "desired bearing is not a unit vector");
      }
      e.bearing /= nrm;
      if (!(e.scale > 0.0) || !std::isfinite(e.scale)) invalid(l, "bearing scale must be positive");
    }
    for (std::size_t k = 0; k < l; ++k) {
      const auto& f = edges_[k];
      if (f.tail == e.tail && f.head == e.head && f.kind == e.kind) invalid(l, "duplicate edge");
    }
  }
}

std::size_t TwoLayerGraph::out_degree(AgentId i) const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [i](const DirectedEdge& e) { return e.tail == i; }));
}

std::vector<std::size_t> TwoLayerGraph::outgoing(AgentId i) const {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < edges_.size(); ++l)
    if (edges_[l].tail == i) out.push_back(l);
  return out;
}

std::optional<std::size_t> TwoLayerGraph::find_edge(AgentId tail, AgentId head) const {
  for (std::size_t l = 0; l < edges_.size(); ++l)
    if (edges_[l].tail == tail && edges_[l].head == head) return l;
  return std::nullopt;
}

bool TwoLayerGraph::linked(AgentId a, AgentId b) const {
  return find_edge(a, b).has_value() || find_edge(b, a).has_value();
}

std::optional<SensingKind> TwoLayerGraph::agent_kind(AgentId i) const {
  if (i < kinds_.size() && kinds_[i]) return kinds_[i];
  for (const auto& e : edges_)
    if (e.tail == i) return e.kind;
  return std::nullopt;
}

bool TwoLayerGraph::connected() const {
  if (agents_ <= 1) return true;
  std::vector<std::vector<AgentId>> adj(agents_);
  for (const auto& e : edges_) {
    adj[e.tail].push_back(e.head);
    adj[e.head].push_back(e.tail);
  }
  std::vector<bool> seen(agents_, false);
  std::deque<AgentId> queue{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!queue.empty()) {
    const AgentId a = queue.front();
    queue.pop_front();
    for (AgentId b : adj[a]) {
      if (!seen[b]) {
        seen[b] = true;
        ++count;
        queue.push_back(b);
      }
    }
  }
  return count == agents_;
}

TwoLayerGraph TwoLayerGraph::with_edges_appended(std::size_t agents, std::span<const DirectedEdge> extra,
                                                 std::optional<SensingKind> new_agent_kind) const {
  std::vector<DirectedEdge> edges = edges_;
  edges.insert(edges.end(), extra.begin(), extra.end());
  auto kinds = kinds_;
  kinds.resize(agents, new_agent_kind);
  return TwoLayerGraph(agents, std::move(edges), std::move(kinds));
}

double angle_of(const Vec2& v) {
  double a = std::atan2(v.y(), v.x());
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

double wrap_angle(double a) { return angle_of({std::cos(a), std::sin(a)}); }

EdgeGeometry edge_geometry(const Configuration& p, const DirectedEdge& e) {
  const Vec2 z = p[e.head] - p[e.tail];
  const double d = z.norm();
  if (!(d >= kCoincidenceThreshold)) {
    std::ostringstream os;
    os << "agents " << e.tail << " and " << e.head << " coincide (|z| = " << d << ")";
    throw FormationError(ErrorKind::CoincidentAgents, os.str());
  }
  return {z, d, z / d};
}

Eigen::MatrixXd incidence_matrix(const TwoLayerGraph& g) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.edge_count()),
                                            static_cast<Eigen::Index>(g.agent_count()));
  for (std::size_t l = 0; l < g.edge_count(); ++l) {
    const auto& e = g.edge(l);
    h(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(e.tail)) = -1.0;
    h(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(e.head)) = 1.0;
  }
  return h;
}

std::vector<EdgeError> edge_errors(const Configuration& p, const TwoLayerGraph& g) {
  std::vector<EdgeError> out;
  out.reserve(g.edge_count());
  for (const auto& e : g.edges()) {
    EdgeError err{e.kind};
    if (e.kind == SensingKind::Distance) {
      const double sq = (p[e.head] - p[e.tail]).squaredNorm();
      err.distance_error = sq - e.distance * e.distance;
    } else {
      err.bearing_error = edge_geometry(p, e).bearing - e.bearing;
    }
    out.push_back(err);
  }
  return out;
}

double constraint_residual(const Configuration& p, const DirectedEdge& e) {
  const Vec2 z = p[e.head] - p[e.tail];
  if (e.kind == SensingKind::Distance) return std::abs(z.norm() - e.distance);
  const double d = z.norm();
  if (d < kCoincidenceThreshold) return 2.0;
  return (z / d - e.bearing).norm();
}

std::vector<double> constraint_residuals(const Configuration& p, const TwoLayerGraph& g) {
  std::vector<double> r;
  r.reserve(g.edge_count());
  for (const auto& e : g.edges()) r.push_back(constraint_residual(p, e));
  return r;
}

double min_desired_separation(const TwoLayerGraph& g) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : g.edges()) best = std::min(best, e.desired_separation());
  return best;
}

TwoLayerGraph with_scales_from(const TwoLayerGraph& g, const Configuration& desired) {
  std::vector<DirectedEdge> edges = g.edges();
  for (auto& e : edges) {
    if (e.kind == SensingKind::Bearing) e.scale = edge_geometry(desired, e).dist;
  }
  return TwoLayerGraph(g.agent_count(), std::move(edges), g.declared_kinds());
}

}  // namespace hetform
