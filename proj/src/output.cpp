#include "hetform/output.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace hetform {

namespace {

constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

void set_precision(std::ostream& os) { os.precision(17); }

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  set_precision(os);
  os << "t,agent,px,py\n";
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    const auto& p = traj.positions[s];
    for (AgentId i = 0; i < p.size(); ++i) os << traj.times[s] << ',' << i << ',' << p[i].x() << ',' << p[i].y() << '\n';
  }
}

void write_errors_csv(std::ostream& os, const Trajectory& traj) {
  set_precision(os);
  os << "t,edge,err\n";
  for (std::size_t s = 0; s < traj.times.size(); ++s)
    for (std::size_t l = 0; l < traj.errors[s].size(); ++l) os << traj.times[s] << ',' << l << ',' << traj.errors[s][l] << '\n';
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormationError(ErrorKind::ValidationError, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("t,agent,px,py", 0) != 0) {
    throw FormationError(ErrorKind::SchemaError, path.string() + ": line 1: expected header t,agent,px,py");
  }
  std::map<double, std::map<std::size_t, Vec2>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    double t, x, y;
    std::size_t a;
    char c1, c2, c3;
    if (!(ls >> t >> c1 >> a >> c2 >> x >> c3 >> y)) {
      throw FormationError(ErrorKind::SchemaError, path.string() + ": line " + std::to_string(lineno) + ": malformed row");
    }
    rows[t][a] = Vec2(x, y);
  }
  Trajectory tr;
  for (const auto& [t, agents] : rows) {
    Configuration c(agents.size());
    for (const auto& [a, q] : agents) {
      if (a >= agents.size()) throw FormationError(ErrorKind::SchemaError, "agent ids are not dense");
      c.set(a, q);
    }
    tr.times.push_back(t);
    tr.positions.push_back(std::move(c));
  }
  return tr;
}

std::string render_svg(const Trajectory& traj, const TwoLayerGraph& g, int width, int height) {
  std::ostringstream os;
  os.precision(6);
  if (traj.positions.empty()) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\"/>\n";
    return os.str();
  }
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : traj.positions) {
    for (AgentId i = 0; i < p.size(); ++i) {
      xmin = std::min(xmin, p[i].x());
      xmax = std::max(xmax, p[i].x());
      ymin = std::min(ymin, p[i].y());
      ymax = std::max(ymax, p[i].y());
    }
  }
  const double margin = 40.0;
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
  const double scale = std::min(width, height) - 2.0 * margin;
  const auto sx = [&](double x) { return margin + (x - xmin) / span * scale; };
  // SVG y grows downward.
  const auto sy = [&](double y) { return height - margin - (y - ymin) / span * scale; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  const auto& last = traj.positions.back();
  for (const auto& e : g.edges()) {
    if (e.tail >= last.size() || e.head >= last.size()) continue;
    os << "<line x1=\"" << sx(last[e.tail].x()) << "\" y1=\"" << sy(last[e.tail].y()) << "\" x2=\""
       << sx(last[e.head].x()) << "\" y2=\"" << sy(last[e.head].y()) << "\" stroke=\"#999\" stroke-width=\"1\""
       << (e.kind == SensingKind::Bearing ? " stroke-dasharray=\"4 3\"" : "") << "/>\n";
  }

  const std::size_t n = traj.positions.front().size();
  for (AgentId i = 0; i < n; ++i) {
    const char* color = kPalette[i % kPalette.size()];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const std::size_t stride = std::max<std::size_t>(1, traj.positions.size() / 2000);
    for (std::size_t s = 0; s < traj.positions.size(); s += stride)
      os << sx(traj.positions[s][i].x()) << ',' << sy(traj.positions[s][i].y()) << ' ';
    os << sx(last[i].x()) << ',' << sy(last[i].y()) << "\"/>\n";

    const Vec2 start = traj.positions.front()[i];
    os << "<circle cx=\"" << sx(start.x()) << "\" cy=\"" << sy(start.y()) << "\" r=\"5\" fill=\"none\" stroke=\""
       << color << "\" stroke-width=\"1.5\"/>\n";

    const double cx = sx(last[i].x()), cy = sy(last[i].y());
    os << "<polygon fill=\"" << color << "\" points=\"";
    for (int k = 0; k < 10; ++k) {
      const double r = k % 2 == 0 ? 8.0 : 3.5;
      const double a = -std::numbers::pi / 2 + k * std::numbers::pi / 5;
      os << cx + r * std::cos(a) << ',' << cy + r * std::sin(a) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << cx + 9 << "\" y=\"" << cy - 9 << "\" font-size=\"12\" fill=\"" << color << "\">R"
       << i + 1 << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace hetform
