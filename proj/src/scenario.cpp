#include "hetform/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

#include <json.hpp>

namespace hetform {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
using PathElem = std::variant<std::string, std::size_t>;
using Path = std::vector<PathElem>;

std::string path_string(const Path& path) {
  std::string out;
  for (const auto& e : path) {
    if (const auto* k = std::get_if<std::string>(&e)) {
      if (!out.empty()) out += '.';
      out += *k;
    } else {
      out += '[' + std::to_string(std::get<std::size_t>(e)) + ']';
    }
  }
  return out.empty() ? "<root>" : out;
}

// Walks already-valid JSON text to find the line where a path starts.
class Locator {
 public:
  explicit Locator(std::string_view s) : s_(s) {}

  std::optional<int> find(const Path& path) {
    for (std::size_t len = path.size() + 1; len-- > 0;) {
      i_ = 0;
      line_ = 1;
      if (auto l = descend(path, 0, len)) return l;
    }
    return std::nullopt;
  }

 private:
  std::optional<int> descend(const Path& path, std::size_t depth, std::size_t len) {
    ws();
    if (i_ >= s_.size()) return std::nullopt;
    if (depth == len) return line_;
    if (const auto* key = std::get_if<std::string>(&path[depth])) {
      if (s_[i_] != '{') return std::nullopt;
      ++i_;
      while (true) {
        ws();
        if (i_ >= s_.size() || s_[i_] == '}') return std::nullopt;
        const std::string k = read_string();
        ws();
        ++i_;  // ':'
        if (k == *key) return descend(path, depth + 1, len);
        skip_value();
        ws();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
      }
    }
    const std::size_t want = std::get<std::size_t>(path[depth]);
    if (s_[i_] != '[') return std::nullopt;
    ++i_;
    for (std::size_t k = 0;; ++k) {
      ws();
      if (i_ >= s_.size() || s_[i_] == ']') return std::nullopt;
      if (k == want) return descend(path, depth + 1, len);
      skip_value();
      ws();
      if (i_ < s_.size() && s_[i_] == ',') ++i_;
    }
  }

  void ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\r' || s_[i_] == '\n')) {
      if (s_[i_] == '\n') ++line_;
      ++i_;
    }
  }

  std::string read_string() {
    std::string out;
    if (i_ >= s_.size() || s_[i_] != '"') return out;
    ++i_;
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\') ++i_;
      if (i_ < s_.size()) out += s_[i_++];
    }
    ++i_;
    return out;
  }

  void skip_value() {
    ws();
    if (i_ >= s_.size()) return;
    const char c = s_[i_];
    if (c == '"') {
      read_string();
    } else if (c == '{' || c == '[') {
      const char close = c == '{' ? '}' : ']';
      ++i_;
      while (true) {
        ws();
        if (i_ >= s_.size()) return;
        if (s_[i_] == close) {
          ++i_;
          return;
        }
        if (c == '{') {
          read_string();
          ws();
          ++i_;
        }
        skip_value();
        ws();
        if (i_ < s_.size() && s_[i_] == ',') ++i_;
      }
    } else {
      while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' && s_[i_] != '\n' && s_[i_] != ' ')
        ++i_;
    }
  }

  std::string_view s_;
  std::size_t i_{0};
  int line_{1};
};

class Reader {
 public:
  Reader(std::string_view text, std::string_view origin) : text_(text), origin_(origin) {}

  [[noreturn]] void fail(ErrorKind kind, const Path& path, const std::string& msg) const {
    std::ostringstream os;
    os << origin_;
    if (const auto line = Locator(text_).find(path)) os << ':' << *line;
    os << ": " << path_string(path) << ": " << msg;
    throw FormationError(kind, os.str());
  }

  const json& field(const json& obj, const Path& at, const std::string& key) const {
    if (!obj.contains(key)) fail(ErrorKind::SchemaError, at, "missing field \"" + key + "\"");
    return obj.at(key);
  }

  double number(const json& v, const Path& at) const {
    if (!v.is_number()) fail(ErrorKind::SchemaError, at, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(ErrorKind::ValidationError, at, "value is not finite");
    return x;
  }

  std::size_t index(const json& v, const Path& at) const {
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(ErrorKind::SchemaError, at, "expected a non-negative integer");
    return v.get<std::size_t>();
  }

  Vec2 vec2(const json& v, const Path& at) const {
    if (!v.is_array() || v.size() != 2) fail(ErrorKind::SchemaError, at, "expected [x, y]");
    auto p0 = at, p1 = at;
    p0.emplace_back(std::size_t{0});
    p1.emplace_back(std::size_t{1});
    return {number(v[0], p0), number(v[1], p1)};
  }

  Configuration points(const json& v, const Path& at, std::size_t n) const {
    if (!v.is_array()) fail(ErrorKind::SchemaError, at, "expected an array of [x, y]");
    if (v.size() != n) fail(ErrorKind::ValidationError, at, "expected " + std::to_string(n) + " positions");
    Configuration c(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto p = at;
      p.emplace_back(i);
      c.set(i, vec2(v[i], p));
    }
    return c;
  }

  Scenario read() const {
    json root;
    try {
      root = json::parse(text_);
    } catch (const json::parse_error& e) {
      int line = 1;
      for (std::size_t k = 0; k < std::min<std::size_t>(e.byte, text_.size()); ++k) line += text_[k] == '\n';
      std::ostringstream os;
      os << origin_ << ':' << line << ": invalid JSON: " << e.what();
      throw FormationError(ErrorKind::SchemaError, os.str());
    }
    const Path root_path;
    if (!root.is_object()) fail(ErrorKind::SchemaError, root_path, "expected an object");
    static const std::vector<std::string> known{"description", "agents", "agent_kinds", "edges",
                                                "initial_positions", "desired_positions", "sim"};
    for (const auto& [key, val] : root.items()) {
      (void)val;
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        fail(ErrorKind::SchemaError, Path{key}, "unknown field");
      }
    }

    Scenario sc;
    if (root.contains("description")) {
      if (!root["description"].is_string()) fail(ErrorKind::SchemaError, Path{"description"}, "expected a string");
      sc.description = root["description"].get<std::string>();
    }
    const std::size_t n = index(field(root, root_path, "agents"), Path{"agents"});
    if (n < 1) fail(ErrorKind::ValidationError, Path{"agents"}, "need at least one agent");

    std::vector<std::optional<SensingKind>> kinds;
    if (root.contains("agent_kinds")) {
      const auto& ak = root["agent_kinds"];
      if (!ak.is_array()) fail(ErrorKind::SchemaError, Path{"agent_kinds"}, "expected an array");
      if (ak.size() != n) fail(ErrorKind::ValidationError, Path{"agent_kinds"}, "expected one entry per agent");
      for (std::size_t i = 0; i < n; ++i) {
        const Path p{"agent_kinds", i};
        if (ak[i].is_null()) {
          kinds.emplace_back(std::nullopt);
          continue;
        }
        const auto k = ak[i].is_string() ? parse_sensing_kind(ak[i].get<std::string>()) : std::nullopt;
        if (!k) fail(ErrorKind::SchemaError, p, "expected \"distance\", \"bearing\" or null");
        kinds.emplace_back(k);
      }
    }

    const auto& edges_json = field(root, root_path, "edges");
    if (!edges_json.is_array()) fail(ErrorKind::SchemaError, Path{"edges"}, "expected an array");
    if (edges_json.empty()) fail(ErrorKind::ValidationError, Path{"edges"}, "need at least one edge");

    sc.initial_positions = points(field(root, root_path, "initial_positions"), Path{"initial_positions"}, n);
    if (root.contains("desired_positions")) {
      sc.desired_positions = points(root["desired_positions"], Path{"desired_positions"}, n);
    }

    std::vector<DirectedEdge> edges;
    for (std::size_t l = 0; l < edges_json.size(); ++l) {
      const Path at{"edges", l};
      const auto& ej = edges_json[l];
      if (!ej.is_object()) fail(ErrorKind::SchemaError, at, "expected an object");
      for (const auto& [key, val] : ej.items()) {
        (void)val;
        if (key != "tail" && key != "head" && key != "kind" && key != "desired" && key != "gain" && key != "scale") {
          fail(ErrorKind::SchemaError, Path{"edges", l, key}, "unknown field");
        }
      }
      const auto sub = [&](const char* k) { return Path{"edges", l, std::string(k)}; };
      DirectedEdge e;
      e.tail = index(field(ej, at, "tail"), sub("tail"));
      e.head = index(field(ej, at, "head"), sub("head"));
      const auto& kj = field(ej, at, "kind");
      const auto kind = kj.is_string() ? parse_sensing_kind(kj.get<std::string>()) : std::nullopt;
      if (!kind) fail(ErrorKind::SchemaError, sub("kind"), "expected \"distance\" or \"bearing\"");
      e.kind = *kind;
      e.gain = number(field(ej, at, "gain"), sub("gain"));
      if (e.tail >= n) fail(ErrorKind::ValidationError, sub("tail"), "agent id out of range");
      if (e.head >= n) fail(ErrorKind::ValidationError, sub("head"), "agent id out of range");
      if (e.tail == e.head) fail(ErrorKind::ValidationError, at, "self-loop");
      if (!(e.gain > 0.0)) fail(ErrorKind::ValidationError, sub("gain"), "gain must be positive");

      const auto& dj = field(ej, at, "desired");
      if (e.kind == SensingKind::Distance) {
        if (ej.contains("scale")) fail(ErrorKind::SchemaError, sub("scale"), "only bearing edges take a scale");
        e.distance = number(dj, sub("desired"));
        if (!(e.distance > 0.0)) fail(ErrorKind::ValidationError, sub("desired"), "distance must be positive");
        e.scale = e.distance;
      } else {
        e.bearing = vec2(dj, sub("desired"));
        if (std::abs(e.bearing.norm() - 1.0) > kBearingNormalizeTolerance) {
          fail(ErrorKind::ValidationError, sub("desired"), "bearing is not a unit vector");
        }
        e.bearing.normalize();
        if (ej.contains("scale")) {
          e.scale = number(ej["scale"], sub("scale"));
          if (!(e.scale > 0.0)) fail(ErrorKind::ValidationError, sub("scale"), "scale must be positive");
        } else if (sc.desired_positions) {
          e.scale = ((*sc.desired_positions)[e.head] - (*sc.desired_positions)[e.tail]).norm();
          if (!(e.scale > kCoincidenceThreshold)) fail(ErrorKind::ValidationError, at, "desired positions coincide");
        } else {
          fail(ErrorKind::ValidationError, at, "bearing edge needs \"scale\" or desired_positions");
        }
      }
      for (std::size_t k = 0; k < edges.size(); ++k) {
        if (edges[k].tail == e.tail && edges[k].head == e.head && edges[k].kind == e.kind) {
          fail(ErrorKind::ValidationError, at, "duplicate of edge " + std::to_string(k));
        }
      }
      edges.push_back(e);
    }
    sc.graph = TwoLayerGraph(n, std::move(edges), std::move(kinds));

    if (sc.desired_positions) {
      for (std::size_t l = 0; l < sc.graph.edge_count(); ++l) {
        const double r = constraint_residual(*sc.desired_positions, sc.graph.edge(l));
        if (r > 1e-6) {
          std::ostringstream os;
          os << "edge " << l << " is not satisfied at desired_positions (residual " << r << ")";
          fail(ErrorKind::ValidationError, Path{"desired_positions"}, os.str());
        }
      }
    }

    if (root.contains("sim")) {
      const auto& sj = root["sim"];
      if (!sj.is_object()) fail(ErrorKind::SchemaError, Path{"sim"}, "expected an object");
      for (const auto& [key, val] : sj.items()) {
        const Path p{"sim", key};
        if (key == "dt") sc.sim.dt = number(val, p);
        else if (key == "t_max") sc.sim.t_max = number(val, p);
        else if (key == "convergence_tol") sc.sim.convergence_tol = number(val, p);
        else if (key == "record_every") sc.sim.record_every = static_cast<int>(index(val, p));
        else fail(ErrorKind::SchemaError, p, "unknown field");
      }
      try {
        sc.sim.validate();
      } catch (const FormationError& e) {
        fail(ErrorKind::ValidationError, Path{"sim"}, e.what());
      }
    }
    return sc;
  }

 private:
  std::string_view text_;
  std::string_view origin_;
};

ojson point_json(const Vec2& v) { return ojson::array({v.x(), v.y()}); }

void write_points(std::ostream& os, const char* key, const Configuration& c) {
  os << "  \"" << key << "\": [\n";
  for (AgentId i = 0; i < c.size(); ++i) os << "    " << point_json(c[i]).dump() << (i + 1 < c.size() ? ",\n" : "\n");
  os << "  ]";
}

}  // namespace

Scenario parse_scenario_text(std::string_view text, std::string_view origin) {
  return Reader(text, origin).read();
}

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormationError(ErrorKind::SchemaError, path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path.string());
}

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream os;
  const auto& g = s.graph;
  os << "{\n";
  if (!s.description.empty()) os << "  \"description\": " << ojson(s.description).dump() << ",\n";
  os << "  \"agents\": " << g.agent_count() << ",\n";
  const auto& kinds = g.declared_kinds();
  if (std::any_of(kinds.begin(), kinds.end(), [](const auto& k) { return k.has_value(); })) {
    ojson arr = ojson::array();
    for (const auto& k : kinds) arr.push_back(k ? ojson(std::string(to_string(*k))) : ojson(nullptr));
    os << "  \"agent_kinds\": " << arr.dump() << ",\n";
  }
  os << "  \"edges\": [\n";
  for (std::size_t l = 0; l < g.edge_count(); ++l) {
    const auto& e = g.edge(l);
    ojson ej;
    ej["tail"] = e.tail;
    ej["head"] = e.head;
    ej["kind"] = std::string(to_string(e.kind));
    if (e.kind == SensingKind::Distance) ej["desired"] = e.distance;
    else ej["desired"] = point_json(e.bearing);
    ej["gain"] = e.gain;
    if (e.kind == SensingKind::Bearing) ej["scale"] = e.scale;
    os << "    " << ej.dump() << (l + 1 < g.edge_count() ? ",\n" : "\n");
  }
  os << "  ],\n";
  write_points(os, "initial_positions", s.initial_positions);
  if (s.desired_positions) {
    os << ",\n";
    write_points(os, "desired_positions", *s.desired_positions);
  }
  ojson sim;
  sim["dt"] = s.sim.dt;
  sim["t_max"] = s.sim.t_max;
  sim["convergence_tol"] = s.sim.convergence_tol;
  sim["record_every"] = s.sim.record_every;
  os << ",\n  \"sim\": " << sim.dump() << "\n}\n";
  return os.str();
}

void write_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormationError(ErrorKind::ValidationError, "cannot write " + path.string());
  out << serialize_scenario(s);
}

bool operator==(const Scenario& a, const Scenario& b) {
  const auto& ga = a.graph;
  const auto& gb = b.graph;
  if (a.description != b.description || ga.agent_count() != gb.agent_count() || ga.edge_count() != gb.edge_count() ||
      ga.declared_kinds() != gb.declared_kinds()) {
    return false;
  }
  for (std::size_t l = 0; l < ga.edge_count(); ++l) {
    const auto& x = ga.edge(l);
    const auto& y = gb.edge(l);
    if (x.tail != y.tail || x.head != y.head || x.kind != y.kind || x.gain != y.gain || x.scale != y.scale) return false;
    if (x.kind == SensingKind::Distance ? x.distance != y.distance : x.bearing != y.bearing) return false;
  }
  if (a.initial_positions.stacked() != b.initial_positions.stacked()) return false;
  if (a.desired_positions.has_value() != b.desired_positions.has_value()) return false;
  if (a.desired_positions && a.desired_positions->stacked() != b.desired_positions->stacked()) return false;
  return a.sim.dt == b.sim.dt && a.sim.t_max == b.sim.t_max && a.sim.convergence_tol == b.sim.convergence_tol &&
         a.sim.record_every == b.sim.record_every;
}

}  // namespace hetform
