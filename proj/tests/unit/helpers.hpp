#pragma once

#include <cmath>
#include <random>
#include <string>

#include <doctest.h>

#include "hetform/errors.hpp"
#include "hetform/graph.hpp"
#include "hetform/scenario.hpp"

namespace testing {

inline std::string scenario_path(const std::string& name) { return std::string(HETFORM_SCENARIO_DIR) + "/" + name; }

inline hetform::Scenario load(const std::string& name) { return hetform::parse_scenario(scenario_path(name)); }

template <class F>
hetform::ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const hetform::FormationError& e) {
    return e.kind();
  }
  FAIL("expected FormationError");
  return hetform::ErrorKind::NonFinite;
}

// Random framework with n agents: a random spanning tree plus extra edges,
// mixed sensing kinds, desired values taken from p.
inline hetform::TwoLayerGraph random_graph(std::mt19937_64& rng, const hetform::Configuration& p, std::size_t extra) {
  using namespace hetform;
  const std::size_t n = p.size();
  std::vector<DirectedEdge> edges;
  std::uniform_real_distribution<double> gain(0.5, 4.0);
  std::bernoulli_distribution coin(0.5);
  auto add = [&](AgentId i, AgentId j) {
    for (const auto& e : edges) {
      if ((e.tail == i && e.head == j) || (e.tail == j && e.head == i)) return;
    }
    const Vec2 z = p[j] - p[i];
    if (coin(rng)) edges.push_back(DirectedEdge::make_distance(i, j, z.norm(), gain(rng)));
    else edges.push_back(DirectedEdge::make_bearing(i, j, z.normalized(), gain(rng), z.norm()));
  };
  for (AgentId j = 1; j < n; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j - 1);
    if (coin(rng)) add(j, pick(rng));
    else add(pick(rng), j);
  }
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  for (std::size_t k = 0; k < extra; ++k) {
    const auto i = any(rng), j = any(rng);
    if (i != j) add(i, j);
  }
  return TwoLayerGraph(n, edges);
}

inline hetform::Configuration random_configuration(std::mt19937_64& rng, std::size_t n, double spread = 5.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  hetform::Configuration p(n);
  for (std::size_t i = 0; i < n; ++i) p.set(i, {u(rng), u(rng)});
  return p;
}

}  // namespace testing
