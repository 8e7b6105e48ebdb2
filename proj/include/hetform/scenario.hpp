#pragma once

// Scenario files: graph, initial and desired positions, simulation defaults.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "hetform/graph.hpp"
#include "hetform/sim.hpp"

namespace hetform {

struct Scenario {
  std::string description;
  TwoLayerGraph graph;
  Configuration initial_positions;
  std::optional<Configuration> desired_positions;
  SimParams sim;
};

/// Throws SchemaError (with line and field) or ValidationError.
Scenario parse_scenario_text(std::string_view text, std::string_view origin = "<string>");
Scenario parse_scenario(const std::filesystem::path& path);

/// Canonical field order, shortest round-trip floats.
std::string serialize_scenario(const Scenario& s);
void write_scenario(const Scenario& s, const std::filesystem::path& path);

bool operator==(const Scenario& a, const Scenario& b);

}  // namespace hetform
