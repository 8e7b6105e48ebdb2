#pragma once

// Trajectory CSVs, run summaries and SVG trajectory plots.

#include <filesystem>
#include <ostream>
#include <string>

#include "hetform/graph.hpp"
#include "hetform/sim.hpp"

namespace hetform {

/// Header t,agent,px,py; one row per sample and agent.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
/// Header t,edge,err; one row per sample and edge.
void write_errors_csv(std::ostream& os, const Trajectory& traj);

/// Trajectory read back from a positions CSV (errors left empty).
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// Agent paths, circle at the start, star at the end, one color per agent,
/// final formation edges drawn thin.
std::string render_svg(const Trajectory& traj, const TwoLayerGraph& g, int width = 640, int height = 640);

}  // namespace hetform
