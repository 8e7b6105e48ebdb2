#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "hetform/output.hpp"

using namespace hetform;
using testing::error_kind_of;

namespace {

const char* kMinimal = R"({
  "agents": 2,
  "edges": [
    {"tail": 0, "head": 1, "kind": "distance", "desired": 5, "gain": 3},
    {"tail": 1, "head": 0, "kind": "bearing", "desired": [1, 0], "gain": 3, "scale": 5}
  ],
  "initial_positions": [[5, 0], [0, 0]]
})";

std::string replaced(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

std::string message_of(const std::string& text) {
  try {
    parse_scenario_text(text, "s.json");
  } catch (const FormationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("six-agent scenario") {
  const auto s = testing::load("six_agent.json");
  CHECK(s.graph.agent_count() == 6);
  CHECK(s.graph.edge_count() == 10);
  REQUIRE(s.desired_positions);
  const auto& p = *s.desired_positions;
  CHECK(p[0].isApprox(Vec2(5, 0)));
  CHECK(p[1].norm() < 1e-15);
  CHECK(p[2].isApprox(Vec2(0, -5)));
  CHECK(p[3].isApprox(Vec2(-5, 0)));
  CHECK(std::abs(p[4].x() + 4.82) < 1e-2);
  CHECK(std::abs(p[4].y() + 7.66) < 1e-2);
  CHECK(std::abs(p[5].x() - 4.82) < 1e-2);
  CHECK(std::abs(p[5].y() + 7.66) < 1e-2);
  for (double r : constraint_residuals(p, s.graph)) CHECK(r < 1e-9);
}

TEST_CASE("minimal scenario and defaults") {
  const auto s = parse_scenario_text(kMinimal);
  CHECK(s.graph.edge(1).bearing.isApprox(Vec2(1, 0)));
  CHECK(s.sim.dt == 1e-3);
  CHECK(s.sim.t_max == 60.0);
  CHECK_FALSE(s.desired_positions.has_value());
}

TEST_CASE("schema errors carry line and field") {
  const auto bad_kind = replaced(kMinimal, "\"distance\"", "\"sonar\"");
  CHECK(error_kind_of([&] { parse_scenario_text(bad_kind); }) == ErrorKind::SchemaError);
  const auto msg = message_of(bad_kind);
  CHECK(msg.find("s.json:4:") != std::string::npos);
  CHECK(msg.find("edges[0].kind") != std::string::npos);

  CHECK(error_kind_of([&] { parse_scenario_text(replaced(kMinimal, "\"agents\"", "\"agentz\"")); }) ==
        ErrorKind::SchemaError);
  CHECK(error_kind_of([&] { parse_scenario_text(replaced(kMinimal, "\"gain\": 3}", "\"gain\": \"3\"}")); }) ==
        ErrorKind::SchemaError);
  const auto broken = replaced(kMinimal, "[[5, 0]", "[[5, 0,");
  CHECK(error_kind_of([&] { parse_scenario_text(broken); }) == ErrorKind::SchemaError);
  CHECK(message_of(broken).find("s.json:7") != std::string::npos);
}

TEST_CASE("validation errors") {
  CHECK(error_kind_of([&] { parse_scenario_text(replaced(kMinimal, "[1, 0]", "[1.5, 0]")); }) ==
        ErrorKind::ValidationError);
  CHECK(error_kind_of([&] { parse_scenario_text(replaced(kMinimal, "\"head\": 1", "\"head\": 0")); }) ==
        ErrorKind::ValidationError);
  CHECK(error_kind_of([&] { parse_scenario_text(replaced(kMinimal, "\"head\": 1", "\"head\": 4")); }) ==
        ErrorKind::ValidationError);
  CHECK(error_kind_of([&] {
          parse_scenario_text(replaced(kMinimal, "{\"tail\": 1, \"head\": 0, \"kind\": \"bearing\", \"desired\": [1, 0], \"gain\": 3, \"scale\": 5}",
                                       "{\"tail\": 0, \"head\": 1, \"kind\": \"distance\", \"desired\": 4, \"gain\": 3}"));
        }) == ErrorKind::ValidationError);
  CHECK(error_kind_of([&] {
          parse_scenario_text(replaced(kMinimal, "\"initial_positions\": [[5, 0], [0, 0]]",
                                       "\"initial_positions\": [[5, 0], [0, 0]], \"desired_positions\": [[6, 0], [0, 0]]"));
        }) == ErrorKind::ValidationError);
  CHECK(error_kind_of([&] { parse_scenario_text(replaced(kMinimal, ", \"scale\": 5", "")); }) ==
        ErrorKind::ValidationError);
}

TEST_CASE("round trip") {
  for (const char* name : {"two_agent.json", "four_agent.json", "six_agent.json", "fig2a.json", "fig2b.json"}) {
    const auto s = testing::load(name);
    const std::string text = serialize_scenario(s);
    const auto back = parse_scenario_text(text);
    CHECK(back == s);
    CHECK(serialize_scenario(back) == text);
  }
}

TEST_CASE("trajectory csv and svg") {
  const auto s = testing::load("two_agent.json");
  SimParams params;
  params.t_max = 0.5;
  const auto traj = simulate(s.graph, s.initial_positions, params);
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  CHECK(os.str().rfind("t,agent,px,py\n", 0) == 0);

  const auto dir = std::filesystem::temp_directory_path() / "hetform_unit_csv";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "trajectory.csv");
    f << os.str();
  }
  const auto back = read_trajectory_csv(dir / "trajectory.csv");
  REQUIRE(back.positions.size() == traj.positions.size());
  for (std::size_t k = 0; k < traj.positions.size(); ++k) {
    CHECK(back.times[k] == traj.times[k]);
    CHECK(back.positions[k].max_displacement(traj.positions[k]) == 0.0);
  }

  std::ostringstream es;
  write_errors_csv(es, traj);
  CHECK(es.str().rfind("t,edge,err\n", 0) == 0);

  const std::string svg = render_svg(traj, s.graph);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("R2") != std::string::npos);
}

}
