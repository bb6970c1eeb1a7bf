#include <catch2/catch.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "orientbot/model_io.hpp"
#include "orientbot/sim.hpp"
#include "orientbot/trace_json.hpp"

using namespace orientbot;
using plan::OccupancyGrid;
using plan::Pose2D;
using sim::Scenario;

namespace {

OccupancyGrid open_room() {
  return OccupancyGrid(100, 100, 0.1, {-5.0, -5.0});
}

Scenario base_scenario() {
  Scenario sc;
  sc.grid = open_room();
  sc.robotStart = {-2.0, 0.0, 0.0};
  sc.trajectory = {{0.0, {1.0, 0.0, 0.0}}};  // static, facing +X (away)
  sc.seed = 7;
  return sc;
}

}  // namespace

TEST_CASE("face proxy checks cone, range and line of sight") {
  auto grid = open_room();
  sim::FaceConeParams cone;

  Pose2D target{0, 0, 0};
  CHECK(sim::face_detected({2, 0}, target, grid, cone) == 1);
  CHECK(sim::face_detected({-2, 0}, target, grid, cone) == 0);   // behind
  CHECK(sim::face_detected({4, 0}, target, grid, cone) == 0);    // too far
  CHECK(sim::face_detected({0.3, 0}, target, grid, cone) == 0);  // too close

  // in front but behind a wall
  auto walled = grid;
  for (long y = 40; y < 60; ++y)
    walled.set_occupied({60, y}, true);  // wall at x = 1.0..1.1
  CHECK(sim::face_detected({2, 0}, target, walled, cone) == 0);

  // just inside / just outside the cone edge
  const double radIn = 22.4999 * 3.14159265358979323846 / 180.0;
  const double radOut = 22.6 * 3.14159265358979323846 / 180.0;
  CHECK(sim::face_detected({2 * std::cos(radIn), 2 * std::sin(radIn)}, target,
                           grid, cone) == 1);
  CHECK(sim::face_detected({2 * std::cos(radOut), 2 * std::sin(radOut)},
                           target, grid, cone) == 0);
}

TEST_CASE("static target: dwell reaches the threshold and fires exactly once") {
  auto sc = base_scenario();
  sc.durationSec = 10.0;
  sim::Simulator s(sc);
  sim::SimTrace trace;
  for (int i = 0; i < 24; ++i) s.step(trace, 0.1);
  CHECK(trace.invocations.empty());
  s.step(trace, 0.1);  // tick 25: dwell = 2.5
  REQUIRE(trace.invocations.size() == 1);
  CHECK(trace.invocations[0].time == Approx(2.5));
  for (int i = 0; i < 100; ++i) s.step(trace, 0.1);
  CHECK(trace.invocations.size() == 1);  // never re-fires while still
}

TEST_CASE("continuously moving target never triggers the planner") {
  auto sc = base_scenario();
  // 1.5 m/s exceeds one grid cell per tick, so dwell never accumulates
  sc.trajectory = {{0.0, {-3.0, 2.0, 0.0}}, {4.0, {3.0, 2.0, 0.0}}};
  sc.robotStart = {-3.0, -2.0, 0.0};
  sc.durationSec = 3.9;
  auto trace = sim::run_scenario(sc);
  CHECK(trace.invocations.empty());
  for (const auto& t : trace.ticks) CHECK(t.dwell == 0.0);
}

TEST_CASE("ground-truth estimate matches the observed class") {
  auto sc = base_scenario();
  sim::Simulator s(sc);
  CHECK(s.estimate_orientation() ==
        plan::observed_class(s.robot().position(), s.target()));
}

TEST_CASE("open-room reposition flips the face proxy from 0 to 1") {
  auto sc = base_scenario();  // target faces away from the robot
  auto trace = sim::run_scenario(sc);
  REQUIRE(trace.invocations.size() == 1);
  const auto& inv = trace.invocations[0];
  CHECK(inv.faceBefore == 0);
  REQUIRE(inv.viable);
  REQUIRE(inv.faceAfter.has_value());
  CHECK(*inv.faceAfter == 1);
  CHECK(inv.breakdown.observedClass == 0);

  // the selected destination is reachable and actually reached
  CHECK(plan::occupancy_term(inv.selected.position, sc.robotStart.position(),
                             sc.grid) == 1);
  const auto& last = trace.ticks.back();
  CHECK(plan::distance(last.robot.position(), inv.selected.position) <
        1e-6);
  CHECK(last.faceDetected == 1);

  // the planner only ever fires once the dwell timer has filled up
  for (const auto& i : trace.invocations)
    for (const auto& t : trace.ticks)
      if (t.time == i.time) CHECK(t.dwell + 1e-9 >= sc.dwellThresholdSec);
}

TEST_CASE("target facing the robot is detected before any reposition") {
  auto sc = base_scenario();
  sc.trajectory = {{0.0, {1.0, 0.0, 180.0}}};  // faces -X, toward the robot
  sc.durationSec = 5.0;
  auto trace = sim::run_scenario(sc);
  REQUIRE_FALSE(trace.ticks.empty());
  CHECK(trace.ticks.front().faceDetected == 1);
  if (!trace.invocations.empty()) CHECK(trace.invocations[0].faceBefore == 1);
}

TEST_CASE("robot never enters an occupied cell") {
  auto sc = base_scenario();
  // wall between robot and target with a gap at the bottom
  for (long y = 30; y < 100; ++y) sc.grid.set_occupied({50, y}, true);
  sc.robotStart = {-2.0, 1.0, 0.0};
  sc.trajectory = {{0.0, {2.0, 1.0, 90.0}}};
  auto trace = sim::run_scenario(sc);
  for (const auto& t : trace.ticks) {
    const auto c = sc.grid.world_to_cell(t.robot.position());
    REQUIRE(sc.grid.in_bounds(c));
    CHECK_FALSE(sc.grid.occupied(c));
  }
}

TEST_CASE("a reposition abandoned mid-flight leaves face_after unset and re-arms") {
  auto sc = base_scenario();
  // still until t=4 (planner fires at 2.5, reposition begins), then the
  // target bolts at 1.5 m/s, then holds still again from t=6
  sc.trajectory = {{0.0, {1.0, 0.0, 0.0}},
                   {4.0, {1.0, 0.0, 0.0}},
                   {6.0, {1.0, 3.0, 0.0}}};
  sc.durationSec = 14.0;
  auto trace = sim::run_scenario(sc);
  REQUIRE(trace.invocations.size() == 2);
  CHECK(trace.invocations[0].viable);
  CHECK_FALSE(trace.invocations[0].faceAfter.has_value());  // abandoned
  CHECK(trace.invocations[1].time == Approx(6.0 + 2.5).margin(0.2));
}

TEST_CASE("identical seeds give byte-identical serialized traces") {
  auto sc = base_scenario();
  auto t1 = sim::run_scenario(sc);
  auto t2 = sim::run_scenario(sc);
  CHECK(to_json(t1).dump() == to_json(t2).dump());
}

TEST_CASE("model-mode simulation is deterministic given the seed") {
  auto model = nn::build_paper_model(21);
  model.set_trained(true);
  const std::string modelPath = "sim_test_model.obnn";
  nn::save_model(model, modelPath);

  auto sc = base_scenario();
  sc.orientationSource = sim::OrientationSource::model;
  sc.modelPath = modelPath;
  sc.durationSec = 8.0;
  auto t1 = sim::run_scenario(sc);
  auto t2 = sim::run_scenario(sc);
  CHECK(to_json(t1).dump() == to_json(t2).dump());
  REQUIRE(!t1.invocations.empty());
  std::remove(modelPath.c_str());
}

TEST_CASE("scenario validation rejects bad setups") {
  auto sc = base_scenario();
  sc.grid.set_occupied(sc.grid.world_to_cell(sc.robotStart.position()), true);
  CHECK_THROWS_AS(sim::Simulator(sc), ArgumentError);

  auto sc2 = base_scenario();
  sc2.trajectory = {{0.0, {1, 0, 0}}, {0.0, {2, 0, 0}}};
  CHECK_THROWS_AS(sim::Simulator(sc2), ArgumentError);

  auto sc3 = base_scenario();
  sc3.trajectory.clear();
  CHECK_THROWS_AS(sim::Simulator(sc3), ArgumentError);

  auto sc4 = base_scenario();
  sc4.faceCone.halfAngleDeg = 95.0;
  CHECK_THROWS_AS(sim::Simulator(sc4), ArgumentError);
}

TEST_CASE("scenario files parse keys, waypoints and relative paths") {
  auto grid = open_room();
  plan::save_pgm(grid, "sim_test_room.pgm");

  std::istringstream text(
      "# demo scenario\n"
      "grid sim_test_room.pgm\n"
      "robot -2 0 0\n"
      "dwell 2.5\n"
      "face-cone 22.5\n"
      "face-range 0.5 3.0\n"
      "orientation-source ground-truth\n"
      "seed 42\n"
      "speed 0.5\n"
      "dt 0.1\n"
      "duration 12\n"
      "waypoint 0 1 0 0\n"
      "waypoint 5 1 0 90\n");
  Scenario sc = sim::parse_scenario(text, ".");
  CHECK(sc.robotStart.x == -2.0);
  CHECK(sc.seed == 42);
  CHECK(sc.durationSec == 12.0);
  REQUIRE(sc.trajectory.size() == 2);
  CHECK(sc.trajectory[1].second.headingDeg == 90.0);
  auto trace = sim::run_scenario(sc);
  CHECK(trace.ticks.size() == 120);

  std::istringstream missingGrid("robot 0 0 0\nwaypoint 0 1 1 0\n");
  CHECK_THROWS_AS(sim::parse_scenario(missingGrid, "."), FormatError);

  std::istringstream badKey(
      "grid sim_test_room.pgm\nrobot 0 0 0\nwig 3\nwaypoint 0 1 1 0\n");
  CHECK_THROWS_AS(sim::parse_scenario(badKey, "."), FormatError);

  std::remove("sim_test_room.pgm");
  std::remove("sim_test_room.pgm.meta");
}

TEST_CASE("target pose interpolates linearly with wrapped headings") {
  auto sc = base_scenario();
  sc.trajectory = {{0.0, {0.0, 0.0, 350.0}}, {1.0, {1.0, 0.0, 10.0}}};
  sc.robotStart = {-4.0, -4.0, 0.0};
  sc.durationSec = 1.0;
  sim::Simulator s(sc);
  sim::SimTrace trace;
  for (int i = 0; i < 5; ++i) s.step(trace, 0.1);
  // halfway: x = 0.5, heading wraps through 0
  CHECK(trace.ticks.back().target.x == Approx(0.5));
  CHECK(labels::angular_difference(trace.ticks.back().target.headingDeg, 0.0) ==
        Approx(0.0).margin(1e-9));
}
