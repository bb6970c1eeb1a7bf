#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "orientbot/planner.hpp"
#include "orientbot/rng.hpp"
#include "oracles.hpp"

using namespace orientbot;
using plan::Candidate;
using plan::CellIndex;
using plan::OccupancyGrid;
using plan::Pose2D;
using plan::Vec2;

namespace {

OccupancyGrid empty_room(std::size_t cells = 100, double res = 0.1) {
  // origin at (-cells*res/2, ...) so the room is centered on (0,0)
  const double half = static_cast<double>(cells) * res / 2.0;
  return OccupancyGrid(cells, cells, res, {-half, -half});
}

/// Independent re-scoring: recompute U(p) for one candidate from scratch
/// using the test-side oracles (flood fill, box-intersection line of sight).
double oracle_utility(const Candidate& c, const Pose2D& robot,
                      const Pose2D& target, const OccupancyGrid& grid,
                      const std::vector<Candidate>& all) {
  const double rel = labels::wrap_degrees(
      plan::bearing_deg(target.position(), c.position) - target.headingDeg);
  const int cls = static_cast<int>(
      static_cast<long>(std::floor(rel / 45.0 + 0.5)) % 8);
  static const double orient[8] = {10.0, 1.0, 0.1, 0.01, 0.001, 0.01, 0.1, 1.0};
  static const double radius[4] = {0.5, 0.8, 0.8, 1.0};
  int radiusIdx = -1;
  for (int i = 0; i < 4; ++i)
    if (std::fabs(c.radius - plan::kCandidateRadii[i]) < 1e-9) radiusIdx = i;
  REQUIRE(radiusIdx >= 0);

  double maxD = 0.0;
  for (const auto& o : all)
    maxD = std::max(maxD, plan::distance(o.position, robot.position()));
  const double dist =
      maxD - plan::distance(c.position, robot.position()) + grid.resolution();

  const int occ =
      (!grid.occupied(grid.world_to_cell(c.position)) &&
       oracles::reachable_dfs(grid, grid.world_to_cell(robot.position()),
                              grid.world_to_cell(c.position)))
          ? 1
          : 0;
  int obst = 1;
  for (const auto& cc :
       oracles::segment_cells_boxtest(grid, c.position, target.position())) {
    const CellIndex ci{cc.first, cc.second};
    if (grid.in_bounds(ci) && grid.occupied(ci)) obst = 0;
  }
  return orient[cls] * dist * radius[radiusIdx] * occ * obst;
}

}  // namespace

TEST_CASE("generate_candidates lays out the four rings") {
  Pose2D target{0, 0, 0};
  auto cands = plan::generate_candidates(target, 16);
  REQUIRE(cands.size() == 64);

  // radius 1, bearing 0 -> (1, 0)
  bool found = false;
  for (const auto& c : cands)
    if (c.radius == 1.0 && c.bearingDeg == 0.0) {
      CHECK(c.position.x == Approx(1.0));
      CHECK(c.position.y == Approx(0.0).margin(1e-12));
      found = true;
    }
  CHECK(found);

  for (const auto& c : cands)
    CHECK(plan::distance(c.position, target.position()) ==
          Approx(c.radius).margin(1e-9));

  CHECK_THROWS_AS(plan::generate_candidates(target, 3), ArgumentError);
}

TEST_CASE("observed_class follows the relative bearing") {
  Pose2D target{0, 0, 0};  // facing +X
  CHECK(plan::observed_class({2, 0}, target) == 0);
  CHECK(plan::observed_class({-2, 0}, target) == 4);

  // p at bearing 100 relative to heading -> class 2
  Pose2D t2{0, 0, 30.0};
  const double rad = (30.0 + 100.0) * 3.14159265358979323846 / 180.0;
  CHECK(plan::observed_class({2 * std::cos(rad), 2 * std::sin(rad)}, t2) == 2);

  CHECK_THROWS_AS(plan::observed_class({0, 0}, target), ArgumentError);
}

TEST_CASE("orientation multipliers match the published table") {
  CHECK(plan::orientation_multiplier(0) == 10.0);
  CHECK(plan::orientation_multiplier(1) == 1.0);
  CHECK(plan::orientation_multiplier(7) == 1.0);
  CHECK(plan::orientation_multiplier(2) == 0.1);
  CHECK(plan::orientation_multiplier(6) == 0.1);
  CHECK(plan::orientation_multiplier(3) == 0.01);
  CHECK(plan::orientation_multiplier(5) == 0.01);
  CHECK(plan::orientation_multiplier(4) == 0.001);
  CHECK_THROWS_AS(plan::orientation_multiplier(8), ArgumentError);
}

TEST_CASE("radius multipliers match the published table") {
  CHECK(plan::radius_multiplier(0.5) == 0.5);
  CHECK(plan::radius_multiplier(1.0) == 0.8);
  CHECK(plan::radius_multiplier(1.5) == 0.8);
  CHECK(plan::radius_multiplier(2.0) == 1.0);
  CHECK_THROWS_AS(plan::radius_multiplier(0.75), ArgumentError);
}

TEST_CASE("distance score favors candidates near the robot") {
  const double eps = 0.1;
  std::vector<Candidate> single{{{1, 0}, 0.5, 0.0}};
  CHECK(plan::distance_score({1, 0}, {0, 0}, single, eps) == Approx(eps));

  // two candidates at robot-distances 1 m and 3 m -> scores 2+eps and eps
  std::vector<Candidate> two{{{1, 0}, 0.5, 0.0}, {{3, 0}, 0.5, 0.0}};
  CHECK(plan::distance_score({1, 0}, {0, 0}, two, eps) == Approx(2.0 + eps));
  CHECK(plan::distance_score({3, 0}, {0, 0}, two, eps) == Approx(eps));

  // ordering is the reverse of robot-distance ordering
  std::vector<Candidate> ring;
  for (int i = 0; i < 8; ++i) {
    const double a = i * 3.14159265358979323846 / 4.0;
    ring.push_back({{2 + std::cos(a), std::sin(a)}, 1.0, 45.0 * i});
  }
  std::vector<std::pair<double, double>> distAndScore;
  for (const auto& c : ring)
    distAndScore.push_back(
        {plan::distance(c.position, {0, 0}),
         plan::distance_score(c.position, {0, 0}, ring, eps)});
  for (const auto& [d1, s1] : distAndScore)
    for (const auto& [d2, s2] : distAndScore)
      if (d1 < d2) CHECK(s1 > s2);

  CHECK_THROWS_AS(plan::distance_score({9, 9}, {0, 0}, two, eps),
                  ArgumentError);
  CHECK_THROWS_AS(plan::distance_score({1, 0}, {0, 0}, {}, eps),
                  ArgumentError);
}

TEST_CASE("occupancy term needs a free cell reachable from the robot") {
  auto grid = empty_room(60, 0.1);
  CHECK(plan::occupancy_term({1, 1}, {-1, -1}, grid) == 1);

  auto blocked = grid;
  blocked.set_occupied(blocked.world_to_cell({1.0, 1.0}), true);
  CHECK(plan::occupancy_term({1.0, 1.0}, {-1, -1}, blocked) == 0);

  // free cell fully enclosed by a wall ring
  auto walled = grid;
  const CellIndex center = walled.world_to_cell({1.0, 1.0});
  for (long dy = -1; dy <= 1; ++dy)
    for (long dx = -1; dx <= 1; ++dx)
      if (dx != 0 || dy != 0)
        walled.set_occupied({center.x + dx, center.y + dy}, true);
  CHECK(plan::occupancy_term({1.0, 1.0}, {-1, -1}, walled) == 0);
  CHECK(oracles::reachable_dfs(walled, walled.world_to_cell({-1, -1}),
                               center) == false);

  CHECK_THROWS_AS(plan::occupancy_term({99, 99}, {0, 0}, grid), ArgumentError);
}

TEST_CASE("obstacle term clears open lines and flags blocked ones") {
  auto grid = empty_room(60, 0.1);
  CHECK(plan::obstacle_term({-2, 0}, {2, 0}, grid) == 1);

  auto withWall = grid;
  withWall.set_occupied(withWall.world_to_cell({0.0, 0.0}), true);
  CHECK(plan::obstacle_term({-2, 0.02}, {2, 0.02}, withWall) == 0);

  CHECK_THROWS_AS(plan::obstacle_term({99, 0}, {0, 0}, grid), ArgumentError);
}

TEST_CASE("obstacle term blocks a segment grazing an occupied corner") {
  OccupancyGrid grid(10, 10, 1.0, {0, 0});
  // two diagonal occupied cells sharing the corner (5,5)
  grid.set_occupied({4, 5}, true);
  grid.set_occupied({5, 4}, true);
  // 45-degree segment passing exactly through the corner point (5,5)
  CHECK(plan::obstacle_term({3.5, 3.5}, {6.5, 6.5}, grid) == 0);
}

TEST_CASE("utility is the product of its factors") {
  auto grid = empty_room();
  Pose2D robot{0, 0, 0};
  Pose2D target{3, 0, 180};  // facing the robot
  auto cands = plan::generate_candidates(target, 16);
  std::vector<Candidate> inBounds;
  for (const auto& c : cands)
    if (grid.in_bounds(c.position)) inBounds.push_back(c);

  for (const auto& c : inBounds) {
    auto u = plan::utility(c, robot, target, grid, inBounds);
    CHECK(u.total ==
          u.orientation * u.distance * u.radius * u.occupancy * u.obstacle);
    CHECK((u.occupancy == 0.0 || u.occupancy == 1.0));
    CHECK((u.obstacle == 0.0 || u.obstacle == 1.0));
  }
}

TEST_CASE("occupied candidate scores zero regardless of other factors") {
  auto grid = empty_room();
  Pose2D robot{0, 0, 0};
  Pose2D target{3, 0, 180};
  auto cands = plan::generate_candidates(target, 16);
  // wall off the frontal 2 m candidate (bearing 180 from target)
  grid.set_occupied(grid.world_to_cell({1.0, 0.0}), true);
  for (const auto& c : cands)
    if (c.radius == 2.0 && c.bearingDeg == 180.0) {
      auto u = plan::utility(c, robot, target, grid, cands);
      CHECK(u.occupancy == 0.0);
      CHECK(u.total == 0.0);
    }
}

TEST_CASE("frontal 2 m candidate wins on the empty grid") {
  auto grid = empty_room();
  Pose2D robot{0, 0, 0};
  Pose2D target{3, 0, 180};  // faces -X, toward the robot
  auto cands = plan::generate_candidates(target, 16);
  std::vector<Candidate> inBounds;
  for (const auto& c : cands)
    if (grid.in_bounds(c.position)) inBounds.push_back(c);
  auto best = plan::select_best(inBounds, robot, target, grid);
  REQUIRE(best.has_value());
  CHECK(best->first.radius == 2.0);
  CHECK(best->first.bearingDeg == 180.0);
  CHECK(best->second.observedClass == 0);
  CHECK(best->first.position.x == Approx(1.0));
  CHECK(best->first.position.y == Approx(0.0).margin(1e-9));
}

TEST_CASE("utility ratio between observed classes 0 and 1 is 10") {
  auto grid = empty_room();
  Pose2D target{0, 0, 90};
  // same radius, classes 0 and 1; robot on the perpendicular bisector keeps
  // the Distance factor identical, so the totals differ by the class ratio
  const double rad135 = 135.0 * 3.14159265358979323846 / 180.0;
  Candidate front{{0, 2}, 2.0, 90.0};
  Candidate side{{2 * std::cos(rad135), 2 * std::sin(rad135)}, 2.0, 135.0};
  REQUIRE(plan::observed_class(front.position, target) == 0);
  REQUIRE(plan::observed_class(side.position, target) == 1);

  const Vec2 mid = 0.5 * (front.position + side.position);
  const Vec2 dirv = front.position - side.position;
  const Vec2 rpos = mid + 1.0 * Vec2{-dirv.y, dirv.x};
  Pose2D robotEq{rpos.x, rpos.y, 0};
  std::vector<Candidate> pair{front, side};
  auto uf = plan::utility(front, robotEq, target, grid, pair);
  auto us = plan::utility(side, robotEq, target, grid, pair);
  REQUIRE(uf.distance == Approx(us.distance).epsilon(1e-12));
  CHECK(uf.total / us.total == Approx(10.0).epsilon(1e-9));
}

TEST_CASE("select_best returns no-viable when everything is walled off") {
  auto grid = empty_room(80, 0.1);
  Pose2D robot{-3.85, -3.85, 0};  // cell (1,1), sealed into the corner
  Pose2D target{1, 1, 0};
  for (long i = 0; i <= 3; ++i) {
    grid.set_occupied({3, i}, true);
    grid.set_occupied({i, 3}, true);
  }
  REQUIRE_FALSE(plan::cells_connected(grid, grid.world_to_cell({-3.85, -3.85}),
                                      grid.world_to_cell({1.0, 1.0})));
  auto cands = plan::generate_candidates(target, 8);
  auto best = plan::select_best(cands, robot, target, grid);
  CHECK_FALSE(best.has_value());

  CHECK_THROWS_AS(plan::select_best({}, robot, target, grid), ArgumentError);
}

TEST_CASE("select_best is invariant under candidate permutation") {
  auto grid = empty_room();
  Pose2D robot{-2, 1, 0};
  Pose2D target{2, -1, 135};
  auto cands = plan::generate_candidates(target, 16);
  std::vector<Candidate> inBounds;
  for (const auto& c : cands)
    if (grid.in_bounds(c.position)) inBounds.push_back(c);
  auto best1 = plan::select_best(inBounds, robot, target, grid);

  std::mt19937 g(99);
  for (int trial = 0; trial < 5; ++trial) {
    auto shuffled = inBounds;
    std::shuffle(shuffled.begin(), shuffled.end(), g);
    auto best2 = plan::select_best(shuffled, robot, target, grid);
    REQUIRE(best1.has_value() == best2.has_value());
    CHECK(best1->first.position.x == best2->first.position.x);
    CHECK(best1->first.position.y == best2->first.position.y);
    CHECK(best1->second.total == best2->second.total);
  }
}

TEST_CASE("select_best agrees with the exhaustive oracle on random scenarios") {
  Rng rng(4242);
  for (int trial = 0; trial < 60; ++trial) {
    OccupancyGrid grid(60, 60, 0.1, {-3.0, -3.0});
    // scatter a few rectangular obstacles
    const int rects = static_cast<int>(rng.below(5));
    for (int r = 0; r < rects; ++r) {
      const long x0 = static_cast<long>(rng.below(50));
      const long y0 = static_cast<long>(rng.below(50));
      const long w = 1 + static_cast<long>(rng.below(8));
      const long h = 1 + static_cast<long>(rng.below(8));
      for (long y = y0; y < std::min<long>(60, y0 + h); ++y)
        for (long x = x0; x < std::min<long>(60, x0 + w); ++x)
          grid.set_occupied({x, y}, true);
    }
    Pose2D robot{rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5),
                 rng.uniform(0.0, 360.0)};
    Pose2D target{rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8),
                  rng.uniform(0.0, 360.0)};
    if (grid.occupied(grid.world_to_cell(robot.position()))) continue;

    auto cands = plan::generate_candidates(target, 12);
    std::vector<Candidate> inBounds;
    for (const auto& c : cands)
      if (grid.in_bounds(c.position)) inBounds.push_back(c);
    if (inBounds.empty()) continue;

    auto best = plan::select_best(inBounds, robot, target, grid);

    // oracle argmax with the same tie-break
    double bestU = 0.0;
    const Candidate* bestC = nullptr;
    for (const auto& c : inBounds) {
      const double u = oracle_utility(c, robot, target, grid, inBounds);
      if (u <= 0.0) continue;
      bool better = bestC == nullptr || u > bestU;
      if (bestC && u == bestU) {
        const int ca = plan::observed_class(c.position, target);
        const int cb = plan::observed_class(bestC->position, target);
        better = std::make_tuple(ca, -c.radius, c.bearingDeg) <
                 std::make_tuple(cb, -bestC->radius, bestC->bearingDeg);
      }
      if (better) {
        bestU = u;
        bestC = &c;
      }
    }

    INFO("trial " << trial);
    REQUIRE(best.has_value() == (bestC != nullptr));
    if (bestC) {
      CHECK(best->first.position.x == Approx(bestC->position.x));
      CHECK(best->first.position.y == Approx(bestC->position.y));
      CHECK(best->second.total == Approx(bestU).epsilon(1e-9));
    }
  }
}

TEST_CASE("uniform scaling of distance scores preserves the argmax") {
  auto grid = empty_room();
  Pose2D robot{-2, 2, 0};
  Pose2D target{1, -1, 220};
  auto cands = plan::generate_candidates(target, 16);
  std::vector<Candidate> inBounds;
  for (const auto& c : cands)
    if (grid.in_bounds(c.position)) inBounds.push_back(c);
  auto best = plan::select_best(inBounds, robot, target, grid);
  REQUIRE(best.has_value());

  // scaling every candidate's Distance by c > 0 scales every total by c,
  // so the argmax (computed on scaled copies) is unchanged
  std::vector<double> totals, scaled;
  for (const auto& c : inBounds) {
    auto u = plan::utility(c, robot, target, grid, inBounds);
    totals.push_back(u.total);
    scaled.push_back(u.orientation * (7.3 * u.distance) * u.radius *
                     u.occupancy * u.obstacle);
  }
  const auto am1 = std::max_element(totals.begin(), totals.end());
  const auto am2 = std::max_element(scaled.begin(), scaled.end());
  CHECK(std::distance(totals.begin(), am1) ==
        std::distance(scaled.begin(), am2));
}

TEST_CASE("literal obstacle flag inverts the factor") {
  auto grid = empty_room();
  Pose2D robot{0, 0, 0};
  Pose2D target{3, 0, 180};
  auto cands = plan::generate_candidates(target, 8);
  std::vector<Candidate> inBounds;
  for (const auto& c : cands)
    if (grid.in_bounds(c.position)) inBounds.push_back(c);
  plan::PlanConfig literal{8, true};
  for (const auto& c : inBounds) {
    auto u = plan::utility(c, robot, target, grid, inBounds, literal);
    CHECK(u.obstacle == 0.0);  // clear views score zero under the literal rule
    CHECK(u.total == 0.0);
  }
  CHECK_FALSE(
      plan::select_best(inBounds, robot, target, grid, literal).has_value());
}
