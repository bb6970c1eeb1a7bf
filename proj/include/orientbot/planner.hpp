#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "orientbot/errors.hpp"
#include "orientbot/grid.hpp"
#include "orientbot/labels.hpp"

namespace orientbot::plan {

/// The four candidate ring radii around the target, meters.
inline constexpr double kCandidateRadii[4] = {0.5, 1.0, 1.5, 2.0};

/// A candidate reposition point on one of the rings around the target.
struct Candidate {
  Vec2 position;
  double radius = 0.0;      // ring radius, meters
  double bearingDeg = 0.0;  // world bearing from the target
};

/// The five multiplicative utility factors and their product.
struct UtilityBreakdown {
  double orientation = 0.0;
  double distance = 0.0;
  double radius = 0.0;
  double occupancy = 0.0;
  double obstacle = 0.0;
  double total = 0.0;
  int observedClass = 0;
};

struct PlanConfig {
  std::size_t bearingsPerRing = 16;
  /// Invert the obstacle factor to score 1 when the line of sight IS
  /// blocked. Off by default; clear views score 1.
  bool literalObstacle = false;
};

/// Candidates on the four rings: `bearingsPerRing` equally spaced bearings
/// starting at 0 deg, per radius.
inline std::vector<Candidate> generate_candidates(const Pose2D& target,
                                                  std::size_t bearingsPerRing) {
  if (bearingsPerRing < 4)
    throw ArgumentError("bearingsPerRing must be at least 4");
  std::vector<Candidate> out;
  out.reserve(4 * bearingsPerRing);
  for (double radius : kCandidateRadii) {
    for (std::size_t b = 0; b < bearingsPerRing; ++b) {
      const double bearing =
          360.0 * static_cast<double>(b) / static_cast<double>(bearingsPerRing);
      const double rad = bearing * 3.14159265358979323846 / 180.0;
      out.push_back({{target.x + radius * std::cos(rad),
                      target.y + radius * std::sin(rad)},
                     radius,
                     bearing});
    }
  }
  return out;
}

/// Orientation class an observer standing at `p` would see for the target:
/// 0 when p lies on the target's facing ray.
inline int observed_class(const Vec2& p, const Pose2D& target) {
  if (distance(p, target.position()) < 1e-12)
    throw ArgumentError("observed_class: point coincides with target");
  return labels::angle_to_class(
      labels::wrap_degrees(bearing_deg(target.position(), p) -
                           target.headingDeg));
}

/// Orientation factor per observed class.
inline double orientation_multiplier(int cls) {
  switch (cls) {
    case 0: return 10.0;
    case 1: case 7: return 1.0;
    case 2: case 6: return 0.1;
    case 3: case 5: return 0.01;
    case 4: return 0.001;
  }
  throw ArgumentError("orientation class out of 0..7");
}

/// Radius factor per ring radius.
inline double radius_multiplier(double radius) {
  const double eps = 1e-9;
  if (std::fabs(radius - 0.5) < eps) return 0.5;
  if (std::fabs(radius - 1.0) < eps) return 0.8;
  if (std::fabs(radius - 1.5) < eps) return 0.8;
  if (std::fabs(radius - 2.0) < eps) return 1.0;
  throw ArgumentError("unknown candidate radius " + std::to_string(radius));
}

/// Distance factor: (max over candidates of their distance to the robot)
/// minus this candidate's distance to the robot, plus an epsilon floor of one
/// grid resolution. Always positive; larger for candidates nearer the robot.
inline double distance_score(const Vec2& p, const Vec2& robot,
                             const std::vector<Candidate>& allCandidates,
                             double epsilon) {
  if (allCandidates.empty())
    throw ArgumentError("distance_score: empty candidate set");
  bool member = false;
  double maxDist = 0.0;
  for (const auto& c : allCandidates) {
    maxDist = std::max(maxDist, distance(c.position, robot));
    if (c.position.x == p.x && c.position.y == p.y) member = true;
  }
  if (!member)
    throw ArgumentError("distance_score: p is not in the candidate set");
  return maxDist - distance(p, robot) + epsilon;
}

/// 1 iff p's cell is free and an 8-connected path of free cells connects the
/// robot's cell to p's cell.
inline int occupancy_term(const Vec2& p, const Vec2& robot,
                          const OccupancyGrid& grid) {
  if (!grid.in_bounds(p) || !grid.in_bounds(robot))
    throw ArgumentError("occupancy_term: point out of grid bounds");
  return cells_connected(grid, grid.world_to_cell(robot),
                         grid.world_to_cell(p))
             ? 1
             : 0;
}

/// 1 iff no occupied cell lies on the supercover line between p and the
/// target, so clear views score 1. PlanConfig::literalObstacle inverts this
/// to 1-when-blocked for comparison runs.
inline int obstacle_term(const Vec2& p, const Vec2& target,
                         const OccupancyGrid& grid) {
  if (!grid.in_bounds(p) || !grid.in_bounds(target))
    throw ArgumentError("obstacle_term: point out of grid bounds");
  for (const CellIndex& c : supercover_cells(grid, p, target))
    if (grid.in_bounds(c) && grid.occupied(c)) return 0;
  return 1;
}

/// U(p): product of orientation, distance, radius, occupancy and obstacle
/// factors. The full breakdown is retained for tracing.
inline UtilityBreakdown utility(const Candidate& p, const Pose2D& robot,
                                const Pose2D& target, const OccupancyGrid& grid,
                                const std::vector<Candidate>& allCandidates,
                                const PlanConfig& cfg = {}) {
  UtilityBreakdown u;
  u.observedClass = observed_class(p.position, target);
  u.orientation = orientation_multiplier(u.observedClass);
  u.distance = distance_score(p.position, robot.position(), allCandidates,
                              grid.resolution());
  u.radius = radius_multiplier(p.radius);
  u.occupancy = static_cast<double>(
      occupancy_term(p.position, robot.position(), grid));
  const int clear = obstacle_term(p.position, target.position(), grid);
  u.obstacle = static_cast<double>(cfg.literalObstacle ? 1 - clear : clear);
  u.total = u.orientation * u.distance * u.radius * u.occupancy * u.obstacle;
  return u;
}

/// Argmax of U(p) over the candidates; ties break toward the smaller observed
/// class, then the larger radius, then the smaller bearing. Returns nullopt
/// when every candidate scores zero (no viable reposition).
inline std::optional<std::pair<Candidate, UtilityBreakdown>> select_best(
    const std::vector<Candidate>& candidates, const Pose2D& robot,
    const Pose2D& target, const OccupancyGrid& grid,
    const PlanConfig& cfg = {}) {
  if (candidates.empty()) throw ArgumentError("select_best: no candidates");
  std::optional<std::pair<Candidate, UtilityBreakdown>> best;
  for (const auto& c : candidates) {
    UtilityBreakdown u = utility(c, robot, target, grid, candidates, cfg);
    if (u.total <= 0.0) continue;
    if (!best) {
      best = {c, u};
      continue;
    }
    const UtilityBreakdown& bu = best->second;
    bool better = u.total > bu.total;
    if (u.total == bu.total) {
      const auto key = std::make_tuple(u.observedClass, -c.radius, c.bearingDeg);
      const auto bestKey = std::make_tuple(bu.observedClass, -best->first.radius,
                                           best->first.bearingDeg);
      better = key < bestKey;
    }
    if (better) best = {c, u};
  }
  return best;
}

}  // namespace orientbot::plan
