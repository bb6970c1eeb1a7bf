#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "orientbot/errors.hpp"
#include "orientbot/grid.hpp"
#include "orientbot/labels.hpp"
#include "orientbot/model.hpp"
#include "orientbot/model_io.hpp"
#include "orientbot/planner.hpp"
#include "orientbot/rng.hpp"
#include "orientbot/synthetic.hpp"

namespace orientbot::sim {

using plan::CellIndex;
using plan::OccupancyGrid;
using plan::Pose2D;
using plan::Vec2;

struct FaceConeParams {
  double halfAngleDeg = 22.5;
  double minRange = 0.5;
  double maxRange = 3.0;
};

enum class OrientationSource { groundTruth, model };

/// A simulation scenario: grid, robot start, target trajectory and the
/// application-loop parameters.
struct Scenario {
  OccupancyGrid grid;
  Pose2D robotStart;
  std::vector<std::pair<double, Pose2D>> trajectory;  // (time s, pose)
  double dwellThresholdSec = 2.5;
  OrientationSource orientationSource = OrientationSource::groundTruth;
  std::string modelPath;
  FaceConeParams faceCone;
  std::uint64_t seed = 0;
  double robotSpeed = 0.5;   // m/s cap
  double followDistance = 1.0;
  double dt = 0.1;
  double durationSec = -1.0;  // <0: last waypoint time + 20 s
  std::size_t bearingsPerRing = 16;
  data::StyleParams renderStyle;

  void validate() const {
    if (trajectory.empty())
      throw ArgumentError("scenario: trajectory must not be empty");
    for (std::size_t i = 1; i < trajectory.size(); ++i)
      if (!(trajectory[i].first > trajectory[i - 1].first))
        throw ArgumentError("scenario: trajectory times must strictly increase");
    if (!(faceCone.halfAngleDeg > 0.0 && faceCone.halfAngleDeg < 90.0))
      throw ArgumentError("scenario: face cone half-angle must be in (0, 90)");
    if (!(dt > 0.0)) throw ArgumentError("scenario: dt must be positive");
    if (!(dwellThresholdSec > 0.0))
      throw ArgumentError("scenario: dwell threshold must be positive");
    if (orientationSource == OrientationSource::model && modelPath.empty())
      throw ArgumentError("scenario: model source requires a model path");
  }
};

/// Geometric face-detection proxy: the robot sees the face iff it stands
/// within the target's facing cone, within range, with a clear line of sight.
inline int face_detected(const Vec2& robot, const Pose2D& target,
                         const OccupancyGrid& grid,
                         const FaceConeParams& cone) {
  const double range = plan::distance(robot, target.position());
  if (range < cone.minRange || range > cone.maxRange) return 0;
  if (labels::angular_difference(plan::bearing_deg(target.position(), robot),
                                 target.headingDeg) > cone.halfAngleDeg)
    return 0;
  return plan::obstacle_term(robot, target.position(), grid);
}

struct TickRecord {
  double time = 0.0;
  Pose2D robot;
  Pose2D target;
  double dwell = 0.0;
  int faceDetected = 0;
};

struct PlannerInvocation {
  double time = 0.0;
  int estimatedClass = 0;
  double planningHeadingDeg = 0.0;  // target heading handed to the planner
  bool viable = false;
  plan::Candidate selected;
  plan::UtilityBreakdown breakdown;
  int faceBefore = 0;
  std::optional<int> faceAfter;  // unset if the reposition was abandoned
};

struct SimTrace {
  std::vector<TickRecord> ticks;
  std::vector<PlannerInvocation> invocations;
};

namespace detail {

inline double wrap_signed(double deg) {
  double d = labels::wrap_degrees(deg);
  if (d > 180.0) d -= 360.0;
  return d;
}

inline Pose2D interpolate_pose(const std::vector<std::pair<double, Pose2D>>& tr,
                               double t) {
  if (t <= tr.front().first) return tr.front().second;
  if (t >= tr.back().first) return tr.back().second;
  std::size_t i = 1;
  while (tr[i].first < t) ++i;
  const auto& [t0, p0] = tr[i - 1];
  const auto& [t1, p1] = tr[i];
  const double f = (t - t0) / (t1 - t0);
  Pose2D p;
  p.x = p0.x + f * (p1.x - p0.x);
  p.y = p0.y + f * (p1.y - p0.y);
  p.headingDeg = labels::wrap_degrees(
      p0.headingDeg + f * wrap_signed(p1.headingDeg - p0.headingDeg));
  return p;
}

}  // namespace detail

/// Runs the follow -> dwell -> estimate -> reposition -> observe loop.
class Simulator {
 public:
  explicit Simulator(Scenario scenario) : sc_(std::move(scenario)) {
    sc_.validate();
    const CellIndex start = sc_.grid.world_to_cell(sc_.robotStart.position());
    if (!sc_.grid.in_bounds(start) || sc_.grid.occupied(start))
      throw ArgumentError("scenario: robot start on occupied or out-of-bounds cell");
    if (sc_.orientationSource == OrientationSource::model)
      model_ = nn::load_model(sc_.modelPath);
    robot_ = sc_.robotStart;
    target_ = detail::interpolate_pose(sc_.trajectory, 0.0);
    prevTargetPos_ = target_.position();
  }

  const Scenario& scenario() const { return sc_; }
  double time() const { return time_; }
  const Pose2D& robot() const { return robot_; }
  const Pose2D& target() const { return target_; }

  /// The orientation class the configured source reports for the current
  /// robot/target state.
  int estimate_orientation() {
    if (sc_.orientationSource == OrientationSource::groundTruth)
      return plan::observed_class(robot_.position(), target_);
    // model mode: render the target from the robot's viewpoint and classify
    const double viewAngle = labels::wrap_degrees(
        plan::bearing_deg(target_.position(), robot_.position()) -
        target_.headingDeg);
    Rng rng(mix_seed(sc_.seed ^ (0x5eedULL + invocationCounter_)));
    const nn::Tensor image =
        data::detail::render_figure(viewAngle, rng, sc_.renderStyle);
    return nn::predict(*model_, image).classIndex;
  }

  /// Advance the simulation by dt, appending to the trace.
  void step(SimTrace& trace, double dt) {
    if (!(dt > 0.0)) throw ArgumentError("step: dt must be positive");
    time_ += dt;
    target_ = detail::interpolate_pose(sc_.trajectory, time_);

    const double moved = plan::distance(target_.position(), prevTargetPos_);
    prevTargetPos_ = target_.position();
    if (moved <= sc_.grid.resolution()) {
      dwell_ += dt;
    } else {
      dwell_ = 0.0;
      plannedThisStillness_ = false;
      if (phase_ != Phase::follow) {
        phase_ = Phase::follow;  // abandon any reposition in progress
        followPath_.clear();
      }
    }

    switch (phase_) {
      case Phase::follow:
        if (dwell_ + 1e-9 >= sc_.dwellThresholdSec && !plannedThisStillness_) {
          invoke_planner(trace);
        } else {
          follow_target(dt);
        }
        break;
      case Phase::reposition:
        advance_reposition(trace, dt);
        break;
      case Phase::observe:
        robot_.headingDeg =
            plan::bearing_deg(robot_.position(), target_.position());
        break;
    }

    TickRecord rec;
    rec.time = time_;
    rec.robot = robot_;
    rec.target = target_;
    rec.dwell = dwell_;
    rec.faceDetected =
        face_detected(robot_.position(), target_, sc_.grid, sc_.faceCone);
    trace.ticks.push_back(rec);
  }

  SimTrace run() {
    SimTrace trace;
    const double duration = sc_.durationSec > 0.0
                                ? sc_.durationSec
                                : sc_.trajectory.back().first + 20.0;
    const std::size_t nTicks =
        static_cast<std::size_t>(std::ceil(duration / sc_.dt - 1e-9));
    for (std::size_t i = 0; i < nTicks; ++i) step(trace, sc_.dt);
    return trace;
  }

 private:
  enum class Phase { follow, reposition, observe };

  void invoke_planner(SimTrace& trace) {
    plannedThisStillness_ = true;
    PlannerInvocation inv;
    inv.time = time_;
    inv.faceBefore =
        face_detected(robot_.position(), target_, sc_.grid, sc_.faceCone);
    inv.estimatedClass = estimate_orientation();
    ++invocationCounter_;

    // Ground truth plans with the target's true heading; model mode derives
    // the heading implied by the estimated class at the robot's bearing.
    Pose2D planTarget = target_;
    if (sc_.orientationSource == OrientationSource::model) {
      planTarget.headingDeg = labels::wrap_degrees(
          plan::bearing_deg(target_.position(), robot_.position()) -
          45.0 * inv.estimatedClass);
    }
    inv.planningHeadingDeg = planTarget.headingDeg;

    auto candidates = plan::generate_candidates(planTarget, sc_.bearingsPerRing);
    std::vector<plan::Candidate> inBounds;
    for (const auto& c : candidates)
      if (sc_.grid.in_bounds(c.position)) inBounds.push_back(c);

    std::optional<std::pair<plan::Candidate, plan::UtilityBreakdown>> best;
    if (!inBounds.empty())
      best = plan::select_best(inBounds, robot_, planTarget, sc_.grid,
                               {sc_.bearingsPerRing, false});
    if (best) {
      auto path = plan::bfs_path(sc_.grid,
                                 sc_.grid.world_to_cell(robot_.position()),
                                 sc_.grid.world_to_cell(best->first.position));
      if (path) {
        inv.viable = true;
        inv.selected = best->first;
        inv.breakdown = best->second;
        path_ = std::move(*path);
        pathIdx_ = 0;
        dest_ = best->first.position;
        activeInvocation_ = trace.invocations.size();
        phase_ = Phase::reposition;
      }
    }
    trace.invocations.push_back(inv);
  }

  void follow_target(double dt) {
    if (plan::distance(robot_.position(), target_.position()) <=
        sc_.followDistance)
      return;
    const CellIndex targetCell = sc_.grid.world_to_cell(target_.position());
    if (followPath_.empty() || !(followGoal_ == targetCell)) {
      auto path = plan::bfs_path(
          sc_.grid, sc_.grid.world_to_cell(robot_.position()), targetCell);
      if (!path) {
        followPath_.clear();
        return;  // unreachable; hold position
      }
      followPath_ = std::move(*path);
      followIdx_ = 0;
      followGoal_ = targetCell;
    }
    double budget = sc_.robotSpeed * dt;
    while (budget > 0.0 && followIdx_ < followPath_.size()) {
      if (plan::distance(robot_.position(), target_.position()) <=
          sc_.followDistance)
        break;
      const Vec2 wp = sc_.grid.cell_center(followPath_[followIdx_]);
      const double d = plan::distance(robot_.position(), wp);
      if (d <= budget) {
        robot_.x = wp.x;
        robot_.y = wp.y;
        budget -= d;
        ++followIdx_;
      } else {
        move_toward(wp, budget);
        budget = 0.0;
      }
    }
  }

  void advance_reposition(SimTrace& trace, double dt) {
    double budget = sc_.robotSpeed * dt;
    while (budget > 0.0) {
      const Vec2 wp = pathIdx_ < path_.size()
                          ? sc_.grid.cell_center(path_[pathIdx_])
                          : dest_;
      const double d = plan::distance(robot_.position(), wp);
      if (d <= budget) {
        robot_.x = wp.x;
        robot_.y = wp.y;
        budget -= d;
        if (pathIdx_ < path_.size()) {
          ++pathIdx_;
        } else {
          // arrived at the exact candidate position
          robot_.headingDeg =
              plan::bearing_deg(robot_.position(), target_.position());
          trace.invocations[activeInvocation_].faceAfter =
              face_detected(robot_.position(), target_, sc_.grid, sc_.faceCone);
          phase_ = Phase::observe;
          return;
        }
      } else {
        move_toward(wp, budget);
        budget = 0.0;
      }
    }
  }

  void move_toward(const Vec2& wp, double dist) {
    const Vec2 delta = wp - robot_.position();
    const double d = plan::norm(delta);
    if (d < 1e-12) return;
    robot_.x += delta.x / d * dist;
    robot_.y += delta.y / d * dist;
    robot_.headingDeg = plan::bearing_deg({0, 0}, delta);
  }

  Scenario sc_;
  std::optional<nn::OrientationModel> model_;
  Pose2D robot_;
  Pose2D target_;
  Vec2 prevTargetPos_;
  double time_ = 0.0;
  double dwell_ = 0.0;
  bool plannedThisStillness_ = false;
  Phase phase_ = Phase::follow;

  std::vector<CellIndex> path_;
  std::size_t pathIdx_ = 0;
  Vec2 dest_;
  std::size_t activeInvocation_ = 0;

  std::vector<CellIndex> followPath_;
  std::size_t followIdx_ = 0;
  CellIndex followGoal_{-1, -1};

  std::uint64_t invocationCounter_ = 0;
};

/// Run a scenario end to end; deterministic given the scenario and its seed.
inline SimTrace run_scenario(const Scenario& scenario) {
  Simulator sim(scenario);
  return sim.run();
}

/// Scenario text format: one `key value...` pair per line, `#` comments.
/// Keys: grid, robot, dwell, face-cone, face-range, orientation-source,
/// seed, speed, follow-distance, dt, duration, bearings, waypoint (repeated:
/// time x y heading). Relative paths resolve against `baseDir`.
inline Scenario parse_scenario(std::istream& in, const std::string& baseDir) {
  Scenario sc;
  bool haveGrid = false;
  std::string line;
  std::size_t lineNo = 0;
  auto resolve = [&baseDir](const std::string& p) {
    if (p.empty() || p.front() == '/' || baseDir.empty()) return p;
    return baseDir + "/" + p;
  };
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    auto fail = [&](const std::string& what) {
      throw FormatError("scenario line " + std::to_string(lineNo) + ": " +
                        what);
    };
    if (key == "grid") {
      std::string p;
      if (!(ls >> p)) fail("grid needs a path");
      sc.grid = plan::load_pgm(resolve(p));
      haveGrid = true;
    } else if (key == "robot") {
      if (!(ls >> sc.robotStart.x >> sc.robotStart.y >> sc.robotStart.headingDeg))
        fail("robot needs x y heading");
    } else if (key == "waypoint") {
      double t;
      Pose2D p;
      if (!(ls >> t >> p.x >> p.y >> p.headingDeg))
        fail("waypoint needs time x y heading");
      sc.trajectory.emplace_back(t, p);
    } else if (key == "dwell") {
      if (!(ls >> sc.dwellThresholdSec)) fail("dwell needs seconds");
    } else if (key == "face-cone") {
      if (!(ls >> sc.faceCone.halfAngleDeg)) fail("face-cone needs degrees");
    } else if (key == "face-range") {
      if (!(ls >> sc.faceCone.minRange >> sc.faceCone.maxRange))
        fail("face-range needs min max");
    } else if (key == "orientation-source") {
      std::string src;
      if (!(ls >> src)) fail("orientation-source needs a value");
      if (src == "ground-truth") {
        sc.orientationSource = OrientationSource::groundTruth;
      } else if (src == "model") {
        std::string p;
        if (!(ls >> p)) fail("model source needs a path");
        sc.orientationSource = OrientationSource::model;
        sc.modelPath = resolve(p);
      } else {
        fail("unknown orientation source '" + src + "'");
      }
    } else if (key == "seed") {
      if (!(ls >> sc.seed)) fail("seed needs an integer");
    } else if (key == "speed") {
      if (!(ls >> sc.robotSpeed)) fail("speed needs m/s");
    } else if (key == "follow-distance") {
      if (!(ls >> sc.followDistance)) fail("follow-distance needs meters");
    } else if (key == "dt") {
      if (!(ls >> sc.dt)) fail("dt needs seconds");
    } else if (key == "duration") {
      if (!(ls >> sc.durationSec)) fail("duration needs seconds");
    } else if (key == "bearings") {
      if (!(ls >> sc.bearingsPerRing)) fail("bearings needs a count");
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!haveGrid) throw FormatError("scenario: missing grid");
  sc.validate();
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  const auto slash = path.find_last_of('/');
  const std::string baseDir =
      slash == std::string::npos ? "" : path.substr(0, slash);
  return parse_scenario(in, baseDir);
}

}  // namespace orientbot::sim
