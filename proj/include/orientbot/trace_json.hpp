#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "orientbot/eval.hpp"
#include "orientbot/planner.hpp"
#include "orientbot/sim.hpp"
#include "orientbot/train.hpp"

namespace orientbot {

using Json = nlohmann::ordered_json;

inline Json to_json(const plan::Candidate& c) {
  return Json{{"x", c.position.x},
              {"y", c.position.y},
              {"radius", c.radius},
              {"bearing_deg", c.bearingDeg}};
}

inline Json to_json(const plan::UtilityBreakdown& u) {
  return Json{{"orientation", u.orientation},
              {"distance", u.distance},
              {"radius", u.radius},
              {"occupancy", u.occupancy},
              {"obstacle", u.obstacle},
              {"total", u.total},
              {"observed_class", u.observedClass}};
}

/// Full planning trace: every candidate with its breakdown, plus the
/// selection (or a no-viable marker).
inline Json plan_trace_json(
    const std::vector<plan::Candidate>& candidates,
    const std::vector<plan::UtilityBreakdown>& breakdowns,
    const std::optional<std::pair<plan::Candidate, plan::UtilityBreakdown>>&
        selection) {
  Json trace;
  Json cands = Json::array();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Json c = to_json(candidates[i]);
    c["utility"] = to_json(breakdowns[i]);
    cands.push_back(std::move(c));
  }
  trace["candidates"] = std::move(cands);
  if (selection) {
    trace["selected"] = to_json(selection->first);
    trace["selected"]["utility"] = to_json(selection->second);
  } else {
    trace["selected"] = nullptr;
  }
  return trace;
}

inline Json to_json(const sim::TickRecord& t) {
  return Json{{"time", t.time},
              {"robot", {{"x", t.robot.x}, {"y", t.robot.y}, {"heading", t.robot.headingDeg}}},
              {"target", {{"x", t.target.x}, {"y", t.target.y}, {"heading", t.target.headingDeg}}},
              {"dwell", t.dwell},
              {"face_detected", t.faceDetected}};
}

inline Json to_json(const sim::PlannerInvocation& inv) {
  Json j{{"time", inv.time},
         {"estimated_class", inv.estimatedClass},
         {"planning_heading_deg", inv.planningHeadingDeg},
         {"viable", inv.viable},
         {"face_before", inv.faceBefore}};
  if (inv.viable) {
    j["selected"] = to_json(inv.selected);
    j["utility"] = to_json(inv.breakdown);
  }
  if (inv.faceAfter)
    j["face_after"] = *inv.faceAfter;
  else
    j["face_after"] = nullptr;
  return j;
}

inline Json to_json(const sim::SimTrace& trace) {
  Json j;
  Json ticks = Json::array();
  for (const auto& t : trace.ticks) ticks.push_back(to_json(t));
  Json invs = Json::array();
  for (const auto& i : trace.invocations) invs.push_back(to_json(i));
  j["ticks"] = std::move(ticks);
  j["planner_invocations"] = std::move(invs);
  return j;
}

inline Json to_json(const nn::TrainReport& r) {
  return Json{{"steps_run", r.stepsRun},
              {"step_loss", r.stepLoss},
              {"val_accuracy", r.valAccuracy}};
}

/// Metrics JSON for a confusion matrix; nearest_label_fraction is omitted
/// when there are no misclassifications (it is undefined).
inline Json metrics_json(const eval::ConfusionMatrix& cm) {
  Json j;
  j["samples"] = cm.total();
  j["accuracy"] = eval::accuracy(cm);
  j["mean_orientation_error_deg"] = eval::mean_orientation_error(cm);
  if (cm.total() != cm.trace())
    j["nearest_label_fraction"] = eval::nearest_label_fraction(cm);
  return j;
}

}  // namespace orientbot
