// orientbot command-line interface: synthetic data generation, training,
// evaluation, reposition planning and scenario simulation.

#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orientbot/orientbot.hpp"
#include "orientbot/trace_json.hpp"

namespace {

using namespace orientbot;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

plan::Pose2D parse_pose(const std::string& s, bool withHeading) {
  std::istringstream in(s);
  plan::Pose2D p;
  char c1 = 0, c2 = 0;
  if (withHeading) {
    if (!(in >> p.x >> c1 >> p.y >> c2 >> p.headingDeg) || c1 != ',' || c2 != ',')
      throw ArgumentError("expected x,y,heading but got '" + s + "'");
  } else {
    if (!(in >> p.x >> c1 >> p.y) || c1 != ',')
      throw ArgumentError("expected x,y but got '" + s + "'");
  }
  std::string rest;
  if (in >> rest) throw ArgumentError("trailing junk in '" + s + "'");
  p.headingDeg = labels::wrap_degrees(p.headingDeg);
  return p;
}

/// Prediction CSV: optional header, then one `label,pred` row per sample.
eval::ConfusionMatrix confusion_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions file: " + path);
  std::vector<int> labels, preds;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    const auto firstNonSpace = line.find_first_not_of(" \t");
    if (firstNonSpace == std::string::npos) continue;
    if (!std::isdigit(static_cast<unsigned char>(line[firstNonSpace])))
      continue;  // header
    std::istringstream ls(line);
    int label, pred;
    char comma;
    if (!(ls >> label >> comma >> pred) || comma != ',')
      throw FormatError("predictions file line " + std::to_string(lineNo) +
                        ": expected label,pred");
    labels.push_back(label);
    preds.push_back(pred);
  }
  return eval::confusion(preds, labels);
}

int cmd_gen_data(std::size_t n, std::uint64_t seed, const std::string& out,
                 const data::StyleParams& style, std::size_t threads) {
  data::Dataset ds = data::generate_synthetic(n, seed, style, threads);
  data::save_dataset(ds, out);
  auto hist = ds.class_histogram();
  std::cout << "wrote " << ds.size() << " samples to " << out
            << " (class histogram:";
  for (auto h : hist) std::cout << " " << h;
  std::cout << ")\n";
  return 0;
}

int cmd_train(const std::string& dataPath, double valFrac,
              const nn::TrainConfig& cfg, const std::string& outModel,
              const std::string& reportPath, const std::string& initModel) {
  data::Dataset full = data::load_dataset(dataPath);
  auto [trainSet, valSet] = data::split(full, valFrac, cfg.seed);
  std::cout << "train " << trainSet.size() << " / val " << valSet.size()
            << " samples\n";

  nn::OrientationModel model = initModel.empty()
                                   ? nn::build_paper_model(cfg.seed)
                                   : nn::load_model(initModel);
  nn::TrainReport report;
  if (initModel.empty())
    report = nn::train(model, trainSet, cfg, valSet);
  else
    report = nn::fine_tune(model, trainSet, cfg, valSet);

  nn::save_model(model, outModel);
  std::cout << "model written to " << outModel << "\n";
  for (std::size_t s = 0; s < report.stepsRun; ++s)
    std::cout << "step " << (s + 1) << ": loss " << report.stepLoss[s]
              << ", val accuracy " << report.valAccuracy[s] << "\n";
  if (!reportPath.empty()) write_text(reportPath, to_json(report).dump(2) + "\n");
  return 0;
}

int cmd_eval(const std::string& modelPath, const std::string& dataPath,
             const std::string& predCsv, const std::string& outPath,
             std::string confusionPath) {
  eval::ConfusionMatrix cm;
  if (!predCsv.empty()) {
    cm = confusion_from_csv(predCsv);
  } else {
    nn::OrientationModel model = nn::load_model(modelPath);
    data::Dataset ds = data::load_dataset(dataPath);
    if (ds.samples.empty()) throw ArgumentError("dataset is empty");
    std::vector<int> preds, labels;
    preds.reserve(ds.size());
    labels.reserve(ds.size());
    for (const auto& s : ds.samples) {
      preds.push_back(nn::predict(model, s.image).classIndex);
      labels.push_back(s.classLabel);
    }
    cm = eval::confusion(preds, labels);
  }

  const Json metrics = metrics_json(cm);
  write_text(outPath, metrics.dump(2) + "\n");
  if (confusionPath.empty()) {
    const auto dot = outPath.find_last_of('.');
    confusionPath =
        (dot == std::string::npos ? outPath : outPath.substr(0, dot)) +
        "_confusion.csv";
  }
  write_text(confusionPath, eval::to_csv(cm));

  std::cout << "samples " << cm.total() << "\n";
  std::cout << "accuracy " << eval::accuracy(cm) << "\n";
  std::cout << "mean orientation error " << eval::mean_orientation_error(cm)
            << " deg\n";
  std::cout << "metrics " << outPath << ", confusion " << confusionPath << "\n";
  return 0;
}

int cmd_plan(const std::string& gridPath, const std::string& robotArg,
             const std::string& targetArg, std::size_t bearings,
             bool literalObstacle, const std::string& outPath) {
  const plan::OccupancyGrid grid = plan::load_pgm(gridPath);
  plan::Pose2D robot = parse_pose(robotArg, false);
  plan::Pose2D target = parse_pose(targetArg, true);

  const plan::PlanConfig cfg{bearings, literalObstacle};
  auto candidates = plan::generate_candidates(target, bearings);
  std::vector<plan::Candidate> inBounds;
  for (const auto& c : candidates)
    if (grid.in_bounds(c.position)) inBounds.push_back(c);
  if (inBounds.empty()) throw ArgumentError("no candidate lies inside the grid");

  std::vector<plan::UtilityBreakdown> breakdowns;
  breakdowns.reserve(inBounds.size());
  for (const auto& c : inBounds)
    breakdowns.push_back(plan::utility(c, robot, target, grid, inBounds, cfg));
  auto best = plan::select_best(inBounds, robot, target, grid, cfg);

  write_text(outPath, plan_trace_json(inBounds, breakdowns, best).dump(2) + "\n");
  if (best) {
    std::cout << "selected candidate at (" << best->first.position.x << ", "
              << best->first.position.y << "), radius " << best->first.radius
              << " m, bearing " << best->first.bearingDeg << " deg, utility "
              << best->second.total << "\n";
  } else {
    std::cout << "no viable candidate\n";
  }
  return 0;
}

int cmd_simulate(const std::string& scenarioPath, const std::string& outPath) {
  const sim::Scenario scenario = sim::load_scenario(scenarioPath);
  const sim::SimTrace trace = sim::run_scenario(scenario);
  write_text(outPath, to_json(trace).dump(2) + "\n");
  std::size_t transitions = 0;
  for (const auto& inv : trace.invocations)
    if (inv.faceBefore == 0 && inv.faceAfter && *inv.faceAfter == 1)
      ++transitions;
  std::cout << trace.ticks.size() << " ticks, " << trace.invocations.size()
            << " planner invocations, " << transitions
            << " face 0->1 transitions\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"body-orientation estimation, planning and simulation toolkit"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::size_t genN = 0;
  std::uint64_t genSeed = 0;
  std::size_t genThreads = 1;
  std::string genOut;
  data::StyleParams style;
  gen->add_option("--n", genN, "sample count")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", genSeed, "generator seed");
  gen->add_option("--out", genOut, "output dataset file")->required();
  gen->add_option("--illum-lo", style.illumLo, "illumination scale lower bound");
  gen->add_option("--illum-hi", style.illumHi, "illumination scale upper bound");
  gen->add_option("--jitter", style.jitterPx, "framing jitter in pixels");
  gen->add_option("--color-jitter", style.colorJitter,
                  "per-channel color noise");
  gen->add_option("--threads", genThreads,
                  "render workers (output is thread-count independent)");

  // train
  auto* tr = app.add_subcommand("train", "train or fine-tune a model");
  std::string trData, trOutModel, trReport, trInit;
  double trValFrac = 0.1;
  nn::TrainConfig cfg;
  tr->add_option("--data", trData, "dataset file")->required();
  tr->add_option("--val-frac", trValFrac, "validation fraction");
  tr->add_option("--lr", cfg.learningRate, "learning rate");
  tr->add_option("--steps", cfg.steps, "training steps");
  tr->add_option("--minibatch-size", cfg.minibatchSize, "samples per minibatch");
  tr->add_option("--minibatches", cfg.minibatchesPerStep,
                 "minibatches per step");
  tr->add_option("--seed", cfg.seed, "training seed");
  tr->add_option("--threads", cfg.threads, "gradient worker threads");
  tr->add_option("--stop-at-acc", cfg.stopAtValAccuracy,
                 "stop early at this validation accuracy (0 = off)");
  tr->add_option("--init-model", trInit, "fine-tune from this model");
  tr->add_option("--out-model", trOutModel, "output model file")->required();
  tr->add_option("--report", trReport, "training report JSON");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate predictions");
  std::string evModel, evData, evPredCsv, evOut, evConfusion;
  ev->add_option("--model", evModel, "model file");
  ev->add_option("--data", evData, "dataset file");
  ev->add_option("--pred-csv", evPredCsv, "label,pred CSV instead of a model run");
  ev->add_option("--out", evOut, "metrics JSON output")->required();
  ev->add_option("--confusion-out", evConfusion, "confusion CSV output");

  // plan
  auto* pl = app.add_subcommand("plan", "score reposition candidates");
  std::string plGrid, plRobot, plTarget, plOut;
  std::size_t plBearings = 16;
  bool plLiteral = false;
  pl->add_option("--grid", plGrid, "occupancy grid PGM")->required();
  pl->add_option("--robot", plRobot, "robot position x,y")->required();
  pl->add_option("--target", plTarget, "target pose x,y,heading")->required();
  pl->add_option("--bearings", plBearings, "candidate bearings per ring");
  pl->add_flag("--literal-obstacle", plLiteral,
               "keep the literal (inverted) obstacle factor");
  pl->add_option("--out", plOut, "plan trace JSON output")->required();

  // simulate
  auto* si = app.add_subcommand("simulate", "run a scenario");
  std::string siScenario, siOut;
  si->add_option("--scenario", siScenario, "scenario file")->required();
  si->add_option("--out", siOut, "trace JSON output")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen_data(genN, genSeed, genOut, style, genThreads);
    if (tr->parsed())
      return cmd_train(trData, trValFrac, cfg, trOutModel, trReport, trInit);
    if (ev->parsed()) {
      if (evPredCsv.empty() && (evModel.empty() || evData.empty()))
        throw ArgumentError("eval needs either --pred-csv or --model + --data");
      return cmd_eval(evModel, evData, evPredCsv, evOut, evConfusion);
    }
    if (pl->parsed())
      return cmd_plan(plGrid, plRobot, plTarget, plBearings, plLiteral, plOut);
    if (si->parsed()) return cmd_simulate(siScenario, siOut);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
