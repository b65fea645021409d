// Copyright 2026 The roadcal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: calibrate, simulate, evaluate, inspect.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "roadcal/config.hpp"
#include "roadcal/errors.hpp"
#include "roadcal/io.hpp"
#include "roadcal/pipeline.hpp"
#include "roadcal/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitInsufficientTraversals = 2;
constexpr int kExitInput = 3;
constexpr int kExitNoConsensus = 4;

int exit_code(roadcal::ErrorCode code)
{
  using roadcal::ErrorCode;
  switch (code) {
    case ErrorCode::kInsufficientTraversals:
      return kExitInsufficientTraversals;
    case ErrorCode::kNoConsensus:
      return kExitNoConsensus;
    case ErrorCode::kInput:
    case ErrorCode::kParse:
    case ErrorCode::kUnits:
    case ErrorCode::kConfig:
    case ErrorCode::kIo:
      return kExitInput;
    default:
      return kExitOther;
  }
}

struct CommonInputs
{
  std::string detections;
  std::string localization;
  std::string intrinsics;
  std::string config;
  std::vector<std::string> overrides;
  bool pretracked = false;
};

void add_inputs(CLI::App * cmd, CommonInputs & in)
{
  cmd->add_option("--detections", in.detections, "Detection boxes (CSV)")->required();
  cmd->add_option("--localization", in.localization, "Vehicle pose log (CSV)")->required();
  cmd->add_option("--intrinsics", in.intrinsics, "Camera intrinsics (JSON)")->required();
  cmd->add_option("--config", in.config, "Pipeline configuration (JSON)");
  cmd->add_option("--set", in.overrides, "Override a config value, e.g. ransac.inlier_threshold_px=16");
  cmd->add_flag("--pretracked", in.pretracked, "Use the detector ids as tracks");
}

roadcal::PipelineConfig load(const CommonInputs & in)
{
  std::optional<fs::path> file;
  if (!in.config.empty()) {
    file = in.config;
  }
  return roadcal::load_config(file, roadcal::process_env(), in.overrides);
}

void print_summary(const roadcal::RunReport & report)
{
  const auto & c = report.counts;
  std::fprintf(
    stderr, "frames %zu, detections %zu, tracks %zu, hypotheses %zu (accepted %zu), edges %zu, groups %zu\n",
    c.frames, c.detections, c.tracks, c.hypotheses, c.accepted, c.graph_edges, c.groups);
  for (int i = 0; i < roadcal::kRejectionReasonCount; ++i) {
    if (c.rejections[static_cast<std::size_t>(i)] > 0) {
      std::fprintf(
        stderr, "  rejected %-22s %zu\n", std::string(roadcal::to_string(static_cast<roadcal::RejectionReason>(i))).c_str(),
        c.rejections[static_cast<std::size_t>(i)]);
    }
  }
}

int run_calibrate(const CommonInputs & in, const std::string & out, const std::string & report_path,
                  const std::string & plot_path)
{
  const auto config = load(in);
  const auto frames = roadcal::read_detections(in.detections);
  const auto log = roadcal::read_localization(in.localization, config.lever_arm);
  const auto intr = roadcal::read_intrinsics(in.intrinsics);
  try {
    const auto report = roadcal::run_calibration(config, frames, log, intr, in.pretracked);
    print_summary(report);
    roadcal::emit_calibration(report, out);
    if (!report_path.empty()) {
      roadcal::emit_report(report, report_path);
    }
    if (!plot_path.empty()) {
      roadcal::emit_plot_data(report, plot_path);
    }
    const auto & m = report.result->metrics;
    std::fprintf(
      stderr, "delta_p mean %.3f m, max %.3f m, e_m %.2f %%, e_w %.2f %% over %zu pairs\n", m.delta_p_mean,
      m.delta_p_max, m.e_mean, m.e_max, m.evaluated);
  } catch (const roadcal::PipelineError & e) {
    print_summary(e.report());
    if (!report_path.empty()) {
      json j = roadcal::to_json(e.report());
      j["error"] = {{"stage", e.stage()}, {"code", std::string(roadcal::to_string(e.code()))}, {"message", e.what()}};
      roadcal::write_text(report_path, j.dump(2) + "\n");
    }
    throw;
  }
  return kExitOk;
}

int run_simulate(const std::string & scenario_path, const std::string & out_dir, bool with_ids)
{
  const auto config = roadcal::scenario_from_json(json::parse(roadcal::read_text(scenario_path)));
  const auto scenario = roadcal::generate(config);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  roadcal::write_detections(dir / "detections.csv", scenario.frames, with_ids);
  roadcal::write_localization(dir / "localization.csv", scenario.log);
  roadcal::write_intrinsics(dir / "intrinsics.json", config.intrinsics);
  roadcal::write_text(dir / "truth.json", roadcal::to_json(scenario.truth).dump(2) + "\n");
  std::size_t boxes = 0;
  for (const auto & f : scenario.frames) {
    boxes += f.boxes.size();
  }
  std::fprintf(
    stderr, "wrote %zu frames (%zu boxes), %zu localization samples, %zu target traversals to %s\n",
    scenario.frames.size(), boxes, scenario.log.size(), scenario.truth.traversals.size(), out_dir.c_str());
  return kExitOk;
}

int run_evaluate(const CommonInputs & in, const std::string & calibration, const std::string & plot_path)
{
  const auto config = load(in);
  const auto doc = roadcal::read_calibration(calibration);
  const auto frames = roadcal::read_detections(in.detections);
  const auto log = roadcal::read_localization(in.localization, config.lever_arm);
  const auto intr = roadcal::read_intrinsics(in.intrinsics);
  const auto eval = roadcal::evaluate_calibration(doc.calib, frames, log, intr, config, in.pretracked);
  json out = roadcal::to_json(eval.metrics);
  out["track_ids"] = eval.track_ids;
  std::cout << out.dump(2) << '\n';
  if (!plot_path.empty()) {
    roadcal::write_plot_data(plot_path, eval.bins);
  }
  return kExitOk;
}

void summarize_file(const std::string & detections, const std::string & localization)
{
  if (!detections.empty()) {
    const auto frames = roadcal::read_detections(detections);
    std::size_t boxes = 0;
    for (const auto & f : frames) {
      boxes += f.boxes.size();
    }
    json j{{"frames", frames.size()}, {"boxes", boxes}, {"with_ids", !frames.empty() && !frames.front().ids.empty()}};
    if (!frames.empty()) {
      j["first_timestamp"] = frames.front().timestamp;
      j["last_timestamp"] = frames.back().timestamp;
    }
    std::cout << json{{"detections", j}}.dump(2) << '\n';
  }
  if (!localization.empty()) {
    const auto log = roadcal::read_localization(localization);
    json j{{"samples", log.size()}};
    if (!log.empty()) {
      j["first_timestamp"] = log.front().timestamp;
      j["last_timestamp"] = log.back().timestamp;
    }
    std::cout << json{{"localization", j}}.dump(2) << '\n';
  }
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Roadside camera calibration from vehicle tracks and a pose log"};
  app.set_version_flag("--version", std::string(roadcal::version()));
  app.require_subcommand(1);

  CommonInputs cal_in;
  std::string cal_out;
  std::string cal_report;
  std::string cal_plot;
  auto * calibrate = app.add_subcommand("calibrate", "Estimate the camera calibration");
  add_inputs(calibrate, cal_in);
  calibrate->add_option("--out", cal_out, "Calibration document to write")->required();
  calibrate->add_option("--report", cal_report, "Full run report (JSON)");
  calibrate->add_option("--plot-data", cal_plot, "Distance-binned delta_p table (CSV)");

  std::string sim_scenario;
  std::string sim_out;
  bool sim_ids = false;
  auto * simulate = app.add_subcommand("simulate", "Generate a synthetic scenario");
  simulate->add_option("--scenario", sim_scenario, "Scenario description (JSON)")->required();
  simulate->add_option("--out-dir", sim_out, "Output directory")->required();
  simulate->add_flag("--with-ids", sim_ids, "Write true vehicle ids as detector ids");

  CommonInputs ev_in;
  std::string ev_calib;
  std::string ev_plot;
  auto * evaluate = app.add_subcommand("evaluate", "Score an existing calibration");
  add_inputs(evaluate, ev_in);
  evaluate->add_option("--calibration", ev_calib, "Calibration document")->required();
  evaluate->add_option("--plot-data", ev_plot, "Distance-binned delta_p table (CSV)");

  bool in_config = false;
  bool in_scenario = false;
  int in_traversals = 2;
  int in_distractors = 5;
  double in_sigma = 0.0;
  std::uint64_t in_seed = 1;
  std::string in_det;
  std::string in_loc;
  std::string in_cfg;
  std::vector<std::string> in_set;
  auto * inspect = app.add_subcommand("inspect", "Print templates or summarize input files");
  inspect->add_flag("--config", in_config, "Print the effective configuration");
  inspect->add_option("--config-file", in_cfg, "Configuration file to merge");
  inspect->add_option("--set", in_set, "Override a config value");
  inspect->add_flag("--scenario", in_scenario, "Print the built-in intersection scenario");
  inspect->add_option("--traversals", in_traversals, "Scenario traversal count");
  inspect->add_option("--distractors", in_distractors, "Scenario distractor count");
  inspect->add_option("--sigma-pos", in_sigma, "Scenario localization noise (m)");
  inspect->add_option("--seed", in_seed, "Scenario seed");
  inspect->add_option("--detections", in_det, "Summarize a detections file");
  inspect->add_option("--localization", in_loc, "Summarize a localization file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (calibrate->parsed()) {
      return run_calibrate(cal_in, cal_out, cal_report, cal_plot);
    }
    if (simulate->parsed()) {
      return run_simulate(sim_scenario, sim_out, sim_ids);
    }
    if (evaluate->parsed()) {
      return run_evaluate(ev_in, ev_calib, ev_plot);
    }
    if (inspect->parsed()) {
      if (in_config || !in_cfg.empty() || !in_set.empty()) {
        std::optional<fs::path> file;
        if (!in_cfg.empty()) {
          file = in_cfg;
        }
        const auto cfg = roadcal::load_config(file, roadcal::process_env(), in_set);
        std::cout << roadcal::to_json(cfg).dump(2) << '\n';
      }
      if (in_scenario) {
        auto sc = roadcal::intersection_scenario(in_traversals, in_distractors, in_sigma, in_seed);
        std::cout << roadcal::to_json(sc).dump(2) << '\n';
      }
      summarize_file(in_det, in_loc);
      return kExitOk;
    }
  } catch (const roadcal::Error & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.code());
  } catch (const nlohmann::json::exception & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
  return kExitOther;
}
