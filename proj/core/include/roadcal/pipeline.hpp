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

#ifndef ROADCAL__PIPELINE_HPP_
#define ROADCAL__PIPELINE_HPP_

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadcal/config.hpp"
#include "roadcal/errors.hpp"
#include "roadcal/io.hpp"
#include "roadcal/refinement.hpp"
#include "roadcal/tracking.hpp"

namespace roadcal
{

std::string_view version();

struct StageCounts
{
  std::size_t frames = 0;
  std::size_t detections = 0;
  std::size_t tracks = 0;
  std::size_t hypotheses = 0;
  std::size_t accepted = 0;
  std::array<std::size_t, kRejectionReasonCount> rejections{};
  std::size_t graph_edges = 0;
  std::size_t connected = 0;  // accepted hypotheses with at least one edge
  std::size_t groups = 0;

  std::size_t rejected() const;
};

struct HypothesisSummary
{
  int track_id = 0;
  std::size_t detections = 0;
  std::size_t pairs = 0;
  std::optional<RejectionReason> rejection;
  double median_reproj_px = 0.0;
  std::optional<Vec3> camera_center_utm;
};

struct RunReport
{
  PipelineConfig config;
  std::string config_hash;
  Intrinsics intrinsics;
  Vec3 anchor = Vec3::Zero();
  GroundPlane plane;
  StageCounts counts;
  // Finalized tracks; detections keep their input frame and box indices.
  std::vector<ObjectTrack> tracks;
  std::vector<HypothesisSummary> hypotheses;
  std::vector<std::pair<int, int>> edges;  // track ids
  std::vector<std::vector<int>> groups;    // track ids
  std::optional<CalibrationResult> result;
  std::vector<DistanceBin> bins;
};

/// A stage failure; carries everything computed before it.
class PipelineError : public Error
{
public:
  PipelineError(ErrorCode code, std::string stage, const std::string & message, RunReport partial);

  const std::string & stage() const { return stage_; }
  const RunReport & report() const { return report_; }

private:
  std::string stage_;
  RunReport report_;
};

/// Tracking, hypothesis construction, grouping and refinement. With
/// `pretracked` the detector ids define the tracks.
RunReport run_calibration(
  const PipelineConfig & config, const std::vector<DetectionFrame> & frames,
  const std::vector<LocalizationSample> & log, const Intrinsics & intr, bool pretracked = false);

nlohmann::json to_json(const RunReport & report);
CalibrationDocument calibration_document(const RunReport & report);

void emit_calibration(const RunReport & report, const std::filesystem::path & path);
void emit_report(const RunReport & report, const std::filesystem::path & path);
void emit_plot_data(const RunReport & report, const std::filesystem::path & path);

struct EvaluationReport
{
  Metrics metrics;
  std::vector<int> track_ids;  // tracks attributed to the calibration vehicle
  std::vector<DistanceBin> bins;
};

/// Scores a given calibration against recorded data. Tracks whose boxes
/// agree with the projected vehicle path are attributed to the vehicle.
EvaluationReport evaluate_calibration(
  const ExtrinsicCalibration & calib, const std::vector<DetectionFrame> & frames,
  const std::vector<LocalizationSample> & log, const Intrinsics & intr, const PipelineConfig & config,
  bool pretracked = false);

nlohmann::json to_json(const Metrics & metrics);

}  // namespace roadcal

#endif  // ROADCAL__PIPELINE_HPP_
