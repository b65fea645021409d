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

#ifndef ROADCAL__IO_HPP_
#define ROADCAL__IO_HPP_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadcal/geometry.hpp"
#include "roadcal/hypothesis.hpp"
#include "roadcal/refinement.hpp"
#include "roadcal/synthgen.hpp"
#include "roadcal/tracking.hpp"

namespace roadcal
{

// Detections: one box per line, `timestamp_s,u,v,w,h[,detector_id]`. Lines
// sharing a timestamp form one frame. Blank lines and `#` comments are skipped.
std::vector<DetectionFrame> parse_detections(std::istream & in);
std::vector<DetectionFrame> read_detections(const std::filesystem::path & path);
void write_detections(std::ostream & out, const std::vector<DetectionFrame> & frames, bool with_ids);
void write_detections(
  const std::filesystem::path & path, const std::vector<DetectionFrame> & frames, bool with_ids);

// Localization: `timestamp_s,x_utm,y_utm,z_utm,roll,pitch,yaw`, radians.
// The lever arm is the antenna position in the vehicle body frame; it is
// removed so positions refer to the vehicle reference point.
std::vector<LocalizationSample> parse_localization(
  std::istream & in, const Vec3 & lever_arm = Vec3::Zero());
std::vector<LocalizationSample> read_localization(
  const std::filesystem::path & path, const Vec3 & lever_arm = Vec3::Zero());
void write_localization(std::ostream & out, const std::vector<LocalizationSample> & log);
void write_localization(const std::filesystem::path & path, const std::vector<LocalizationSample> & log);

nlohmann::json to_json(const Intrinsics & intr);
Intrinsics intrinsics_from_json(const nlohmann::json & j);
Intrinsics read_intrinsics(const std::filesystem::path & path);
void write_intrinsics(const std::filesystem::path & path, const Intrinsics & intr);

/// Unit quaternion (w, x, y, z) with w >= 0.
std::array<double, 4> quaternion_from_rotation(const Mat3 & r);
Mat3 rotation_from_quaternion(std::array<double, 4> q);

struct CalibrationDocument
{
  ExtrinsicCalibration calib;
  Intrinsics intrinsics;
  nlohmann::json metrics = nlohmann::json::object();
  std::string tool_version;
  std::string config_hash;
};

std::string format_calibration(const CalibrationDocument & doc);
CalibrationDocument parse_calibration(const std::string & text);
void write_calibration(const std::filesystem::path & path, const CalibrationDocument & doc);
CalibrationDocument read_calibration(const std::filesystem::path & path);

struct DistanceBin
{
  double center_m = 0.0;
  double mean_delta_p_m = 0.0;
  std::size_t count = 0;
};

std::vector<DistanceBin> distance_bins(const std::vector<PairEvaluation> & samples, double width_m = 0.5);
void write_plot_data(const std::filesystem::path & path, const std::vector<DistanceBin> & bins);

nlohmann::json to_json(const ScenarioConfig & config);
ScenarioConfig scenario_from_json(const nlohmann::json & j);
nlohmann::json to_json(const ScenarioTruth & truth);

std::string read_text(const std::filesystem::path & path);
void write_text(const std::filesystem::path & path, const std::string & text);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace roadcal

#endif  // ROADCAL__IO_HPP_
