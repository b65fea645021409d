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

#ifndef ROADCAL__CONFIG_HPP_
#define ROADCAL__CONFIG_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadcal/geometry.hpp"
#include "roadcal/grouping.hpp"
#include "roadcal/hypothesis.hpp"
#include "roadcal/pnp.hpp"
#include "roadcal/refinement.hpp"
#include "roadcal/tracking.hpp"

namespace roadcal
{

struct PipelineConfig
{
  TrackerParams tracker;
  RansacParams ransac;
  PrefilterParams prefilter;
  GroupingParams grouping;
  RefinementSettings refinement;
  VehicleDims vehicle;
  AnchorMode anchor = MeanAnchor{};
  // Antenna position in the vehicle body frame (x forward, y left, z up).
  Vec3 lever_arm = Vec3::Zero();

  void validate() const;
};

nlohmann::json to_json(const PipelineConfig & config);

/// Strict conversion: unknown sections or keys and wrong types are errors.
/// Missing keys keep their defaults.
PipelineConfig config_from_json(const nlohmann::json & j);

using EnvLookup = std::function<std::optional<std::string>(const std::string &)>;

/// Looks up real process environment variables.
EnvLookup process_env();

/// Layers defaults < file < environment < command line. Environment
/// variables are named ROADCAL_<SECTION>_<KEY> (upper case); command-line
/// overrides are `section.key=value` strings. Values are parsed as JSON,
/// falling back to a plain string.
PipelineConfig load_config(
  const std::optional<std::filesystem::path> & file, const EnvLookup & env,
  const std::vector<std::string> & overrides);

/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string config_hash(const PipelineConfig & config);

}  // namespace roadcal

#endif  // ROADCAL__CONFIG_HPP_
