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

#include "roadcal/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>

#include "roadcal/errors.hpp"
#include "roadcal/io.hpp"

namespace roadcal
{

using nlohmann::json;

void PipelineConfig::validate() const
{
  if (tracker.max_extrapolation_frames < 0 || tracker.min_track_detections < 1 ||
      tracker.frame_interval_s < 0.0 || tracker.image_width < 0 || tracker.image_height < 0) {
    throw Error(ErrorCode::kConfig, "invalid tracker parameters");
  }
  ransac.validate();
  prefilter.validate();
  grouping.validate();
  refinement.validate();
  vehicle.validate();
  if (!lever_arm.allFinite()) {
    throw Error(ErrorCode::kConfig, "lever arm must be finite");
  }
}

json to_json(const PipelineConfig & c)
{
  json anchor;
  if (const auto * fixed = std::get_if<FixedAnchor>(&c.anchor)) {
    anchor = {{"mode", "fixed"}, {"offset", {fixed->offset.x(), fixed->offset.y(), fixed->offset.z()}}};
  } else {
    anchor = {{"mode", "mean"}, {"offset", {0.0, 0.0, 0.0}}};
  }
  return json{
    {"tracker",
     {{"max_extrapolation_frames", c.tracker.max_extrapolation_frames},
      {"min_track_detections", c.tracker.min_track_detections},
      {"frame_interval_s", c.tracker.frame_interval_s}}},
    {"ransac",
     {{"max_iterations", c.ransac.max_iterations},
      {"inlier_threshold_px", c.ransac.inlier_threshold_px},
      {"min_inlier_ratio", c.ransac.min_inlier_ratio},
      {"rng_seed", c.ransac.rng_seed}}},
    {"prefilter",
     {{"min_pairs", c.prefilter.min_pairs},
      {"min_extent_2d_px", c.prefilter.min_extent_2d_px},
      {"min_extent_3d_m", c.prefilter.min_extent_3d_m},
      {"max_median_reproj_px", c.prefilter.max_median_reproj_px},
      {"d_thr", c.prefilter.d_thr},
      {"sync_tolerance", c.prefilter.sync_tolerance}}},
    {"grouping",
     {{"max_r_out", c.grouping.max_r_out},
      {"min_r_ov", c.grouping.min_r_ov},
      {"min_r_sim", c.grouping.min_r_sim},
      {"k_px", c.grouping.k_px},
      {"dbscan_eps_m", c.grouping.dbscan_eps_m},
      {"dbscan_min_pts", c.grouping.dbscan_min_pts}}},
    {"refinement",
     {{"max_iterations", c.refinement.max_iterations},
      {"gradient_tolerance", c.refinement.gradient_tolerance},
      {"step_tolerance", c.refinement.step_tolerance},
      {"reclamp_each_iteration", c.refinement.reclamp_each_iteration},
      {"correspondence_rounds", c.refinement.correspondence_rounds},
      {"skip_truncated_boxes", c.refinement.skip_truncated_boxes},
      {"truncation_margin_px", c.refinement.truncation_margin_px}}},
    {"vehicle", {{"length", c.vehicle.length}, {"width", c.vehicle.width}, {"height", c.vehicle.height}}},
    {"anchor", anchor},
    {"localization", {{"lever_arm", {c.lever_arm.x(), c.lever_arm.y(), c.lever_arm.z()}}}}};
}

namespace
{

// Copies every key of `src` into `dst`, requiring the same two-level layout.
void overlay(json & dst, const json & src, const std::string & origin)
{
  if (!src.is_object()) {
    throw Error(ErrorCode::kConfig, origin + ": configuration must be an object");
  }
  for (const auto & [section, body] : src.items()) {
    if (!dst.contains(section)) {
      throw Error(ErrorCode::kConfig, origin + ": unknown section '" + section + "'");
    }
    if (!body.is_object()) {
      throw Error(ErrorCode::kConfig, origin + ": section '" + section + "' must be an object");
    }
    for (const auto & [key, value] : body.items()) {
      if (!dst[section].contains(key)) {
        throw Error(ErrorCode::kConfig, origin + ": unknown key '" + section + "." + key + "'");
      }
      dst[section][key] = value;
    }
  }
}

json parse_value(const std::string & text)
{
  try {
    return json::parse(text);
  } catch (const json::parse_error &) {
    return json(text);
  }
}

Vec3 vec3(const json & j, const char * name)
{
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::kConfig, std::string(name) + " must be an array of 3 numbers");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

std::string upper(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::toupper(ch); });
  return s;
}

}  // namespace

PipelineConfig config_from_json(const json & j)
{
  json full = to_json(PipelineConfig{});
  overlay(full, j, "config");
  PipelineConfig c;
  try {
    const auto & t = full.at("tracker");
    c.tracker.max_extrapolation_frames = t.at("max_extrapolation_frames").get<int>();
    c.tracker.min_track_detections = t.at("min_track_detections").get<int>();
    c.tracker.frame_interval_s = t.at("frame_interval_s").get<double>();

    const auto & r = full.at("ransac");
    c.ransac.max_iterations = r.at("max_iterations").get<int>();
    c.ransac.inlier_threshold_px = r.at("inlier_threshold_px").get<double>();
    c.ransac.min_inlier_ratio = r.at("min_inlier_ratio").get<double>();
    c.ransac.rng_seed = r.at("rng_seed").get<std::uint64_t>();

    const auto & p = full.at("prefilter");
    c.prefilter.min_pairs = p.at("min_pairs").get<int>();
    c.prefilter.min_extent_2d_px = p.at("min_extent_2d_px").get<double>();
    c.prefilter.min_extent_3d_m = p.at("min_extent_3d_m").get<double>();
    c.prefilter.max_median_reproj_px = p.at("max_median_reproj_px").get<double>();
    c.prefilter.d_thr = p.at("d_thr").get<double>();
    c.prefilter.sync_tolerance = p.at("sync_tolerance").get<double>();

    const auto & g = full.at("grouping");
    c.grouping.max_r_out = g.at("max_r_out").get<double>();
    c.grouping.min_r_ov = g.at("min_r_ov").get<double>();
    c.grouping.min_r_sim = g.at("min_r_sim").get<double>();
    c.grouping.k_px = g.at("k_px").get<double>();
    c.grouping.dbscan_eps_m = g.at("dbscan_eps_m").get<double>();
    c.grouping.dbscan_min_pts = g.at("dbscan_min_pts").get<int>();

    const auto & f = full.at("refinement");
    c.refinement.max_iterations = f.at("max_iterations").get<int>();
    c.refinement.gradient_tolerance = f.at("gradient_tolerance").get<double>();
    c.refinement.step_tolerance = f.at("step_tolerance").get<double>();
    c.refinement.reclamp_each_iteration = f.at("reclamp_each_iteration").get<bool>();
    c.refinement.correspondence_rounds = f.at("correspondence_rounds").get<int>();
    c.refinement.skip_truncated_boxes = f.at("skip_truncated_boxes").get<bool>();
    c.refinement.truncation_margin_px = f.at("truncation_margin_px").get<double>();

    const auto & v = full.at("vehicle");
    c.vehicle.length = v.at("length").get<double>();
    c.vehicle.width = v.at("width").get<double>();
    c.vehicle.height = v.at("height").get<double>();

    const auto & a = full.at("anchor");
    const auto mode = a.at("mode").get<std::string>();
    if (mode == "mean") {
      c.anchor = MeanAnchor{};
    } else if (mode == "fixed") {
      c.anchor = FixedAnchor{vec3(a.at("offset"), "anchor.offset")};
    } else {
      throw Error(ErrorCode::kConfig, "anchor.mode must be 'mean' or 'fixed'");
    }
    c.lever_arm = vec3(full.at("localization").at("lever_arm"), "localization.lever_arm");
  } catch (const json::exception & e) {
    throw Error(ErrorCode::kConfig, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

EnvLookup process_env()
{
  return [](const std::string & name) -> std::optional<std::string> {
    if (const char * v = std::getenv(name.c_str())) {
      return std::string(v);
    }
    return std::nullopt;
  };
}

PipelineConfig load_config(
  const std::optional<std::filesystem::path> & file, const EnvLookup & env,
  const std::vector<std::string> & overrides)
{
  json merged = to_json(PipelineConfig{});
  if (file) {
    json from_file;
    try {
      from_file = json::parse(read_text(*file));
    } catch (const json::parse_error & e) {
      throw Error(ErrorCode::kParse, file->string() + ": " + e.what());
    }
    overlay(merged, from_file, file->string());
  }
  if (env) {
    const json layout = merged;
    for (const auto & [section, body] : layout.items()) {
      for (const auto & [key, value] : body.items()) {
        if (const auto text = env("ROADCAL_" + upper(section) + "_" + upper(key))) {
          merged[section][key] = parse_value(*text);
        }
      }
    }
  }
  for (const auto & item : overrides) {
    const auto eq = item.find('=');
    const auto dot = item.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw Error(ErrorCode::kConfig, "override '" + item + "' is not of the form section.key=value");
    }
    json patch;
    patch[item.substr(0, dot)][item.substr(dot + 1, eq - dot - 1)] = parse_value(item.substr(eq + 1));
    overlay(merged, patch, "override");
  }
  return config_from_json(merged);
}

std::string config_hash(const PipelineConfig & config)
{
  const std::string canonical = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace roadcal
