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

#include "roadcal/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include "roadcal/grouping.hpp"

#ifndef ROADCAL_VERSION
#define ROADCAL_VERSION "0.0.0"
#endif

namespace roadcal
{

using nlohmann::json;

std::string_view version() { return ROADCAL_VERSION; }

std::size_t StageCounts::rejected() const
{
  return std::accumulate(rejections.begin(), rejections.end(), std::size_t{0});
}

PipelineError::PipelineError(ErrorCode code, std::string stage, const std::string & message, RunReport partial)
: Error(code, stage + ": " + message), stage_(std::move(stage)), report_(std::move(partial))
{
}

namespace
{

std::vector<ObjectTrack> make_tracks(
  const PipelineConfig & config, const std::vector<DetectionFrame> & frames, const Intrinsics & intr,
  bool pretracked)
{
  if (pretracked) {
    return tracks_from_ids(frames, config.tracker.min_track_detections);
  }
  TrackerParams params = config.tracker;
  params.image_width = intr.width;
  params.image_height = intr.height;
  return run_tracker(frames, params);
}

Vec3 log_anchor(const std::vector<LocalizationSample> & log, const AnchorMode & mode)
{
  std::vector<Vec3> raw;
  raw.reserve(log.size());
  for (const auto & s : log) {
    raw.push_back(s.position);
  }
  return apply_anchor(raw, mode).anchor;
}

}  // namespace

RunReport run_calibration(
  const PipelineConfig & config, const std::vector<DetectionFrame> & frames,
  const std::vector<LocalizationSample> & log, const Intrinsics & intr, bool pretracked)
{
  RunReport report;
  report.config = config;
  report.config_hash = config_hash(config);
  report.intrinsics = intr;
  report.counts.frames = frames.size();
  for (const auto & f : frames) {
    report.counts.detections += f.boxes.size();
  }

  // Each stage converts library errors into a PipelineError naming it.
  auto guarded = [&](const char * stage, auto && body) {
    try {
      return body();
    } catch (const PipelineError &) {
      throw;
    } catch (const Error & e) {
      throw PipelineError(e.code(), stage, e.what(), report);
    }
  };

  guarded("input", [&] {
    config.validate();
    intr.validate();
    if (log.empty()) {
      throw Error(ErrorCode::kInput, "localization log is empty");
    }
    report.anchor = log_anchor(log, config.anchor);
    return 0;
  });

  report.tracks = guarded("tracking", [&] { return make_tracks(config, frames, intr, pretracked); });
  const auto & tracks = report.tracks;
  report.counts.tracks = tracks.size();

  std::vector<Hypothesis> accepted;
  guarded("hypothesis", [&] {
    for (const auto & track : tracks) {
      HypothesisOutcome outcome =
        build_hypothesis(track, log, intr, report.anchor, config.ransac, config.prefilter);
      HypothesisSummary summary;
      summary.track_id = track.id;
      summary.detections = track.detections.size();
      summary.pairs = outcome.hypothesis.pairs.size();
      summary.rejection = outcome.rejection;
      summary.median_reproj_px = outcome.hypothesis.median_reproj_px;
      if (outcome.hypothesis.calib) {
        summary.camera_center_utm = camera_center(*outcome.hypothesis.calib) + report.anchor;
      }
      report.hypotheses.push_back(summary);
      ++report.counts.hypotheses;
      if (outcome.accepted()) {
        ++report.counts.accepted;
        accepted.push_back(std::move(outcome.hypothesis));
      } else {
        ++report.counts.rejections[static_cast<std::size_t>(*outcome.rejection)];
      }
    }
    return 0;
  });

  const auto groups = guarded("grouping", [&] {
    const SimilarityGraph graph = similarity_graph(accepted, intr, config.grouping);
    report.counts.graph_edges = graph.edges.size();
    for (const auto & [a, b] : graph.edges) {
      report.edges.emplace_back(
        accepted[static_cast<std::size_t>(a)].track_id, accepted[static_cast<std::size_t>(b)].track_id);
    }
    for (std::size_t i = 0; i < graph.node_count; ++i) {
      report.counts.connected += graph.degree(static_cast<int>(i)) > 0 ? 1 : 0;
    }
    auto out = cluster_groups(graph, accepted, config.grouping);
    report.counts.groups = out.size();
    for (const auto & g : out) {
      std::vector<int> ids;
      for (const auto & m : g.members) {
        ids.push_back(m.track_id);
      }
      report.groups.push_back(ids);
    }
    return out;
  });

  if (groups.empty()) {
    const auto & r = report.counts.rejections;
    const auto no_consensus = r[static_cast<std::size_t>(RejectionReason::kNoConsensus)];
    if (report.counts.accepted == 0 && no_consensus > 0 && no_consensus == *std::max_element(r.begin(), r.end())) {
      throw PipelineError(
        ErrorCode::kNoConsensus, "hypothesis", "no track reached RANSAC consensus with the localization log",
        report);
    }
    throw PipelineError(
      ErrorCode::kInsufficientTraversals, "grouping",
      "no group of consistent hypotheses; at least two separate traversals of the calibration vehicle are "
      "needed",
      report);
  }

  guarded("refinement", [&] {
    report.plane = fit_ground_plane(log, report.anchor);
    CalibrationResult result = merge_and_select(groups, config.vehicle, report.plane, intr, config.refinement);
    report.bins = distance_bins(result.metrics.samples);
    report.result = std::move(result);
    return 0;
  });
  return report;
}

json to_json(const Metrics & m)
{
  return json{{"e_m_percent", m.e_mean},         {"e_w_percent", m.e_max},
              {"delta_p_mean_m", m.delta_p_mean}, {"delta_p_max_m", m.delta_p_max},
              {"evaluated_pairs", m.evaluated},   {"excluded_pairs", m.excluded}};
}

namespace
{

json calib_json(const ExtrinsicCalibration & c)
{
  const auto q = quaternion_from_rotation(c.rotation);
  const Vec3 center = camera_center(c) + c.anchor;
  json rot = json::array();
  for (int i = 0; i < 3; ++i) {
    rot.push_back({c.rotation(i, 0), c.rotation(i, 1), c.rotation(i, 2)});
  }
  return json{
    {"rotation", rot},
    {"quaternion_wxyz", {q[0], q[1], q[2], q[3]}},
    {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}},
    {"utm_anchor", {c.anchor.x(), c.anchor.y(), c.anchor.z()}},
    {"camera_center_utm", {center.x(), center.y(), center.z()}}};
}

}  // namespace

json to_json(const RunReport & report)
{
  json rejections = json::object();
  for (int i = 0; i < kRejectionReasonCount; ++i) {
    rejections[std::string(to_string(static_cast<RejectionReason>(i)))] =
      report.counts.rejections[static_cast<std::size_t>(i)];
  }
  json hyps = json::array();
  for (const auto & h : report.hypotheses) {
    json e{{"track_id", h.track_id},
           {"detections", h.detections},
           {"pairs", h.pairs},
           {"status", h.rejection ? std::string(to_string(*h.rejection)) : std::string("Accepted")},
           {"median_reproj_px", h.median_reproj_px}};
    if (h.camera_center_utm) {
      e["camera_center_utm"] = {h.camera_center_utm->x(), h.camera_center_utm->y(), h.camera_center_utm->z()};
    }
    hyps.push_back(e);
  }
  json out{
    {"tool_version", std::string(version())},
    {"config_hash", report.config_hash},
    {"config", to_json(report.config)},
    {"intrinsics", to_json(report.intrinsics)},
    {"utm_anchor", {report.anchor.x(), report.anchor.y(), report.anchor.z()}},
    {"counts",
     {{"frames", report.counts.frames},
      {"detections", report.counts.detections},
      {"tracks", report.counts.tracks},
      {"hypotheses", report.counts.hypotheses},
      {"accepted", report.counts.accepted},
      {"rejected", report.counts.rejected()},
      {"rejections", rejections},
      {"graph_edges", report.counts.graph_edges},
      {"connected_hypotheses", report.counts.connected},
      {"groups", report.counts.groups}}},
    {"hypotheses", hyps},
    {"edges", report.edges},
    {"groups", report.groups}};
  if (report.result) {
    const auto & r = *report.result;
    json candidates = json::array();
    for (const auto & c : r.candidates) {
      candidates.push_back(
        {{"group", c.group_index}, {"track_id", c.track_id}, {"delta_p_mean_m", c.delta_p_mean}});
    }
    out["ground_plane"] = {
      {"point_utm",
       {report.plane.point.x() + report.anchor.x(), report.plane.point.y() + report.anchor.y(),
        report.plane.point.z() + report.anchor.z()}},
      {"normal", {report.plane.normal.x(), report.plane.normal.y(), report.plane.normal.z()}}};
    out["result"] = {
      {"calibration", calib_json(r.calib)},
      {"metrics", to_json(r.metrics)},
      {"group", r.group_index},
      {"member_track_ids", r.member_track_ids},
      {"selected", r.selected_track_id < 0 ? json("merged") : json(r.selected_track_id)},
      {"pair_count", r.pair_count},
      {"non_improvement", r.non_improvement},
      {"candidates", candidates}};
    json bins = json::array();
    for (const auto & b : report.bins) {
      bins.push_back({{"distance_bin_center_m", b.center_m}, {"mean_delta_p_m", b.mean_delta_p_m}, {"count", b.count}});
    }
    out["distance_bins"] = bins;
  }
  return out;
}

CalibrationDocument calibration_document(const RunReport & report)
{
  if (!report.result) {
    throw Error(ErrorCode::kInput, "report holds no calibration");
  }
  CalibrationDocument doc;
  doc.calib = report.result->calib;
  doc.intrinsics = report.intrinsics;
  doc.metrics = to_json(report.result->metrics);
  doc.tool_version = std::string(version());
  doc.config_hash = report.config_hash;
  return doc;
}

void emit_calibration(const RunReport & report, const std::filesystem::path & path)
{
  write_calibration(path, calibration_document(report));
}

void emit_report(const RunReport & report, const std::filesystem::path & path)
{
  write_text(path, to_json(report).dump(2) + "\n");
}

void emit_plot_data(const RunReport & report, const std::filesystem::path & path)
{
  write_plot_data(path, report.bins);
}

EvaluationReport evaluate_calibration(
  const ExtrinsicCalibration & calib, const std::vector<DetectionFrame> & frames,
  const std::vector<LocalizationSample> & log, const Intrinsics & intr, const PipelineConfig & config,
  bool pretracked)
{
  config.validate();
  if (!calib.is_valid(1e-9)) {
    throw Error(ErrorCode::kInput, "calibration rotation is not orthonormal");
  }
  const auto tracks = make_tracks(config, frames, intr, pretracked);

  HypothesisGroup vehicle;
  EvaluationReport out;
  for (const auto & track : tracks) {
    Hypothesis h;
    h.track_id = track.id;
    h.anchor = calib.anchor;
    h.calib = calib;
    try {
      h.pairs = synchronize(track, log, config.prefilter.sync_tolerance);
    } catch (const Error & e) {
      if (e.code() == ErrorCode::kNoOverlap) {
        continue;
      }
      throw;
    }
    if (static_cast<int>(h.pairs.size()) < config.prefilter.min_pairs ||
        extent_3d(h.positions()) < config.prefilter.min_extent_3d_m) {
      continue;
    }
    if (outlier_ratio(h, h, intr) > config.grouping.max_r_out ||
        overlap_ratio(h, h, intr, config.grouping.k_px) < config.grouping.min_r_ov) {
      continue;
    }
    out.track_ids.push_back(h.track_id);
    vehicle.members.push_back(std::move(h));
  }
  if (vehicle.members.empty()) {
    throw Error(ErrorCode::kInsufficientData, "no track agrees with the localization log under this calibration");
  }
  const GroundPlane plane = fit_ground_plane(log, calib.anchor);
  const Hypothesis merged = merge_members(vehicle);
  const auto pairs = refine_correspondences(merged, calib, config.vehicle, plane, intr, config.refinement);
  out.metrics = evaluate(calib, pairs, plane, intr);
  out.bins = distance_bins(out.metrics.samples);
  return out;
}

}  // namespace roadcal
