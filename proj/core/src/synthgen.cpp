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

#include "roadcal/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "roadcal/errors.hpp"

namespace roadcal
{

void NoiseConfig::validate() const
{
  if (sigma_pos < 0.0 || sigma_box < 0.0 || detection_dropout < 0.0 || detection_dropout > 1.0) {
    throw Error(ErrorCode::kConfig, "noise parameters must be non-negative");
  }
}

void ScenarioConfig::validate() const
{
  intrinsics.validate();
  noise.validate();
  if (traversal_count < 1 || !(frame_rate > 0.0) || !(localization_rate > 0.0) || duration < 0.0) {
    throw Error(ErrorCode::kConfig, "invalid scenario rates or traversal count");
  }
  if (min_visible_fraction < 0.0 || min_visible_fraction > 1.0) {
    throw Error(ErrorCode::kConfig, "min_visible_fraction must lie in [0, 1]");
  }
  if (target.waypoints.size() < 2 || !(target.speed > 0.0)) {
    throw Error(ErrorCode::kConfig, "target trajectory needs two waypoints and a positive speed");
  }
  for (const auto & d : distractors) {
    if (d.waypoints.size() < 2 || !(d.speed > 0.0)) {
      throw Error(ErrorCode::kConfig, "distractor trajectory needs two waypoints and a positive speed");
    }
    d.dims.validate();
  }
  target.dims.validate();
  if ((camera_look_at - camera_position).norm() < 1e-9) {
    throw Error(ErrorCode::kConfig, "camera look_at coincides with its position");
  }
}

ExtrinsicCalibration ScenarioConfig::camera() const
{
  const Vec3 forward = (camera_look_at - camera_position).normalized();
  Vec3 right = forward.cross(Vec3::UnitZ());
  if (right.norm() < 1e-9) {
    right = Vec3::UnitX();
  }
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return ExtrinsicCalibration::from_center(nearest_rotation(r), camera_position, utm_origin);
}

namespace
{

double route_length(const TrajectorySpec & spec)
{
  double total = 0.0;
  for (std::size_t i = 1; i < spec.waypoints.size(); ++i) {
    total += (spec.waypoints[i] - spec.waypoints[i - 1]).norm();
  }
  if (spec.closed) {
    total += (spec.waypoints.front() - spec.waypoints.back()).norm();
  }
  return total;
}

Vec2 route_point(const TrajectorySpec & spec, double s)
{
  const auto & w = spec.waypoints;
  const std::size_t segments = spec.closed ? w.size() : w.size() - 1;
  for (std::size_t i = 0; i < segments; ++i) {
    const Vec2 a = w[i];
    const Vec2 b = w[(i + 1) % w.size()];
    const double len = (b - a).norm();
    if (s <= len || i + 1 == segments) {
      return len > 0.0 ? Vec2(a + std::clamp(s / len, 0.0, 1.0) * (b - a)) : a;
    }
    s -= len;
  }
  return w.back();
}

std::uint64_t splitmix(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
{
  return splitmix(splitmix(seed ^ splitmix(stream)) + index);
}

}  // namespace

double ScenarioConfig::recording_duration() const
{
  if (duration > 0.0) {
    return duration;
  }
  if (target.closed) {
    return target.start_time + traversal_count * route_length(target) / target.speed;
  }
  return target.start_time + route_length(target) / target.speed;
}

std::optional<LocalizationSample> trajectory_pose(
  const TrajectorySpec & spec, const Vec2 & ground_slope, double t)
{
  if (t < spec.start_time) {
    return std::nullopt;
  }
  const double total = route_length(spec);
  double s = spec.start_offset + spec.speed * (t - spec.start_time);
  if (spec.closed) {
    s = std::fmod(s, total);
  } else if (s > total) {
    return std::nullopt;
  }
  const Vec2 p = route_point(spec, s);
  auto wrap = [&](double x) { return spec.closed ? std::fmod(x + total, total) : std::clamp(x, 0.0, total); };
  Vec2 dir = route_point(spec, wrap(s + 0.5)) - route_point(spec, wrap(s - 0.5));
  if (dir.norm() < 1e-12) {
    dir = Vec2::UnitX();
  }
  dir.normalize();

  const Vec3 normal = Vec3(-ground_slope.x(), -ground_slope.y(), 1.0).normalized();
  Vec3 forward(dir.x(), dir.y(), ground_slope.dot(dir));
  Vec3 left = normal.cross(forward).normalized();
  forward = left.cross(normal).normalized();
  Mat3 r;
  r.col(0) = forward;
  r.col(1) = left;
  r.col(2) = normal;

  LocalizationSample out;
  out.timestamp = t;
  out.position = Vec3(p.x(), p.y(), ground_slope.dot(p));
  out.yaw = std::atan2(r(1, 0), r(0, 0));
  out.pitch = -std::asin(std::clamp(r(2, 0), -1.0, 1.0));
  out.roll = std::atan2(r(2, 1), r(2, 2));
  return out;
}

std::optional<BoundingBox> vehicle_box(
  const LocalizationSample & local_pose, const VehicleDims & dims, const Intrinsics & intr,
  const ExtrinsicCalibration & camera, double min_visible_fraction)
{
  const Mat3 r = local_pose.orientation();
  const double l = 0.5 * dims.length;
  const double w = 0.5 * dims.width;
  int in_front = 0;
  double u0 = std::numeric_limits<double>::infinity();
  double v0 = u0;
  double u1 = -u0;
  double v1 = -u0;
  for (double x : {l, -l}) {
    for (double y : {w, -w}) {
      for (double z : {0.0, dims.height}) {
        const auto px = try_project(intr, camera, local_pose.position + r * Vec3(x, y, z));
        if (!px) {
          continue;
        }
        ++in_front;
        u0 = std::min(u0, px->x());
        u1 = std::max(u1, px->x());
        v0 = std::min(v0, px->y());
        v1 = std::max(v1, px->y());
      }
    }
  }
  if (in_front < 4) {
    return std::nullopt;
  }
  const double full_area = (u1 - u0) * (v1 - v0);
  u0 = std::max(u0, 0.0);
  v0 = std::max(v0, 0.0);
  u1 = std::min(u1, static_cast<double>(intr.width));
  v1 = std::min(v1, static_cast<double>(intr.height));
  if (u1 - u0 < 1.0 || v1 - v0 < 1.0 || (u1 - u0) * (v1 - v0) < min_visible_fraction * full_area) {
    return std::nullopt;
  }
  return BoundingBox{0.5 * (u0 + u1), 0.5 * (v0 + v1), u1 - u0, v1 - v0};
}

Scenario generate(const ScenarioConfig & config)
{
  config.validate();
  const ExtrinsicCalibration camera = config.camera();
  const double duration = config.recording_duration();

  std::vector<const TrajectorySpec *> vehicles{&config.target};
  for (const auto & d : config.distractors) {
    vehicles.push_back(&d);
  }

  Scenario out;
  const auto frame_count = static_cast<std::size_t>(std::floor(duration * config.frame_rate + 1e-9)) + 1;
  std::size_t target_boxes = 0;
  for (std::size_t k = 0; k < frame_count; ++k) {
    const double t = static_cast<double>(k) / config.frame_rate;
    std::mt19937_64 rng(stream_seed(config.rng_seed, 1, k));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 1.0);
    DetectionFrame frame;
    frame.timestamp = t;
    for (std::size_t v = 0; v < vehicles.size(); ++v) {
      const auto pose = trajectory_pose(*vehicles[v], config.ground_slope, t);
      if (!pose) {
        continue;
      }
      auto box = vehicle_box(*pose, vehicles[v]->dims, config.intrinsics, camera, config.min_visible_fraction);
      if (!box || std::max(box->w, box->h) < config.min_box_px) {
        continue;
      }
      if (config.noise.detection_dropout > 0.0 && uniform(rng) < config.noise.detection_dropout) {
        continue;
      }
      if (config.noise.sigma_box > 0.0) {
        box->u += config.noise.sigma_box * jitter(rng);
        box->v += config.noise.sigma_box * jitter(rng);
        box->w = std::max(1.0, box->w + config.noise.sigma_box * jitter(rng));
        box->h = std::max(1.0, box->h + config.noise.sigma_box * jitter(rng));
      }
      frame.boxes.push_back(*box);
      frame.ids.push_back(static_cast<int>(v));
      if (v == 0) {
        ++target_boxes;
        if (out.truth.traversals.empty() ||
            t - out.truth.traversals.back().second > 2.5 / config.frame_rate) {
          out.truth.traversals.emplace_back(t, t);
        } else {
          out.truth.traversals.back().second = t;
        }
      }
    }
    if (!frame.boxes.empty()) {
      out.frames.push_back(std::move(frame));
    }
  }
  if (target_boxes == 0) {
    throw Error(ErrorCode::kGeneration, "the target vehicle never enters the camera view");
  }

  std::mt19937_64 rng(stream_seed(config.rng_seed, 2, 0));
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto sample_count =
    static_cast<std::size_t>(std::floor(duration * config.localization_rate + 1e-9)) + 1;
  for (std::size_t j = 0; j < sample_count; ++j) {
    const double t = static_cast<double>(j) / config.localization_rate;
    auto pose = trajectory_pose(config.target, config.ground_slope, t);
    if (!pose) {
      continue;
    }
    if (config.noise.sigma_pos > 0.0) {
      pose->position.x() += config.noise.sigma_pos * noise(rng);
      pose->position.y() += config.noise.sigma_pos * noise(rng);
    }
    pose->position += config.utm_origin;
    out.log.push_back(*pose);
  }

  out.truth.calib = camera;
  out.truth.utm_origin = config.utm_origin;
  out.truth.plane.point = Vec3::Zero();
  out.truth.plane.normal = Vec3(-config.ground_slope.x(), -config.ground_slope.y(), 1.0).normalized();
  out.truth.target_id = 0;
  return out;
}

std::vector<DetectionFrame> occlude(
  std::vector<DetectionFrame> frames, std::span<const ObstacleRegion> regions)
{
  if (regions.empty()) {
    return frames;
  }
  for (auto & frame : frames) {
    DetectionFrame kept;
    kept.timestamp = frame.timestamp;
    for (std::size_t j = 0; j < frame.boxes.size(); ++j) {
      BoundingBox box = frame.boxes[j];
      bool keep = true;
      for (const auto & region : regions) {
        const bool inside = box.u >= region.u_min && box.u <= region.u_max &&
                            box.v >= region.v_min && box.v <= region.v_max;
        if (!inside) {
          continue;
        }
        if (region.policy == OcclusionPolicy::kDrop) {
          keep = false;
          break;
        }
        // Keep the wider visible side of the box.
        const double left_w = std::max(0.0, region.u_min - box.left());
        const double right_w = std::max(0.0, box.right() - region.u_max);
        if (std::max(left_w, right_w) < 1.0) {
          keep = false;
          break;
        }
        if (left_w >= right_w) {
          box = BoundingBox{box.left() + 0.5 * left_w, box.v, left_w, box.h};
        } else {
          box = BoundingBox{region.u_max + 0.5 * right_w, box.v, right_w, box.h};
        }
      }
      if (keep) {
        kept.boxes.push_back(box);
        if (!frame.ids.empty()) {
          kept.ids.push_back(frame.ids[j]);
        }
      }
    }
    frame = std::move(kept);
  }
  std::erase_if(frames, [](const DetectionFrame & f) { return f.boxes.empty(); });
  return frames;
}

namespace
{

std::vector<Vec2> right_turn_route(double y_start, double x_end)
{
  // Northbound on x = +1.75, right turn (radius 8) into eastbound y = -1.75.
  std::vector<Vec2> w{{1.75, y_start}, {1.75, -9.75}};
  const Vec2 center(9.75, -9.75);
  for (int deg = 175; deg >= 90; deg -= 5) {
    const double a = deg * std::numbers::pi / 180.0;
    w.emplace_back(center + 8.0 * Vec2(std::cos(a), std::sin(a)));
  }
  w.emplace_back(x_end, -1.75);
  return w;
}

}  // namespace

ScenarioConfig intersection_scenario(int traversals, int distractor_count, double sigma_pos, std::uint64_t seed)
{
  ScenarioConfig c;
  c.intrinsics = Intrinsics{1400.0, 1400.0, 960.0, 600.0, 1920, 1200};
  c.camera_position = Vec3(-14.0, -16.0, 7.5);
  c.camera_look_at = Vec3(8.0, 6.0, 0.0);
  c.utm_origin = Vec3(572310.0, 5362840.0, 478.0);
  c.traversal_count = traversals;
  c.noise.sigma_pos = sigma_pos;
  c.rng_seed = seed;

  // Closed loop: through the intersection with a right turn, then back
  // around the block well outside the camera view.
  c.target.waypoints = right_turn_route(-160.0, 120.0);
  c.target.waypoints.emplace_back(120.0, -160.0);
  c.target.closed = true;
  c.target.speed = 8.33;
  c.target.start_offset = 60.0;
  c.target.dims = VehicleDims{4.6, 1.9, 1.5};

  const VehicleDims sedan{4.5, 1.8, 1.45};
  const VehicleDims van{5.2, 2.0, 2.1};
  const VehicleDims truck{8.0, 2.5, 3.2};
  auto straight = [](Vec2 a, Vec2 b, double speed, double start, VehicleDims dims) {
    TrajectorySpec s;
    s.waypoints = {a, b};
    s.speed = speed;
    s.start_time = start;
    s.dims = dims;
    return s;
  };
  std::vector<TrajectorySpec> pool;
  pool.push_back(straight({150.0, 1.75}, {-150.0, 1.75}, 9.0, 3.0, van));
  pool.push_back(straight({-1.75, 150.0}, {-1.75, -150.0}, 8.0, 24.0, sedan));
  pool.push_back(straight({-150.0, -1.75}, {150.0, -1.75}, 10.0, 36.0, sedan));
  {
    TrajectorySpec lookalike;
    lookalike.waypoints = right_turn_route(-150.0, 150.0);
    lookalike.speed = 8.33;
    lookalike.start_time = 46.0;
    lookalike.dims = c.target.dims;
    pool.push_back(lookalike);
  }
  pool.push_back(straight({150.0, 1.75}, {-150.0, 1.75}, 8.0, 70.0, truck));

  for (int i = 0; i < distractor_count; ++i) {
    TrajectorySpec d = pool[static_cast<std::size_t>(i) % pool.size()];
    d.start_time += 60.0 * static_cast<double>(i / static_cast<int>(pool.size()));
    c.distractors.push_back(d);
  }
  return c;
}

void jitter_distractors(ScenarioConfig & config, std::uint64_t seed)
{
  std::mt19937_64 rng(stream_seed(seed, 3, 0));
  std::uniform_real_distribution<double> start(-8.0, 8.0);
  std::uniform_real_distribution<double> speed(0.85, 1.15);
  for (auto & d : config.distractors) {
    d.start_time = std::max(0.0, d.start_time + start(rng));
    d.speed *= speed(rng);
  }
}

}  // namespace roadcal
