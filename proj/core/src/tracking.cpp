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

#include "roadcal/tracking.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "roadcal/assignment.hpp"
#include "roadcal/errors.hpp"

namespace roadcal
{

double iou(const BoundingBox & a, const BoundingBox & b)
{
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) {
    return 0.0;
  }
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

double diou(const BoundingBox & a, const BoundingBox & b)
{
  const double ew = std::max(a.right(), b.right()) - std::min(a.left(), b.left());
  const double eh = std::max(a.bottom(), b.bottom()) - std::min(a.top(), b.top());
  const double diag2 = ew * ew + eh * eh;
  const double du = a.u - b.u;
  const double dv = a.v - b.v;
  return iou(a, b) - (du * du + dv * dv) / diag2;
}

double association_cost(const BoundingBox & a, const BoundingBox & b)
{
  if (iou(a, b) > 0.0) {
    return 1.0 - diou(a, b);
  }
  return kForbiddenCost;
}

namespace
{

struct ActiveTrack
{
  int id = 0;
  std::vector<Detection> detections;
  // Indices of the last two real detections (second may be absent).
  std::size_t last_real = 0;
  std::ptrdiff_t prev_real = -1;

  const Detection & last() const { return detections[last_real]; }

  BoundingBox predict(double t) const
  {
    const Detection & d1 = detections[last_real];
    if (prev_real < 0) {
      return d1.box;
    }
    const Detection & d0 = detections[static_cast<std::size_t>(prev_real)];
    const double dt = d1.timestamp - d0.timestamp;
    const double s = (t - d1.timestamp) / dt;
    BoundingBox b;
    b.u = d1.box.u + s * (d1.box.u - d0.box.u);
    b.v = d1.box.v + s * (d1.box.v - d0.box.v);
    b.w = std::max(1.0, d1.box.w + s * (d1.box.w - d0.box.w));
    b.h = std::max(1.0, d1.box.h + s * (d1.box.h - d0.box.h));
    return b;
  }

  void add_real(const Detection & d)
  {
    prev_real = static_cast<std::ptrdiff_t>(last_real);
    detections.push_back(d);
    last_real = detections.size() - 1;
  }
};

double infer_interval(const std::vector<DetectionFrame> & frames)
{
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < frames.size(); ++k) {
    best = std::min(best, frames[k].timestamp - frames[k - 1].timestamp);
  }
  return std::isfinite(best) ? best : 1.0;
}

long missed_slots(double t_now, double t_last, double interval)
{
  return std::lround((t_now - t_last) / interval) - 1;
}

ObjectTrack finalize(ActiveTrack && active)
{
  ObjectTrack track;
  track.id = active.id;
  for (auto & d : active.detections) {
    if (!d.extrapolated) {
      track.detections.push_back(d);
    }
  }
  return track;
}

}  // namespace

namespace
{

bool left_image(const BoundingBox & box, const TrackerParams & params)
{
  if (params.image_width <= 0 || params.image_height <= 0) {
    return false;
  }
  return box.u < 0.0 || box.v < 0.0 || box.u > params.image_width || box.v > params.image_height;
}

}  // namespace

std::vector<ObjectTrack> run_tracker(
  const std::vector<DetectionFrame> & frames, const TrackerParams & params)
{
  if (params.max_extrapolation_frames < 0) {
    throw Error(ErrorCode::kConfig, "max_extrapolation_frames must be >= 0");
  }
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (!std::isfinite(frames[k].timestamp) ||
        (k > 0 && !(frames[k].timestamp > frames[k - 1].timestamp))) {
      std::ostringstream msg;
      msg << "frame timestamps must be strictly increasing (frame " << k << ")";
      throw Error(ErrorCode::kInput, msg.str());
    }
  }

  const double interval =
    params.frame_interval_s > 0.0 ? params.frame_interval_s : infer_interval(frames);
  const long max_missed = params.max_extrapolation_frames;

  std::vector<ActiveTrack> active;
  std::vector<ObjectTrack> done;
  int next_id = 0;

  auto retire = [&](auto pred) {
    auto it = std::stable_partition(
      active.begin(), active.end(), [&](const ActiveTrack & a) { return !pred(a); });
    for (auto r = it; r != active.end(); ++r) {
      done.push_back(finalize(std::move(*r)));
    }
    active.erase(it, active.end());
  };

  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto & frame = frames[k];
    const double t = frame.timestamp;

    // Frames may be absent from the input altogether; count the slots.
    retire([&](const ActiveTrack & a) {
      return missed_slots(t, a.last().timestamp, interval) > max_missed;
    });

    const auto n = static_cast<Eigen::Index>(active.size());
    const auto m = static_cast<Eigen::Index>(frame.boxes.size());
    std::vector<BoundingBox> predicted;
    predicted.reserve(active.size());
    for (const auto & a : active) {
      predicted.push_back(a.predict(t));
    }
    Eigen::MatrixXd cost(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        cost(i, j) = association_cost(predicted[i], frame.boxes[j]);
      }
    }
    const Assignment pairs = assign(cost, kForbiddenCost);

    std::vector<char> row_matched(active.size(), 0);
    std::vector<char> col_matched(frame.boxes.size(), 0);
    for (const auto & [r, c] : pairs) {
      row_matched[r] = 1;
      col_matched[c] = 1;
      active[r].add_real(Detection{t, frame.boxes[c], false, k, static_cast<std::size_t>(c)});
    }
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (!row_matched[i]) {
        active[i].detections.push_back(Detection{t, predicted[i], true, k, 0});
      }
    }
    retire([&](const ActiveTrack & a) {
      return missed_slots(t, a.last().timestamp, interval) + 1 > max_missed ||
             (a.detections.back().extrapolated && left_image(a.detections.back().box, params));
    });

    for (std::size_t j = 0; j < frame.boxes.size(); ++j) {
      if (col_matched[j]) {
        continue;
      }
      if (!frame.boxes[j].valid()) {
        throw Error(ErrorCode::kInput, "bounding box with non-positive size");
      }
      ActiveTrack fresh;
      fresh.id = next_id++;
      fresh.detections.push_back(Detection{t, frame.boxes[j], false, k, j});
      fresh.last_real = 0;
      active.push_back(std::move(fresh));
    }
  }
  for (auto & a : active) {
    done.push_back(finalize(std::move(a)));
  }

  std::erase_if(done, [&](const ObjectTrack & tr) {
    return static_cast<int>(tr.detections.size()) < params.min_track_detections;
  });
  std::sort(done.begin(), done.end(), [](const auto & a, const auto & b) { return a.id < b.id; });
  return done;
}

std::vector<ObjectTrack> tracks_from_ids(
  const std::vector<DetectionFrame> & frames, int min_track_detections)
{
  std::map<int, ObjectTrack> by_id;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto & frame = frames[k];
    if (frame.ids.size() != frame.boxes.size()) {
      throw Error(ErrorCode::kInput, "pre-tracked input requires an id for every box");
    }
    for (std::size_t j = 0; j < frame.boxes.size(); ++j) {
      auto & track = by_id[frame.ids[j]];
      track.id = frame.ids[j];
      if (!track.detections.empty() && !(frame.timestamp > track.detections.back().timestamp)) {
        throw Error(ErrorCode::kInput, "duplicate track id within one frame");
      }
      track.detections.push_back(Detection{frame.timestamp, frame.boxes[j], false, k, j});
    }
  }
  std::vector<ObjectTrack> out;
  for (auto & [id, track] : by_id) {
    if (static_cast<int>(track.detections.size()) >= min_track_detections) {
      out.push_back(std::move(track));
    }
  }
  return out;
}

}  // namespace roadcal
