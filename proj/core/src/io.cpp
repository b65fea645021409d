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

#include "roadcal/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "roadcal/errors.hpp"

namespace roadcal
{

using nlohmann::json;

std::string format_double(double value)
{
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

namespace
{

std::string fixed17(double value)
{
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", value);
  return buf.data();
}

std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string & line)
{
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    out.push_back(trim(field));
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

[[noreturn]] void parse_fail(const std::string & what, std::size_t line_no, const std::string & detail)
{
  std::ostringstream msg;
  msg << what << " line " << line_no << ": " << detail;
  throw Error(ErrorCode::kParse, msg.str());
}

double to_double(const std::string & field, const std::string & what, std::size_t line_no)
{
  double value = 0.0;
  const char * first = field.data();
  const char * last = field.data() + field.size();
  if (!field.empty() && *first == '+') {
    ++first;
  }
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(value)) {
    parse_fail(what, line_no, "not a finite number: '" + field + "'");
  }
  return value;
}

int to_int(const std::string & field, const std::string & what, std::size_t line_no)
{
  int value = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    parse_fail(what, line_no, "not an integer id: '" + field + "'");
  }
  return value;
}

bool skip_line(const std::string & line)
{
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

std::ofstream open_out(const std::filesystem::path & path)
{
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  }
  return in;
}

json vec_json(const Eigen::Ref<const Eigen::VectorXd> & v)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

template <int N>
Eigen::Matrix<double, N, 1> json_vec(const json & j, const char * name)
{
  if (!j.is_array() || j.size() != N) {
    throw Error(ErrorCode::kConfig, std::string("'") + name + "' must be an array of " + std::to_string(N));
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
  }
  return v;
}

void check_keys(const json & j, const std::set<std::string> & allowed, const std::string & where)
{
  if (!j.is_object()) {
    throw Error(ErrorCode::kConfig, where + " must be an object");
  }
  for (const auto & [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw Error(ErrorCode::kConfig, "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_opt(const json & j, const char * key, T & target)
{
  if (j.contains(key)) {
    target = j.at(key).get<T>();
  }
}

}  // namespace

std::vector<DetectionFrame> parse_detections(std::istream & in)
{
  static const std::string what = "detections";
  std::vector<DetectionFrame> frames;
  std::string line;
  std::size_t line_no = 0;
  int id_mode = -1;  // unknown, 0 without ids, 1 with ids
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) {
      continue;
    }
    const auto f = split_fields(line);
    if (f.size() != 5 && f.size() != 6) {
      parse_fail(what, line_no, "expected 5 or 6 comma-separated fields");
    }
    const int has_id = f.size() == 6 ? 1 : 0;
    if (id_mode >= 0 && id_mode != has_id) {
      parse_fail(what, line_no, "detector ids must be given on every line or on none");
    }
    id_mode = has_id;
    const double t = to_double(f[0], what, line_no);
    BoundingBox box{
      to_double(f[1], what, line_no), to_double(f[2], what, line_no), to_double(f[3], what, line_no),
      to_double(f[4], what, line_no)};
    if (!box.valid()) {
      parse_fail(what, line_no, "box width and height must be positive");
    }
    if (frames.empty() || t != frames.back().timestamp) {
      if (!frames.empty() && t < frames.back().timestamp) {
        std::ostringstream msg;
        msg << "detections line " << line_no << ": frame time " << format_double(t)
            << " precedes " << format_double(frames.back().timestamp);
        throw Error(ErrorCode::kInput, msg.str());
      }
      frames.push_back(DetectionFrame{t, {}, {}});
    }
    frames.back().boxes.push_back(box);
    if (has_id) {
      frames.back().ids.push_back(to_int(f[5], what, line_no));
    }
  }
  return frames;
}

std::vector<DetectionFrame> read_detections(const std::filesystem::path & path)
{
  auto in = open_in(path);
  return parse_detections(in);
}

void write_detections(std::ostream & out, const std::vector<DetectionFrame> & frames, bool with_ids)
{
  out << (with_ids ? "# timestamp_s,u,v,w,h,detector_id\n" : "# timestamp_s,u,v,w,h\n");
  for (const auto & f : frames) {
    for (std::size_t j = 0; j < f.boxes.size(); ++j) {
      const auto & b = f.boxes[j];
      out << format_double(f.timestamp) << ',' << format_double(b.u) << ',' << format_double(b.v) << ','
          << format_double(b.w) << ',' << format_double(b.h);
      if (with_ids) {
        if (f.ids.size() != f.boxes.size()) {
          throw Error(ErrorCode::kInput, "frame is missing detector ids");
        }
        out << ',' << f.ids[j];
      }
      out << '\n';
    }
  }
}

void write_detections(
  const std::filesystem::path & path, const std::vector<DetectionFrame> & frames, bool with_ids)
{
  auto out = open_out(path);
  write_detections(out, frames, with_ids);
}

std::vector<LocalizationSample> parse_localization(std::istream & in, const Vec3 & lever_arm)
{
  static const std::string what = "localization";
  constexpr double kMaxAngle = 2.0 * std::numbers::pi;
  std::vector<LocalizationSample> log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) {
      continue;
    }
    const auto f = split_fields(line);
    if (f.size() != 7) {
      parse_fail(what, line_no, "expected 7 comma-separated fields");
    }
    LocalizationSample s;
    s.timestamp = to_double(f[0], what, line_no);
    s.position = Vec3(to_double(f[1], what, line_no), to_double(f[2], what, line_no), to_double(f[3], what, line_no));
    s.roll = to_double(f[4], what, line_no);
    s.pitch = to_double(f[5], what, line_no);
    s.yaw = to_double(f[6], what, line_no);
    if (std::abs(s.roll) > kMaxAngle || std::abs(s.pitch) > kMaxAngle || std::abs(s.yaw) > kMaxAngle) {
      std::ostringstream msg;
      msg << "localization line " << line_no << ": angle magnitude above 2*pi; angles must be radians";
      throw Error(ErrorCode::kUnits, msg.str());
    }
    if (!log.empty() && !(s.timestamp > log.back().timestamp)) {
      std::ostringstream msg;
      msg << "localization line " << line_no << ": timestamps must be strictly increasing";
      throw Error(ErrorCode::kInput, msg.str());
    }
    if (!lever_arm.isZero(0.0)) {
      s.position -= s.orientation() * lever_arm;
    }
    log.push_back(s);
  }
  return log;
}

std::vector<LocalizationSample> read_localization(const std::filesystem::path & path, const Vec3 & lever_arm)
{
  auto in = open_in(path);
  return parse_localization(in, lever_arm);
}

void write_localization(std::ostream & out, const std::vector<LocalizationSample> & log)
{
  out << "# timestamp_s,x_utm,y_utm,z_utm,roll,pitch,yaw\n";
  for (const auto & s : log) {
    out << format_double(s.timestamp) << ',' << format_double(s.position.x()) << ','
        << format_double(s.position.y()) << ',' << format_double(s.position.z()) << ','
        << format_double(s.roll) << ',' << format_double(s.pitch) << ',' << format_double(s.yaw) << '\n';
  }
}

void write_localization(const std::filesystem::path & path, const std::vector<LocalizationSample> & log)
{
  auto out = open_out(path);
  write_localization(out, log);
}

json to_json(const Intrinsics & intr)
{
  return json{{"fx", intr.fx}, {"fy", intr.fy}, {"cx", intr.cx}, {"cy", intr.cy},
              {"width", intr.width}, {"height", intr.height}};
}

Intrinsics intrinsics_from_json(const json & j)
{
  check_keys(j, {"fx", "fy", "cx", "cy", "width", "height"}, "intrinsics");
  try {
    Intrinsics intr{j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                    j.at("cy").get<double>(), j.at("width").get<int>(), j.at("height").get<int>()};
    intr.validate();
    return intr;
  } catch (const json::exception & e) {
    throw Error(ErrorCode::kParse, std::string("intrinsics: ") + e.what());
  }
}

Intrinsics read_intrinsics(const std::filesystem::path & path)
{
  try {
    return intrinsics_from_json(json::parse(read_text(path)));
  } catch (const json::parse_error & e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_intrinsics(const std::filesystem::path & path, const Intrinsics & intr)
{
  write_text(path, to_json(intr).dump(2) + "\n");
}

std::array<double, 4> quaternion_from_rotation(const Mat3 & r)
{
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) {
    q.coeffs() *= -1.0;
  }
  return {q.w(), q.x(), q.y(), q.z()};
}

Mat3 rotation_from_quaternion(std::array<double, 4> q)
{
  Eigen::Quaterniond e(q[0], q[1], q[2], q[3]);
  if (!(e.norm() > 0.0)) {
    throw Error(ErrorCode::kParse, "quaternion has zero norm");
  }
  e.normalize();
  return e.toRotationMatrix();
}

std::string format_calibration(const CalibrationDocument & doc)
{
  const auto & c = doc.calib;
  const Mat3 & r = c.rotation;
  const auto q = quaternion_from_rotation(r);
  const Vec3 center = camera_center(c) + c.anchor;
  auto vec = [](std::initializer_list<double> xs) {
    std::string s = "[";
    bool first = true;
    for (double x : xs) {
      s += (first ? "" : ", ") + fixed17(x);
      first = false;
    }
    return s + "]";
  };
  std::ostringstream out;
  out << "{\n"
      << "  \"format\": \"roadcal-calibration\",\n"
      << "  \"tool_version\": " << json(doc.tool_version).dump() << ",\n"
      << "  \"config_hash\": " << json(doc.config_hash).dump() << ",\n"
      << "  \"rotation\": [\n"
      << "    " << vec({r(0, 0), r(0, 1), r(0, 2)}) << ",\n"
      << "    " << vec({r(1, 0), r(1, 1), r(1, 2)}) << ",\n"
      << "    " << vec({r(2, 0), r(2, 1), r(2, 2)}) << "\n"
      << "  ],\n"
      << "  \"quaternion_wxyz\": " << vec({q[0], q[1], q[2], q[3]}) << ",\n"
      << "  \"translation\": " << vec({c.translation.x(), c.translation.y(), c.translation.z()}) << ",\n"
      << "  \"utm_anchor\": " << vec({c.anchor.x(), c.anchor.y(), c.anchor.z()}) << ",\n"
      << "  \"camera_center_utm\": " << vec({center.x(), center.y(), center.z()}) << ",\n"
      << "  \"intrinsics\": " << to_json(doc.intrinsics).dump() << ",\n"
      << "  \"metrics\": " << doc.metrics.dump() << "\n"
      << "}\n";
  return out.str();
}

CalibrationDocument parse_calibration(const std::string & text)
{
  CalibrationDocument doc;
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string()) != "roadcal-calibration") {
      throw Error(ErrorCode::kParse, "not a roadcal calibration document");
    }
    const auto & rows = j.at("rotation");
    if (!rows.is_array() || rows.size() != 3) {
      throw Error(ErrorCode::kParse, "rotation must have 3 rows");
    }
    for (int i = 0; i < 3; ++i) {
      doc.calib.rotation.row(i) = json_vec<3>(rows.at(static_cast<std::size_t>(i)), "rotation").transpose();
    }
    doc.calib.translation = json_vec<3>(j.at("translation"), "translation");
    doc.calib.anchor = json_vec<3>(j.at("utm_anchor"), "utm_anchor");
    doc.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    doc.metrics = j.value("metrics", json::object());
    doc.tool_version = j.value("tool_version", std::string());
    doc.config_hash = j.value("config_hash", std::string());
    if (!doc.calib.is_valid(1e-9)) {
      throw Error(ErrorCode::kParse, "rotation is not orthonormal");
    }
  } catch (const json::exception & e) {
    throw Error(ErrorCode::kParse, std::string("calibration: ") + e.what());
  }
  return doc;
}

void write_calibration(const std::filesystem::path & path, const CalibrationDocument & doc)
{
  write_text(path, format_calibration(doc));
}

CalibrationDocument read_calibration(const std::filesystem::path & path)
{
  return parse_calibration(read_text(path));
}

std::vector<DistanceBin> distance_bins(const std::vector<PairEvaluation> & samples, double width_m)
{
  if (!(width_m > 0.0)) {
    throw Error(ErrorCode::kConfig, "bin width must be positive");
  }
  std::map<long long, std::pair<double, std::size_t>> acc;
  for (const auto & s : samples) {
    auto & slot = acc[static_cast<long long>(std::floor(s.distance / width_m))];
    slot.first += s.delta_p;
    ++slot.second;
  }
  std::vector<DistanceBin> bins;
  for (const auto & [index, slot] : acc) {
    bins.push_back(DistanceBin{
      (static_cast<double>(index) + 0.5) * width_m, slot.first / static_cast<double>(slot.second), slot.second});
  }
  return bins;
}

void write_plot_data(const std::filesystem::path & path, const std::vector<DistanceBin> & bins)
{
  auto out = open_out(path);
  out << "distance_bin_center_m,mean_delta_p_m,count\n";
  for (const auto & b : bins) {
    out << format_double(b.center_m) << ',' << format_double(b.mean_delta_p_m) << ',' << b.count << '\n';
  }
}

namespace
{

json to_json(const VehicleDims & d)
{
  return json{{"length", d.length}, {"width", d.width}, {"height", d.height}};
}

VehicleDims dims_from_json(const json & j)
{
  check_keys(j, {"length", "width", "height"}, "dims");
  VehicleDims d;
  read_opt(j, "length", d.length);
  read_opt(j, "width", d.width);
  read_opt(j, "height", d.height);
  return d;
}

json to_json(const TrajectorySpec & t)
{
  json w = json::array();
  for (const auto & p : t.waypoints) {
    w.push_back(json::array({p.x(), p.y()}));
  }
  return json{{"waypoints", w},         {"speed", t.speed},   {"start_time", t.start_time},
              {"start_offset", t.start_offset}, {"closed", t.closed}, {"dims", to_json(t.dims)}};
}

TrajectorySpec trajectory_from_json(const json & j)
{
  check_keys(j, {"waypoints", "speed", "start_time", "start_offset", "closed", "dims"}, "trajectory");
  TrajectorySpec t;
  for (const auto & p : j.at("waypoints")) {
    t.waypoints.push_back(json_vec<2>(p, "waypoints"));
  }
  read_opt(j, "speed", t.speed);
  read_opt(j, "start_time", t.start_time);
  read_opt(j, "start_offset", t.start_offset);
  read_opt(j, "closed", t.closed);
  if (j.contains("dims")) {
    t.dims = dims_from_json(j.at("dims"));
  }
  return t;
}

}  // namespace

json to_json(const ScenarioConfig & c)
{
  json distractors = json::array();
  for (const auto & d : c.distractors) {
    distractors.push_back(to_json(d));
  }
  return json{
    {"intrinsics", to_json(c.intrinsics)},
    {"camera_position", vec_json(c.camera_position)},
    {"camera_look_at", vec_json(c.camera_look_at)},
    {"utm_origin", vec_json(c.utm_origin)},
    {"ground_slope", vec_json(c.ground_slope)},
    {"target", to_json(c.target)},
    {"traversal_count", c.traversal_count},
    {"distractors", distractors},
    {"frame_rate", c.frame_rate},
    {"localization_rate", c.localization_rate},
    {"duration", c.duration},
    {"min_box_px", c.min_box_px},
    {"min_visible_fraction", c.min_visible_fraction},
    {"noise",
     {{"sigma_pos", c.noise.sigma_pos},
      {"sigma_box", c.noise.sigma_box},
      {"detection_dropout", c.noise.detection_dropout}}},
    {"rng_seed", c.rng_seed}};
}

ScenarioConfig scenario_from_json(const json & j)
{
  ScenarioConfig c;
  try {
    check_keys(
      j,
      {"intrinsics", "camera_position", "camera_look_at", "utm_origin", "ground_slope", "target",
       "traversal_count", "distractors", "frame_rate", "localization_rate", "duration", "min_box_px",
       "min_visible_fraction", "noise", "rng_seed"},
      "scenario");
    c.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    c.camera_position = json_vec<3>(j.at("camera_position"), "camera_position");
    c.camera_look_at = json_vec<3>(j.at("camera_look_at"), "camera_look_at");
    if (j.contains("utm_origin")) {
      c.utm_origin = json_vec<3>(j.at("utm_origin"), "utm_origin");
    }
    if (j.contains("ground_slope")) {
      c.ground_slope = json_vec<2>(j.at("ground_slope"), "ground_slope");
    }
    c.target = trajectory_from_json(j.at("target"));
    read_opt(j, "traversal_count", c.traversal_count);
    if (j.contains("distractors")) {
      for (const auto & d : j.at("distractors")) {
        c.distractors.push_back(trajectory_from_json(d));
      }
    }
    read_opt(j, "frame_rate", c.frame_rate);
    read_opt(j, "localization_rate", c.localization_rate);
    read_opt(j, "duration", c.duration);
    read_opt(j, "min_box_px", c.min_box_px);
    read_opt(j, "min_visible_fraction", c.min_visible_fraction);
    if (j.contains("noise")) {
      const auto & n = j.at("noise");
      check_keys(n, {"sigma_pos", "sigma_box", "detection_dropout"}, "noise");
      read_opt(n, "sigma_pos", c.noise.sigma_pos);
      read_opt(n, "sigma_box", c.noise.sigma_box);
      read_opt(n, "detection_dropout", c.noise.detection_dropout);
    }
    read_opt(j, "rng_seed", c.rng_seed);
  } catch (const json::exception & e) {
    throw Error(ErrorCode::kConfig, std::string("scenario: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const ScenarioTruth & truth)
{
  const auto & c = truth.calib;
  json rotation = json::array();
  for (int i = 0; i < 3; ++i) {
    rotation.push_back(vec_json(c.rotation.row(i).transpose()));
  }
  json traversals = json::array();
  for (const auto & [a, b] : truth.traversals) {
    traversals.push_back(json::array({a, b}));
  }
  return json{
    {"rotation", rotation},
    {"translation", vec_json(c.translation)},
    {"utm_anchor", vec_json(c.anchor)},
    {"camera_center_utm", vec_json(camera_center(c) + c.anchor)},
    {"ground_plane", {{"point_utm", vec_json(truth.plane.point + truth.utm_origin)}, {"normal", vec_json(truth.plane.normal)}}},
    {"target_id", truth.target_id},
    {"traversals", traversals}};
}

std::string read_text(const std::filesystem::path & path)
{
  auto in = open_in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path & path, const std::string & text)
{
  auto out = open_out(path);
  out << text;
  if (!out) {
    throw Error(ErrorCode::kIo, "failed writing '" + path.string() + "'");
  }
}

}  // namespace roadcal
