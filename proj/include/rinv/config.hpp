// JSON forms of the configuration and report types.
//
// Parsing is strict: unknown keys and wrongly typed values raise ConfigError
// naming the dotted path of the offending field.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>

#include <json.hpp>

#include "rinv/camera.hpp"
#include "rinv/core.hpp"
#include "rinv/detection.hpp"
#include "rinv/eval.hpp"
#include "rinv/flow.hpp"
#include "rinv/foe.hpp"
#include "rinv/scene.hpp"

namespace rinv {

using json = nlohmann::ordered_json;

namespace cfg {

inline std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

inline void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  require_object(j, path);
  for (const auto& [k, _] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError(join(path, k), "unknown field");
  }
}

template <typename T>
T as(const json& v, const std::string& path) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(path, "expected a number");
      return v.get<double>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, Vec2>) {
      if (!v.is_array() || v.size() != 2) throw ConfigError(path, "expected [x, y]");
      return Vec2(as<double>(v[0], path + "[0]"), as<double>(v[1], path + "[1]"));
    } else if constexpr (std::is_same_v<T, Vec3>) {
      if (!v.is_array() || v.size() != 3) throw ConfigError(path, "expected [x, y, z]");
      return Vec3(as<double>(v[0], path + "[0]"), as<double>(v[1], path + "[1]"), as<double>(v[2], path + "[2]"));
    } else {
      return v.get<T>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, e.what());
  }
}

template <typename T>
T required(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(join(path, key), "missing");
  return as<T>(j.at(key), join(path, key));
}

template <typename T>
T optional(const json& j, const char* key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  return as<T>(j.at(key), join(path, key));
}

inline json vec(const Vec2& v) { return json::array({v.x(), v.y()}); }
inline json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace cfg

// ---- camera ----

inline json to_json(const CameraModel& cam) {
  return json{{"focal_length_px", cam.focal_length_px},
              {"principal_point", cfg::vec(cam.principal_point)},
              {"width", cam.width},
              {"height", cam.height}};
}

/// A missing principal point defaults to the image center.
inline CameraModel camera_from_json(const json& j, const std::string& path = "camera") {
  cfg::allow_keys(j, path, {"focal_length_px", "principal_point", "width", "height"});
  CameraModel cam;
  cam.focal_length_px = cfg::required<double>(j, "focal_length_px", path);
  cam.width = cfg::required<int>(j, "width", path);
  cam.height = cfg::required<int>(j, "height", path);
  cam.principal_point = cfg::optional<Vec2>(j, "principal_point", path,
                                            Vec2((cam.width - 1) / 2.0, (cam.height - 1) / 2.0));
  try {
    cam.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + e.field().substr(std::string("camera").size()), e.what());
  }
  return cam;
}

inline json to_json(const FoePoint& foe) {
  return json{{"position", cfg::vec(foe.position)}, {"source", to_string(foe.source)}};
}

inline FoePoint foe_point_from_json(const json& j, const std::string& path = "foe") {
  cfg::allow_keys(j, path, {"position", "source"});
  return FoePoint{cfg::required<Vec2>(j, "position", path),
                  foe_source_from_string(cfg::required<std::string>(j, "source", path))};
}

// ---- flow / detection parameters ----

inline json to_json(const FlowParams& p) {
  return json{{"pyramid_levels", p.pyramid_levels},
              {"window_radius_px", p.window_radius_px},
              {"iterations_per_level", p.iterations_per_level},
              {"downscale_factor", p.downscale_factor},
              {"min_eigenvalue", p.min_eigenvalue}};
}

inline FlowParams flow_params_from_json(const json& j, const std::string& path = "flow") {
  cfg::allow_keys(j, path, {"pyramid_levels", "window_radius_px", "iterations_per_level", "downscale_factor",
                            "min_eigenvalue"});
  FlowParams p;
  p.pyramid_levels = cfg::optional<int>(j, "pyramid_levels", path, p.pyramid_levels);
  p.window_radius_px = cfg::optional<int>(j, "window_radius_px", path, p.window_radius_px);
  p.iterations_per_level = cfg::optional<int>(j, "iterations_per_level", path, p.iterations_per_level);
  p.downscale_factor = cfg::optional<double>(j, "downscale_factor", path, p.downscale_factor);
  p.min_eigenvalue = cfg::optional<double>(j, "min_eigenvalue", path, p.min_eigenvalue);
  p.validate();
  return p;
}

inline json to_json(const DetectionParams& p) {
  return json{{"deviation_threshold", p.deviation_threshold},
              {"min_flow_mag", p.min_flow_mag},
              {"open_radius_px", p.open_radius_px},
              {"close_radius_px", p.close_radius_px},
              {"min_area_px", p.min_area_px}};
}

inline DetectionParams detection_params_from_json(const json& j, const std::string& path = "detection") {
  cfg::allow_keys(j, path, {"deviation_threshold", "min_flow_mag", "open_radius_px", "close_radius_px", "min_area_px"});
  DetectionParams p;
  p.deviation_threshold = cfg::optional<double>(j, "deviation_threshold", path, p.deviation_threshold);
  p.min_flow_mag = cfg::optional<double>(j, "min_flow_mag", path, p.min_flow_mag);
  p.open_radius_px = cfg::optional<int>(j, "open_radius_px", path, p.open_radius_px);
  p.close_radius_px = cfg::optional<int>(j, "close_radius_px", path, p.close_radius_px);
  p.min_area_px = cfg::optional<int>(j, "min_area_px", path, p.min_area_px);
  p.validate();
  return p;
}

// ---- scene ----

inline json to_json(const SceneConfig& c) {
  json speed = c.speed.kind == SpeedProfile::Kind::kConstant
                   ? json{{"type", "constant"}, {"v", c.speed.v0}}
                   : json{{"type", "linear"}, {"v0", c.speed.v0}, {"a", c.speed.accel}};
  json movers = json::array();
  for (const auto& m : c.movers)
    movers.push_back(json{{"center", cfg::vec(m.center)},
                          {"half_extent", cfg::vec(m.half_extent)},
                          {"world_velocity", cfg::vec(m.world_velocity)},
                          {"point_count", m.point_count}});
  return json{{"camera", to_json(c.camera)},
              {"t_dir", cfg::vec(c.t_dir)},
              {"speed_profile", speed},
              {"frame_count", c.frame_count},
              {"dt", c.dt},
              {"static_points",
               {{"count", c.static_points.count},
                {"range", json::array({c.static_points.range_min, c.static_points.range_max})},
                {"sprite_radius_px", c.static_points.sprite_radius_px}}},
              {"movers", movers},
              {"background", {{"seed", c.background.seed}, {"octaves", c.background.octaves}}},
              {"seed", c.seed}};
}

/// t_dir is normalized on read; validation then checks everything else.
inline SceneConfig scene_config_from_json(const json& j) {
  cfg::allow_keys(j, "", {"camera", "t_dir", "speed_profile", "frame_count", "dt", "static_points", "movers",
                          "background", "seed"});
  SceneConfig c;
  if (!j.contains("camera")) throw ConfigError("camera", "missing");
  c.camera = camera_from_json(j.at("camera"));
  const Vec3 t = cfg::optional<Vec3>(j, "t_dir", "", c.t_dir);
  if (!(t.norm() > 0.0) || !t.allFinite()) throw ConfigError("t_dir", "must be a nonzero finite vector");
  c.t_dir = t.normalized();

  if (j.contains("speed_profile")) {
    const json& s = j.at("speed_profile");
    const auto type = cfg::required<std::string>(s, "type", "speed_profile");
    if (type == "constant") {
      cfg::allow_keys(s, "speed_profile", {"type", "v"});
      c.speed = SpeedProfile::constant(cfg::required<double>(s, "v", "speed_profile"));
    } else if (type == "linear") {
      cfg::allow_keys(s, "speed_profile", {"type", "v0", "a"});
      c.speed = SpeedProfile::linear(cfg::required<double>(s, "v0", "speed_profile"),
                                     cfg::required<double>(s, "a", "speed_profile"));
    } else {
      throw ConfigError("speed_profile.type", "must be 'constant' or 'linear'");
    }
  }
  c.frame_count = cfg::optional<int>(j, "frame_count", "", c.frame_count);
  c.dt = cfg::optional<double>(j, "dt", "", c.dt);
  if (j.contains("static_points")) {
    const json& s = j.at("static_points");
    cfg::allow_keys(s, "static_points", {"count", "range", "sprite_radius_px"});
    c.static_points.count = cfg::optional<int>(s, "count", "static_points", c.static_points.count);
    const Vec2 range = cfg::optional<Vec2>(s, "range", "static_points",
                                           Vec2(c.static_points.range_min, c.static_points.range_max));
    c.static_points.range_min = range.x();
    c.static_points.range_max = range.y();
    c.static_points.sprite_radius_px =
        cfg::optional<double>(s, "sprite_radius_px", "static_points", c.static_points.sprite_radius_px);
  }
  if (j.contains("movers")) {
    const json& arr = j.at("movers");
    if (!arr.is_array()) throw ConfigError("movers", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "movers[" + std::to_string(i) + "]";
      cfg::allow_keys(arr[i], path, {"center", "half_extent", "world_velocity", "point_count"});
      MoverSpec m;
      m.center = cfg::required<Vec3>(arr[i], "center", path);
      m.half_extent = cfg::optional<Vec3>(arr[i], "half_extent", path, m.half_extent);
      m.world_velocity = cfg::optional<Vec3>(arr[i], "world_velocity", path, m.world_velocity);
      m.point_count = cfg::optional<int>(arr[i], "point_count", path, m.point_count);
      c.movers.push_back(m);
    }
  }
  if (j.contains("background")) {
    const json& b = j.at("background");
    cfg::allow_keys(b, "background", {"seed", "octaves"});
    c.background.seed = cfg::optional<std::uint64_t>(b, "seed", "background", c.background.seed);
    c.background.octaves = cfg::optional<int>(b, "octaves", "background", c.background.octaves);
  }
  c.seed = cfg::optional<std::uint64_t>(j, "seed", "", c.seed);
  c.validate();
  return c;
}

// ---- pipeline ----

struct FoeMode {
  enum class Kind { kPrincipalPoint, kFromTranslation, kEstimate };
  Kind kind = Kind::kPrincipalPoint;
  Vec3 t_dir{0.0, 0.0, 1.0};
  FoeParams estimate;
};

inline const char* to_string(FoeMode::Kind k) {
  switch (k) {
    case FoeMode::Kind::kPrincipalPoint: return "principal-point";
    case FoeMode::Kind::kFromTranslation: return "from-translation";
    case FoeMode::Kind::kEstimate: return "estimate";
  }
  return "unknown";
}

struct PipelineConfig {
  std::optional<CameraModel> camera;
  FlowParams flow;
  DetectionParams detection;
  FoeMode foe;
  double exclusion_radius_px = kDefaultExclusionRadiusPx;
  std::string channel = "deviation";
  double ratio_vmax = kDefaultRatioVmax;
  double deviation_vmax = kDefaultDeviationVmax;
  /// For `run` on a scene: "estimated" (flow from rendered frames) or "ground-truth".
  std::string flow_source = "estimated";
  int threads = 1;
};

inline json to_json(const PipelineConfig& c) {
  json foe{{"mode", to_string(c.foe.kind)}};
  if (c.foe.kind == FoeMode::Kind::kFromTranslation) foe["t_dir"] = cfg::vec(c.foe.t_dir);
  if (c.foe.kind == FoeMode::Kind::kEstimate) {
    foe["seed"] = c.foe.estimate.seed;
    foe["iters"] = c.foe.estimate.ransac_iters;
    foe["tol"] = c.foe.estimate.inlier_sin_tol;
    foe["min_flow_mag"] = c.foe.estimate.min_flow_mag;
  }
  json j;
  if (c.camera) j["camera"] = to_json(*c.camera);
  j["flow"] = to_json(c.flow);
  j["detection"] = to_json(c.detection);
  j["foe"] = foe;
  j["exclusion_radius_px"] = c.exclusion_radius_px;
  j["channel"] = c.channel;
  j["render"] = {{"ratio_vmax", c.ratio_vmax}, {"deviation_vmax", c.deviation_vmax}};
  j["flow_source"] = c.flow_source;
  j["threads"] = c.threads;
  return j;
}

inline PipelineConfig pipeline_config_from_json(const json& j) {
  cfg::allow_keys(j, "", {"camera", "flow", "detection", "foe", "exclusion_radius_px", "channel", "render",
                          "flow_source", "threads"});
  PipelineConfig c;
  if (j.contains("camera")) c.camera = camera_from_json(j.at("camera"));
  if (j.contains("flow")) c.flow = flow_params_from_json(j.at("flow"));
  if (j.contains("detection")) c.detection = detection_params_from_json(j.at("detection"));
  if (j.contains("foe")) {
    const json& f = j.at("foe");
    cfg::require_object(f, "foe");
    const auto mode = cfg::required<std::string>(f, "mode", "foe");
    if (mode == "principal-point") {
      cfg::allow_keys(f, "foe", {"mode"});
      c.foe.kind = FoeMode::Kind::kPrincipalPoint;
    } else if (mode == "from-translation") {
      cfg::allow_keys(f, "foe", {"mode", "t_dir"});
      c.foe.kind = FoeMode::Kind::kFromTranslation;
      const Vec3 t = cfg::required<Vec3>(f, "t_dir", "foe");
      if (!(t.norm() > 0.0)) throw ConfigError("foe.t_dir", "must be nonzero");
      if (!(std::abs(t.normalized().z()) > 1e-6)) throw ConfigError("foe.t_dir", "lateral motion is unsupported");
      c.foe.t_dir = t.normalized();
    } else if (mode == "estimate") {
      cfg::allow_keys(f, "foe", {"mode", "seed", "iters", "tol", "min_flow_mag"});
      c.foe.kind = FoeMode::Kind::kEstimate;
      c.foe.estimate.seed = cfg::required<std::uint64_t>(f, "seed", "foe");
      c.foe.estimate.ransac_iters = cfg::optional<int>(f, "iters", "foe", c.foe.estimate.ransac_iters);
      c.foe.estimate.inlier_sin_tol = cfg::optional<double>(f, "tol", "foe", c.foe.estimate.inlier_sin_tol);
      c.foe.estimate.min_flow_mag = cfg::optional<double>(f, "min_flow_mag", "foe", c.foe.estimate.min_flow_mag);
      c.foe.estimate.validate();
    } else {
      throw ConfigError("foe.mode", "must be one of principal-point, from-translation, estimate");
    }
  }
  c.exclusion_radius_px = cfg::optional<double>(j, "exclusion_radius_px", "", c.exclusion_radius_px);
  if (!(c.exclusion_radius_px >= 0.0)) throw ConfigError("exclusion_radius_px", "must be >= 0");
  c.channel = cfg::optional<std::string>(j, "channel", "", c.channel);
  if (c.channel != "deviation" && c.channel != "ratio") throw ConfigError("channel", "must be 'deviation' or 'ratio'");
  if (j.contains("render")) {
    const json& r = j.at("render");
    cfg::allow_keys(r, "render", {"ratio_vmax", "deviation_vmax"});
    c.ratio_vmax = cfg::optional<double>(r, "ratio_vmax", "render", c.ratio_vmax);
    c.deviation_vmax = cfg::optional<double>(r, "deviation_vmax", "render", c.deviation_vmax);
    if (!(c.ratio_vmax > 0.0)) throw ConfigError("render.ratio_vmax", "must be > 0");
    if (!(c.deviation_vmax > 0.0)) throw ConfigError("render.deviation_vmax", "must be > 0");
  }
  c.flow_source = cfg::optional<std::string>(j, "flow_source", "", c.flow_source);
  if (c.flow_source != "estimated" && c.flow_source != "ground-truth")
    throw ConfigError("flow_source", "must be 'estimated' or 'ground-truth'");
  c.threads = cfg::optional<int>(j, "threads", "", c.threads);
  if (c.threads < 1) throw ConfigError("threads", "must be >= 1");
  return c;
}

// ---- reports ----

inline json to_json(const FoeEstimate& e) {
  return json{{"foe", to_json(e.foe)}, {"inlier_fraction", e.inlier_fraction}, {"rms_sin_deviation", e.rms_sin_deviation}};
}

inline json to_json(const DetectionResult& r) {
  json comps = json::array();
  for (const auto& c : r.components)
    comps.push_back(json{{"id", c.id},
                         {"area_px", c.area_px},
                         {"bbox", json::array({c.bbox.x0, c.bbox.y0, c.bbox.x1, c.bbox.y1})},
                         {"centroid", json::array({c.centroid_x, c.centroid_y})}});
  return json{{"frame_index", r.frame_index}, {"components", comps}};
}

inline json to_json(const MaskScores& s) {
  return json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"iou", s.iou},
              {"tp", s.tp},               {"fp", s.fp},         {"fn", s.fn}};
}

inline json to_json(const EvalReport& r) {
  json frames = json::array();
  for (const auto& f : r.frames) frames.push_back(to_json(f));
  json j{{"frames_evaluated", r.frames_evaluated},
         {"mean", {{"precision", r.mean_precision}, {"recall", r.mean_recall}, {"f1", r.mean_f1}, {"iou", r.mean_iou}}},
         {"frames", frames}};
  if (r.exclusion)
    j["excluded_zone"] = {{"center", cfg::vec(r.exclusion->center)}, {"radius_px", r.exclusion->radius_px},
                          {"note", "pixels inside the FOE exclusion disk are not counted"}};
  else
    j["excluded_zone"] = nullptr;
  return j;
}

// ---- files ----

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.filename().string(), std::string("invalid JSON: ") + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIoFailure, "short write to " + path.string());
}

}  // namespace rinv
