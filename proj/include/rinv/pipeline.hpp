// Dataset export, lookup files and the command implementations behind the CLI.
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "rinv/camera.hpp"
#include "rinv/config.hpp"
#include "rinv/core.hpp"
#include "rinv/detection.hpp"
#include "rinv/eval.hpp"
#include "rinv/flow.hpp"
#include "rinv/foe.hpp"
#include "rinv/invariant.hpp"
#include "rinv/io.hpp"
#include "rinv/scene.hpp"

namespace rinv {

namespace fs = std::filesystem;

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::kIoFailure, "cannot create directory " + dir.string());
}

inline json flow_format_note() {
  return json{{"magic", kFlowMagic},
              {"layout", "little-endian: float32 magic, int32 width, int32 height, row-major float32 (u, v)"},
              {"invalid", "u = v = NaN"}};
}

// ---- dataset export ----

/// Writes frames, pairwise ground-truth flow, masks, config.json and
/// manifest.json. Returns the manifest.
inline json export_sequence(const Scene& scene, const fs::path& dir) {
  ensure_dir(dir);
  const SceneConfig& cfg = scene.config;
  json frames = json::array();
  std::optional<FoePoint> foe;
  for (int k = 0; k < cfg.frame_count; ++k) {
    const double t = k * cfg.dt;
    write_frame(dir / indexed_name("frame", k, ".png"), render_frame(scene, t));
    json entry{{"index", k},
               {"t", t},
               {"camera_position", cfg::vec(camera_position(cfg, t))},
               {"frame", indexed_name("frame", k, ".png")},
               {"mask", indexed_name("mask", k, ".png")},
               {"flow", nullptr}};
    if (k + 1 < cfg.frame_count) {
      const GroundTruthFrame gt = analytic_flow(scene, t);
      write_flow(dir / indexed_name("flow", k, ".flo"), gt.flow);
      write_mask(dir / indexed_name("mask", k, ".png"), gt.moving_mask);
      entry["flow"] = indexed_name("flow", k, ".flo");
      foe = gt.foe;
    } else {
      write_mask(dir / indexed_name("mask", k, ".png"), moving_mask_at(scene, t));
    }
    frames.push_back(entry);
  }
  json manifest{{"config", to_json(cfg)},
                {"camera", to_json(cfg.camera)},
                {"foe", foe ? to_json(*foe) : json(nullptr)},
                {"frame_count", cfg.frame_count},
                {"frames", frames},
                {"flow_format", flow_format_note()}};
  write_json_file(dir / "config.json", to_json(cfg));
  write_json_file(dir / "manifest.json", manifest);
  return manifest;
}

// ---- lookup files ----

inline json lookup_sidecar(const LookupImage& lookup) {
  return json{{"camera", to_json(lookup.camera)},
              {"foe", to_json(lookup.foe)},
              {"exclusion_radius_px", lookup.exclusion_radius_px},
              {"channels", "u, v = unit radial direction about the FOE; ratio = v / u where |u| > 1e-9"},
              {"flow_format", flow_format_note()}};
}

/// Writes `<stem>.flo` (radial direction) and `<stem>.json` (camera, FOE, exclusion radius).
inline void write_lookup(const fs::path& stem, const LookupImage& lookup) {
  FlowField f(lookup.width(), lookup.height());
  for (std::size_t i = 0; i < f.uv.size(); ++i)
    if (lookup.dir_valid[i]) {
      f.uv[i] = FlowVec{lookup.radial_dir[i].x, lookup.radial_dir[i].y};
      f.valid[i] = 1;
    }
  write_flow(fs::path(stem).replace_extension(".flo"), f);
  write_json_file(fs::path(stem).replace_extension(".json"), lookup_sidecar(lookup));
}

/// Re-synthesizes the lookup from its sidecar and checks the stored direction
/// channel against it (float32 storage, so within 1e-6).
inline LookupImage read_lookup(const fs::path& stem) {
  const json side = read_json_file(fs::path(stem).replace_extension(".json"));
  cfg::require_object(side, "lookup");
  if (!side.contains("camera") || !side.contains("foe")) throw ConfigError("lookup", "sidecar needs camera and foe");
  const CameraModel cam = camera_from_json(side.at("camera"), "lookup.camera");
  const FoePoint foe = foe_point_from_json(side.at("foe"), "lookup.foe");
  const double radius = cfg::required<double>(side, "exclusion_radius_px", "lookup");
  LookupImage lookup = synthesize_lookup(cam, foe, radius);

  const fs::path flo = fs::path(stem).replace_extension(".flo");
  if (fs::exists(flo)) {
    const FlowField f = read_flow(flo);
    require_same_dims(f.uv, lookup.radial_dir, "lookup file vs sidecar camera");
    for (std::size_t i = 0; i < f.uv.size(); ++i) {
      const bool agree = f.valid[i] == lookup.dir_valid[i] &&
                         (!f.valid[i] || (std::abs(f.uv[i].u - lookup.radial_dir[i].x) <= 1e-6 &&
                                          std::abs(f.uv[i].v - lookup.radial_dir[i].y) <= 1e-6));
      if (!agree) throw Error(ErrorCode::kIoFailure, flo.string() + " disagrees with its sidecar");
    }
  }
  return lookup;
}

// ---- FOE resolution ----

struct ResolvedFoe {
  FoePoint foe;
  std::optional<FoeEstimate> estimate;
};

inline ResolvedFoe resolve_foe(const PipelineConfig& pc, const CameraModel& cam, const FlowField* flow) {
  switch (pc.foe.kind) {
    case FoeMode::Kind::kPrincipalPoint: return {FoePoint::principal_point(cam), std::nullopt};
    case FoeMode::Kind::kFromTranslation: return {foe_from_translation(cam, pc.foe.t_dir), std::nullopt};
    case FoeMode::Kind::kEstimate: {
      if (flow == nullptr) throw ConfigError("foe.mode", "'estimate' needs a flow field");
      FoeEstimate e = estimate_foe(*flow, pc.foe.estimate);
      return {e.foe, e};
    }
  }
  throw ConfigError("foe.mode", "unknown");
}

// ---- directory scanning ----

/// Files named `<stem>_NNNNNN<ext>` in dir, keyed by index.
inline std::map<int, fs::path> indexed_files(const fs::path& dir, const std::string& stem,
                                             const std::vector<std::string>& exts) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIoFailure, dir.string() + " is not a directory");
  std::map<int, fs::path> out;
  const std::regex pattern(stem + "_([0-9]{6})(\\.[A-Za-z]+)");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    if (std::find(exts.begin(), exts.end(), detail::lower_ext(entry.path())) == exts.end()) continue;
    out.emplace(std::stoi(m[1].str()), entry.path());
  }
  return out;
}

/// Camera from the config, else from a dataset manifest next to the inputs,
/// else a centered camera of the given size (focal length 1 is a placeholder).
inline CameraModel resolve_camera(const PipelineConfig& pc, const fs::path& input_dir, int width, int height) {
  CameraModel cam;
  if (pc.camera) {
    cam = *pc.camera;
  } else if (fs::exists(input_dir / "manifest.json")) {
    const json m = read_json_file(input_dir / "manifest.json");
    if (!m.contains("camera")) throw ConfigError("manifest.camera", "missing");
    cam = camera_from_json(m.at("camera"), "manifest.camera");
  } else {
    if (pc.foe.kind == FoeMode::Kind::kFromTranslation)
      throw ConfigError("camera", "required for foe mode 'from-translation'");
    cam = CameraModel::centered(1.0, width, height);
  }
  if (cam.width != width || cam.height != height)
    throw ConfigError("camera", "size " + std::to_string(cam.width) + "x" + std::to_string(cam.height) +
                                    " does not match input " + std::to_string(width) + "x" + std::to_string(height));
  return cam;
}

// ---- commands ----

inline std::map<int, fs::path> cmd_flow(const fs::path& frames_dir, const fs::path& out, const PipelineConfig& pc) {
  ensure_dir(out);
  write_json_file(out / "config.json", to_json(pc));
  const auto frames = indexed_files(frames_dir, "frame", {".png", ".pgm"});
  std::map<int, fs::path> written;
  const Exec exec{pc.threads};
  for (auto it = frames.begin(); it != frames.end(); ++it) {
    const auto next = std::next(it);
    if (next == frames.end() || next->first != it->first + 1) continue;
    const FlowField flow = estimate_flow(read_frame(it->second), read_frame(next->second), pc.flow, exec);
    const fs::path path = out / indexed_name("flow", it->first, ".flo");
    write_flow(path, flow);
    written.emplace(it->first, path);
  }
  return written;
}

inline LookupImage cmd_lookup(const PipelineConfig& pc, const fs::path& out) {
  if (!pc.camera) throw ConfigError("camera", "required for lookup");
  ensure_dir(out);
  write_json_file(out / "config.json", to_json(pc));
  const LookupImage lookup = synthesize_lookup(*pc.camera, resolve_foe(pc, *pc.camera, nullptr).foe,
                                               pc.exclusion_radius_px, Exec{pc.threads});
  write_lookup(out / "lookup", lookup);
  RatioImage ratio(lookup.width(), lookup.height());
  ratio.value = lookup.ratio;
  ratio.valid = lookup.ratio_valid;
  write_color_png(out / "lookup_ratio.png", render_invariant(ratio, pc.ratio_vmax));
  return lookup;
}

template <typename Tag>
void write_channel(const fs::path& out, const std::string& stem, const ScalarField<Tag>& img, double vmax) {
  write_scalar_flow(out / (stem + ".flo"), img);
  write_color_png(out / (stem + ".png"), render_invariant(img, vmax));
  write_json_file(out / (stem + ".json"),
                  json{{"channel", std::string(ScalarField<Tag>::channel)}, {"vmax", vmax},
                       {"storage", "u = value, v = 0"}, {"flow_format", flow_format_note()}});
}

/// Ratio, residual and deviation channels for one flow field.
inline void write_invariants(const fs::path& out, const std::string& suffix, const FlowField& flow,
                             const LookupImage& lookup, const PipelineConfig& pc) {
  const Exec exec{pc.threads};
  const RatioImage ratio = ratio_image(flow, kDefaultUEpsilon, exec);
  write_channel(out, "ratio" + suffix, ratio, pc.ratio_vmax);
  write_channel(out, "residual" + suffix, residual_image(ratio, lookup), pc.ratio_vmax);
  write_channel(out, "deviation" + suffix, deviation_image(flow, lookup, pc.detection.min_flow_mag, exec),
                pc.deviation_vmax);
}

inline void cmd_invariant(const fs::path& flow_path, const std::optional<fs::path>& lookup_stem, const fs::path& out,
                          const PipelineConfig& pc) {
  ensure_dir(out);
  write_json_file(out / "config.json", to_json(pc));
  const FlowField flow = read_flow(flow_path);
  LookupImage lookup;
  json foe_log;
  if (lookup_stem) {
    lookup = read_lookup(*lookup_stem);
    require_same_dims(flow.uv, lookup.radial_dir, "flow vs lookup");
  } else {
    const CameraModel cam = resolve_camera(pc, flow_path.parent_path(), flow.width(), flow.height());
    const ResolvedFoe foe = resolve_foe(pc, cam, &flow);
    lookup = synthesize_lookup(cam, foe.foe, pc.exclusion_radius_px, Exec{pc.threads});
    if (foe.estimate) foe_log = to_json(*foe.estimate);
  }
  write_invariants(out, "", flow, lookup, pc);
  write_json_file(out / "invariant_manifest.json",
                  json{{"flow", flow_path.filename().string()}, {"channel", pc.channel},
                       {"foe", to_json(lookup.foe)}, {"foe_estimate", foe_log},
                       {"exclusion_radius_px", lookup.exclusion_radius_px}});
}

struct DetectSummary {
  std::vector<DetectionResult> results;
  std::vector<FoePoint> foes;
};

/// Detects movers in every flow field; writes masks, components.jsonl and
/// detect_manifest.json (per-frame FOE and exclusion radius).
inline DetectSummary detect_flows(const std::map<int, FlowField>& flows, const fs::path& camera_dir,
                                  const fs::path& out, const PipelineConfig& pc) {
  ensure_dir(out);
  write_json_file(out / "config.json", to_json(pc));
  const Exec exec{pc.threads};
  DetectSummary summary;
  std::optional<LookupImage> cached;
  json frames = json::array();
  std::ofstream jsonl(out / "components.jsonl", std::ios::trunc);
  if (!jsonl) throw Error(ErrorCode::kIoFailure, "cannot write components.jsonl");
  for (const auto& [index, flow] : flows) {
    const CameraModel cam = resolve_camera(pc, camera_dir, flow.width(), flow.height());
    const ResolvedFoe foe = resolve_foe(pc, cam, &flow);
    if (!cached || cached->foe.position != foe.foe.position || cached->camera.width != cam.width ||
        cached->camera.height != cam.height)
      cached = synthesize_lookup(cam, foe.foe, pc.exclusion_radius_px, exec);
    DetectionResult r = detect(flow, *cached, pc.detection, index, exec);
    write_mask(out / indexed_name("mask", index, ".png"), r.mask);
    jsonl << to_json(r).dump() << '\n';
    json entry{{"index", index}, {"foe", to_json(foe.foe)}, {"exclusion_radius_px", pc.exclusion_radius_px},
               {"components", r.components.size()}};
    if (foe.estimate) entry["foe_estimate"] = to_json(*foe.estimate);
    frames.push_back(entry);
    summary.foes.push_back(foe.foe);
    summary.results.push_back(std::move(r));
  }
  if (!jsonl) throw Error(ErrorCode::kIoFailure, "short write to components.jsonl");
  write_json_file(out / "detect_manifest.json", json{{"foe_mode", to_string(pc.foe.kind)}, {"frames", frames}});
  return summary;
}

inline std::map<int, FlowField> load_flows(const fs::path& dir) {
  std::map<int, FlowField> flows;
  for (const auto& [index, path] : indexed_files(dir, "flow", {".flo"})) flows.emplace(index, read_flow(path));
  return flows;
}

inline DetectSummary cmd_detect(const std::optional<fs::path>& flow_dir, const std::optional<fs::path>& frames_dir,
                                const fs::path& out, const PipelineConfig& pc) {
  if (flow_dir) return detect_flows(load_flows(*flow_dir), *flow_dir, out, pc);
  if (!frames_dir) throw ConfigError("input", "detect needs --flow or --frames");
  cmd_flow(*frames_dir, out / "flow", pc);
  return detect_flows(load_flows(out / "flow"), *frames_dir, out, pc);
}

/// Pairs pred/mask_N with gt/mask_N for every N present in pred. When pred
/// holds a detect_manifest.json, each frame's FOE exclusion disk is left out.
inline EvalReport cmd_eval(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out) {
  ensure_dir(out);
  const auto pred = indexed_files(pred_dir, "mask", {".png", ".pgm"});
  const auto gt = indexed_files(gt_dir, "mask", {".png", ".pgm"});
  std::map<int, ExclusionZone> zones;
  if (fs::exists(pred_dir / "detect_manifest.json")) {
    const json m = read_json_file(pred_dir / "detect_manifest.json");
    for (const auto& f : m.at("frames"))
      zones[f.at("index").get<int>()] = ExclusionZone{cfg::as<Vec2>(f.at("foe").at("position"), "foe.position"),
                                                     f.at("exclusion_radius_px").get<double>()};
  }
  EvalReport report;
  std::vector<int> indices;
  for (const auto& [index, path] : pred) {
    const auto g = gt.find(index);
    if (g == gt.end()) throw Error(ErrorCode::kDimensionMismatch, "no ground-truth mask for frame " + std::to_string(index));
    const auto z = zones.find(index);
    std::optional<ExclusionZone> zone;
    if (z != zones.end()) zone = z->second;
    report.frames.push_back(score_masks(read_mask(path), read_mask(g->second), zone));
    indices.push_back(index);
  }
  finalize_means(report);
  json j = to_json(report);
  j["frame_indices"] = indices;
  j["excluded_zone"] = zones.empty() ? json(nullptr)
                                     : json{{"source", "detect_manifest.json"},
                                            {"note", "pixels inside each frame's FOE exclusion disk are not counted"}};
  write_json_file(out / "report.json", j);
  return report;
}

struct RunSummary {
  DetectSummary detection;
  std::optional<EvalReport> eval;
};

/// Scene config -> dataset -> flow -> invariants -> detection -> evaluation,
/// or frames -> flow -> invariants -> detection when no scene is given.
inline RunSummary cmd_run(const std::optional<fs::path>& scene_path, const std::optional<fs::path>& frames_dir,
                          const fs::path& out, PipelineConfig pc, std::optional<std::uint64_t> seed) {
  ensure_dir(out);
  if (seed && pc.foe.kind == FoeMode::Kind::kEstimate) pc.foe.estimate.seed = *seed;
  RunSummary summary;
  fs::path input_dir;
  std::map<int, FlowField> flows;
  if (scene_path) {
    SceneConfig sc = scene_config_from_json(read_json_file(*scene_path));
    if (seed) sc.seed = *seed;
    if (!pc.camera) pc.camera = sc.camera;
    input_dir = out / "dataset";
    export_sequence(build_scene(sc), input_dir);
    if (pc.flow_source == "ground-truth") {
      flows = load_flows(input_dir);
    } else {
      cmd_flow(input_dir, out / "flow", pc);
      flows = load_flows(out / "flow");
    }
  } else if (frames_dir) {
    input_dir = *frames_dir;
    cmd_flow(*frames_dir, out / "flow", pc);
    flows = load_flows(out / "flow");
  } else {
    throw ConfigError("input", "run needs --scene or --frames");
  }
  write_json_file(out / "config.json", to_json(pc));

  summary.detection = detect_flows(flows, input_dir, out / "detect", pc);
  ensure_dir(out / "invariant");
  std::size_t i = 0;
  for (const auto& [index, flow] : flows) {
    const CameraModel cam = resolve_camera(pc, input_dir, flow.width(), flow.height());
    const LookupImage lookup = synthesize_lookup(cam, summary.detection.foes[i++], pc.exclusion_radius_px);
    write_invariants(out / "invariant", indexed_name("", index, ""), flow, lookup, pc);
  }
  if (scene_path) summary.eval = cmd_eval(out / "detect", input_dir, out / "eval");
  return summary;
}

}  // namespace rinv
