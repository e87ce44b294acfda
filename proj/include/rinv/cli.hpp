// Command-line front end. `run_cli` returns the process exit status:
// 0 success, 1 runtime failure, 2 usage or configuration error.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rinv/config.hpp"
#include "rinv/pipeline.hpp"

namespace rinv {

inline PipelineConfig load_pipeline_config(const std::string& path) {
  if (path.empty()) return PipelineConfig{};
  return pipeline_config_from_json(read_json_file(path));
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Moving-object detection from a translating camera via the range-invariant flow transform", "rinv"};
  app.require_subcommand(1);

  std::string config_path, out_dir, scene_path, frames_dir, flow_dir, flow_file, lookup_stem, pred_dir, gt_dir;
  std::optional<std::uint64_t> seed;

  auto* synth = app.add_subcommand("synth", "Render a synthetic dataset from a scene config");
  synth->add_option("--config", scene_path, "Scene config JSON")->required();
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--seed", seed, "Override the scene seed");

  auto* flow = app.add_subcommand("flow", "Estimate flow between consecutive frames");
  flow->add_option("--frames", frames_dir, "Directory of frame_NNNNNN.png/.pgm")->required();
  flow->add_option("--config", config_path, "Pipeline config JSON");
  flow->add_option("--out", out_dir, "Output directory")->required();

  auto* lookup = app.add_subcommand("lookup", "Synthesize the lookup image");
  lookup->add_option("--config", config_path, "Pipeline config JSON (needs camera)")->required();
  lookup->add_option("--out", out_dir, "Output directory")->required();

  auto* invariant = app.add_subcommand("invariant", "Ratio, residual and deviation images for one flow file");
  invariant->add_option("--flow", flow_file, "Flow file (.flo)")->required();
  invariant->add_option("--lookup", lookup_stem, "Lookup stem written by `lookup` (path without extension)");
  invariant->add_option("--config", config_path, "Pipeline config JSON");
  invariant->add_option("--out", out_dir, "Output directory")->required();
  invariant->add_option("--seed", seed, "Override the FOE estimation seed");

  auto* detect_cmd = app.add_subcommand("detect", "Detect moving objects");
  auto* flow_opt = detect_cmd->add_option("--flow", flow_dir, "Directory of flow_NNNNNN.flo");
  auto* frames_opt = detect_cmd->add_option("--frames", frames_dir, "Directory of frames (flow is estimated)");
  flow_opt->excludes(frames_opt);
  detect_cmd->add_option("--config", config_path, "Pipeline config JSON");
  detect_cmd->add_option("--out", out_dir, "Output directory")->required();
  detect_cmd->add_option("--seed", seed, "Override the FOE estimation seed");

  auto* eval = app.add_subcommand("eval", "Score predicted masks against ground truth");
  eval->add_option("--pred", pred_dir, "Directory of predicted mask_NNNNNN.png")->required();
  eval->add_option("--gt", gt_dir, "Directory of ground-truth mask_NNNNNN.png")->required();
  eval->add_option("--out", out_dir, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Full pipeline on a scene config or a frame directory");
  auto* scene_opt = run->add_option("--scene", scene_path, "Scene config JSON");
  auto* run_frames = run->add_option("--frames", frames_dir, "Directory of frames");
  scene_opt->excludes(run_frames);
  run->add_option("--config", config_path, "Pipeline config JSON");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override scene and FOE estimation seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    PipelineConfig pc = load_pipeline_config(config_path);
    if (seed && pc.foe.kind == FoeMode::Kind::kEstimate) pc.foe.estimate.seed = *seed;

    if (synth->parsed()) {
      SceneConfig sc = scene_config_from_json(read_json_file(scene_path));
      if (seed) sc.seed = *seed;
      const json manifest = export_sequence(build_scene(sc), out_dir);
      out << "wrote " << manifest.at("frame_count").get<int>() << " frames to " << out_dir << '\n';
    } else if (flow->parsed()) {
      const auto written = cmd_flow(frames_dir, out_dir, pc);
      out << "wrote " << written.size() << " flow files to " << out_dir << '\n';
    } else if (lookup->parsed()) {
      cmd_lookup(pc, out_dir);
      out << "wrote lookup to " << out_dir << '\n';
    } else if (invariant->parsed()) {
      cmd_invariant(flow_file, lookup_stem.empty() ? std::nullopt : std::optional<fs::path>(lookup_stem), out_dir, pc);
      out << "wrote invariant images to " << out_dir << '\n';
    } else if (detect_cmd->parsed()) {
      const auto s = cmd_detect(flow_dir.empty() ? std::nullopt : std::optional<fs::path>(flow_dir),
                                frames_dir.empty() ? std::nullopt : std::optional<fs::path>(frames_dir), out_dir, pc);
      out << "detected on " << s.results.size() << " frames\n";
    } else if (eval->parsed()) {
      const EvalReport r = cmd_eval(pred_dir, gt_dir, out_dir);
      out << "frames " << r.frames_evaluated << " precision " << r.mean_precision << " recall " << r.mean_recall
          << " f1 " << r.mean_f1 << " iou " << r.mean_iou << '\n';
    } else if (run->parsed()) {
      const auto s = cmd_run(scene_path.empty() ? std::nullopt : std::optional<fs::path>(scene_path),
                             frames_dir.empty() ? std::nullopt : std::optional<fs::path>(frames_dir), out_dir, pc,
                             seed);
      out << "processed " << s.detection.results.size() << " frames";
      if (s.eval) out << ", mean f1 " << s.eval->mean_f1;
      out << '\n';
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace rinv
