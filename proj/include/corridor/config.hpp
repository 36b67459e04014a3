#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "corridor/camera.hpp"
#include "corridor/fusion.hpp"
#include "corridor/io.hpp"
#include "corridor/postprocess.hpp"
#include "corridor/segmenter.hpp"

namespace corridor {

/// Environment variable naming the default pipeline config file.
inline constexpr const char* kConfigEnvVar = "CORRIDORPP_CONFIG";

struct PipelineConfig {
  CameraModel camera;
  PostprocessParams postprocess;
  FusionConfig fusion;
  SegmenterConfig segmenter;
  double tolerance = 0.10;
  int jobs = 1;
  bool postprocess_enabled = true;
  bool fusion_enabled = false;

  void validate() const {
    camera.validate();
    if (postprocess.closing_radius < 0) fail(Errc::invalid_argument, "postprocess.closing_radius must be >= 0");
    if (postprocess.max_passes < 1) fail(Errc::invalid_argument, "postprocess.max_passes must be >= 1");
    postprocess.drop.validate();
    fusion.validate();
    segmenter.validate();
    if (!(tolerance >= 0.0 && tolerance < 1.0)) fail(Errc::invalid_argument, "tolerance must be in [0, 1)");
    if (jobs < 1) fail(Errc::invalid_argument, "jobs must be >= 1");
  }
};

inline KeyValues to_key_values(const PipelineConfig& cfg) {
  KeyValues kv;
  put_camera(kv, cfg.camera);
  kv.set("postprocess.enabled", cfg.postprocess_enabled);
  kv.set("postprocess.closing_radius", cfg.postprocess.closing_radius);
  kv.set("postprocess.max_passes", cfg.postprocess.max_passes);
  kv.set("postprocess.smooth_window", cfg.postprocess.drop.smooth_window);
  kv.set("postprocess.drop_ratio", cfg.postprocess.drop.drop_ratio);
  kv.set("postprocess.persistence", cfg.postprocess.drop.persistence);
  kv.set("fusion.enabled", cfg.fusion_enabled);
  kv.set("fusion.energy_threshold", static_cast<double>(cfg.fusion.energy_threshold));
  kv.set("fusion.min_blob_area", cfg.fusion.min_blob_area);
  kv.set("fusion.blob_dilation", cfg.fusion.blob_dilation);
  kv.set("fusion.row_dependent_min_area", cfg.fusion.row_dependent_min_area);
  kv.set("fusion.min_object_size_m", cfg.fusion.min_object_size_m);
  kv.set("segmenter.classes", cfg.segmenter.classes);
  kv.set("segmenter.inlier_logit", static_cast<double>(cfg.segmenter.inlier_logit));
  kv.set("segmenter.outlier_logit", static_cast<double>(cfg.segmenter.outlier_logit));
  kv.set("segmenter.wrap_channel_fraction", cfg.segmenter.wrap_channel_fraction);
  kv.set("eval.tolerance", cfg.tolerance);
  kv.set("jobs", cfg.jobs);
  return kv;
}

inline PipelineConfig pipeline_config_from(const KeyValues& kv) {
  static const char* const known[] = {
      "camera.focal_length",       "camera.cx",
      "camera.cy",                 "camera.width",
      "camera.height",             "camera.mount_height",
      "camera.pitch",              "postprocess.enabled",
      "postprocess.closing_radius", "postprocess.max_passes",
      "postprocess.smooth_window", "postprocess.drop_ratio",
      "postprocess.persistence",   "fusion.enabled",
      "fusion.energy_threshold",   "fusion.min_blob_area",
      "fusion.blob_dilation",      "fusion.row_dependent_min_area",
      "fusion.min_object_size_m",  "segmenter.classes",
      "segmenter.inlier_logit",    "segmenter.outlier_logit",
      "segmenter.wrap_channel_fraction", "eval.tolerance",
      "jobs",
  };
  for (const auto& [k, v] : kv.entries()) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) fail(Errc::config_parse_error, "unknown config key '" + k + "'");
  }
  PipelineConfig cfg;
  read_camera(kv, cfg.camera);
  kv.read_if("postprocess.enabled", cfg.postprocess_enabled);
  kv.read_if("postprocess.closing_radius", cfg.postprocess.closing_radius);
  kv.read_if("postprocess.max_passes", cfg.postprocess.max_passes);
  kv.read_if("postprocess.smooth_window", cfg.postprocess.drop.smooth_window);
  kv.read_if("postprocess.drop_ratio", cfg.postprocess.drop.drop_ratio);
  kv.read_if("postprocess.persistence", cfg.postprocess.drop.persistence);
  kv.read_if("fusion.enabled", cfg.fusion_enabled);
  kv.read_if("fusion.energy_threshold", cfg.fusion.energy_threshold);
  kv.read_if("fusion.min_blob_area", cfg.fusion.min_blob_area);
  kv.read_if("fusion.blob_dilation", cfg.fusion.blob_dilation);
  kv.read_if("fusion.row_dependent_min_area", cfg.fusion.row_dependent_min_area);
  kv.read_if("fusion.min_object_size_m", cfg.fusion.min_object_size_m);
  kv.read_if("segmenter.classes", cfg.segmenter.classes);
  kv.read_if("segmenter.inlier_logit", cfg.segmenter.inlier_logit);
  kv.read_if("segmenter.outlier_logit", cfg.segmenter.outlier_logit);
  kv.read_if("segmenter.wrap_channel_fraction", cfg.segmenter.wrap_channel_fraction);
  kv.read_if("eval.tolerance", cfg.tolerance);
  kv.read_if("jobs", cfg.jobs);
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(Errc::config_parse_error, e.what());
  }
  return cfg;
}

/// Explicit path first, then $CORRIDORPP_CONFIG, then built-in defaults.
inline PipelineConfig load_pipeline_config(const std::optional<fs::path>& path = std::nullopt) {
  if (path) return pipeline_config_from(read_key_values(*path));
  if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') {
    return pipeline_config_from(read_key_values(env));
  }
  return PipelineConfig{};
}

/// Test-track protocol: obstacle scenes per distance bin (sprites x image
/// variants) and obstacle-free runs for the false-cut check.
struct ProtocolConfig {
  std::string preset = "full";
  std::vector<double> bins{25.0, 50.0, 100.0, 200.0, 300.0};
  int sprites = 28;
  int variants = 3;
  int fp_runs = 12;
  int frames_per_run = 200;
  std::uint64_t master_seed = 7;
  double lane_width = 3.5;
  double max_corridor_range = 400.0;
  double feather_radius = 2.0;
  double expected_min_range = 150.0;
  PlacementRanges ranges;
  CameraModel camera;

  int scenes_per_bin() const { return sprites * variants; }
  int obstacle_scenes() const { return static_cast<int>(bins.size()) * scenes_per_bin(); }
  int clean_frames() const { return fp_runs * frames_per_run; }

  void validate() const {
    camera.validate();
    for (double b : bins) {
      if (!(b > 0.0)) fail(Errc::invalid_argument, "distance bins must be > 0");
    }
    if (sprites < 1 || variants < 1) fail(Errc::invalid_argument, "protocol needs sprites and variants >= 1");
    if (fp_runs < 0 || frames_per_run < 0) fail(Errc::invalid_argument, "fp runs and frames must be >= 0");
    if (!(lane_width > 0.0 && max_corridor_range > 0.0)) fail(Errc::invalid_argument, "bad lane geometry");
    if (!(expected_min_range > 0.0)) fail(Errc::invalid_argument, "expected_min_range must be > 0");
  }
};

inline ProtocolConfig protocol_preset(std::string_view name) {
  ProtocolConfig p;
  if (name == "full") return p;
  if (name == "tiny") {
    p.preset = "tiny";
    p.sprites = 4;
    p.variants = 1;
    p.fp_runs = 2;
    p.frames_per_run = 3;
    return p;
  }
  fail(Errc::config_parse_error, "unknown protocol preset '" + std::string(name) + "' (expected full or tiny)");
}

inline KeyValues to_key_values(const ProtocolConfig& p) {
  KeyValues kv;
  kv.set("preset", p.preset);
  std::string bins;
  for (double b : p.bins) bins += (bins.empty() ? "" : ",") + format_double(b);
  kv.set("bins", bins);
  kv.set("sprites", p.sprites);
  kv.set("variants", p.variants);
  kv.set("fp_runs", p.fp_runs);
  kv.set("frames_per_run", p.frames_per_run);
  kv.set("master_seed", p.master_seed);
  kv.set("lane_width", p.lane_width);
  kv.set("max_corridor_range", p.max_corridor_range);
  kv.set("feather_radius", p.feather_radius);
  kv.set("expected_min_range", p.expected_min_range);
  kv.set("size_jitter", p.ranges.size_jitter);
  kv.set("max_rotation_deg", p.ranges.max_rotation_deg);
  put_camera(kv, p.camera);
  return kv;
}

inline ProtocolConfig protocol_from(const KeyValues& kv) {
  ProtocolConfig p = protocol_preset(kv.contains("preset") ? std::string_view(kv.get("preset")) : "full");
  if (kv.contains("bins")) {
    p.bins.clear();
    std::string_view s = kv.get("bins");
    while (!s.empty()) {
      const std::size_t comma = s.find(',');
      p.bins.push_back(detail::parse_value<double>("bins", detail::trim(s.substr(0, comma))));
      s = comma == std::string_view::npos ? std::string_view{} : s.substr(comma + 1);
    }
  }
  kv.read_if("sprites", p.sprites);
  kv.read_if("variants", p.variants);
  kv.read_if("fp_runs", p.fp_runs);
  kv.read_if("frames_per_run", p.frames_per_run);
  kv.read_if("master_seed", p.master_seed);
  kv.read_if("lane_width", p.lane_width);
  kv.read_if("max_corridor_range", p.max_corridor_range);
  kv.read_if("feather_radius", p.feather_radius);
  kv.read_if("expected_min_range", p.expected_min_range);
  kv.read_if("size_jitter", p.ranges.size_jitter);
  kv.read_if("max_rotation_deg", p.ranges.max_rotation_deg);
  read_camera(kv, p.camera);
  try {
    p.validate();
  } catch (const Error& e) {
    fail(Errc::config_parse_error, e.what());
  }
  return p;
}

}  // namespace corridor
